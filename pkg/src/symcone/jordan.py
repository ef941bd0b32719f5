"""Euclidean Jordan algebra arithmetic for products of orthant, second-order and PSD cones.

Elements live in *canonical* coordinates chosen so that the Euclidean dot
product of two coordinate vectors is the Jordan inner product
``<x, y> = trace(x o y)``:

* ``Orthant(n)``: raw coordinates; contributes ``n`` rank-one simple blocks.
* ``SecondOrder(n)``: natural coordinates ``(x1, xbar)`` scaled by ``sqrt(2)``
  (the natural inner product carries a factor 2).
* ``Psd(n)``: ``svec`` of the symmetric matrix (upper triangle, row-major,
  off-diagonal entries scaled by ``sqrt(2)``).

With these coordinates the kernel projection used by the solver is a plain
Euclidean projection.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence, Union

import numpy as np

SQRT2 = math.sqrt(2.0)

#: below this norm of ``xbar`` a second-order block uses the frame direction ``(1, 0, ..., 0)``
SOC_ZERO_TOL = 1e-14


class StructureMismatch(ValueError):
    """Two elements (or an element and an operator) have different cone structures."""


class SingularElementError(ArithmeticError):
    """Raised when inverting an element with a zero eigenvalue."""


class EigensolverError(RuntimeError):
    def __init__(self, block: int, message: str):
        super().__init__(f"eigensolver failed on simple block {block}: {message}")
        self.block = block


# ---------------------------------------------------------------------------
# block kinds


@dataclass(frozen=True)
class Orthant:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"Orthant needs a positive integer size, got {self.n!r}")

    @property
    def dim(self) -> int:
        return self.n

    @property
    def rank(self) -> int:
        return self.n

    def __str__(self):
        return f"orthant:{self.n}"


@dataclass(frozen=True)
class SecondOrder:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"SecondOrder needs n >= 2, got {self.n!r}")

    @property
    def dim(self) -> int:
        return self.n

    @property
    def rank(self) -> int:
        return 2

    def __str__(self):
        return f"soc:{self.n}"


@dataclass(frozen=True)
class Psd:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"Psd needs a positive integer order, got {self.n!r}")

    @property
    def dim(self) -> int:
        return self.n * (self.n + 1) // 2

    @property
    def rank(self) -> int:
        return self.n

    def __str__(self):
        return f"psd:{self.n}"


ConeBlockKind = Union[Orthant, SecondOrder, Psd]


def parse_block(text: str) -> ConeBlockKind:
    """Parse ``"psd:20"``, ``"soc:3"`` or ``"orthant:6"``."""
    kind, _, size = text.strip().partition(":")
    try:
        n = int(size)
    except ValueError:
        raise ValueError(f"bad block descriptor {text!r}") from None
    ctor = {"orthant": Orthant, "soc": SecondOrder, "psd": Psd}.get(kind.lower())
    if ctor is None:
        raise ValueError(f"unknown block kind {kind!r}")
    return ctor(n)


# ---------------------------------------------------------------------------
# svec / smat


@lru_cache(maxsize=None)
def _svec_layout(n: int):
    rows, cols = np.triu_indices(n)
    scale = np.where(rows == cols, 1.0, SQRT2)
    return rows, cols, scale


def svec(mat: np.ndarray) -> np.ndarray:
    """Isometric vectorisation of a symmetric matrix (works on stacks ``(..., n, n)``)."""
    mat = np.asarray(mat, dtype=float)
    rows, cols, scale = _svec_layout(mat.shape[-1])
    return mat[..., rows, cols] * scale


def smat(vec: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`svec`."""
    vec = np.asarray(vec, dtype=float)
    rows, cols, scale = _svec_layout(n)
    out = np.zeros(vec.shape[:-1] + (n, n))
    vals = vec / scale
    out[..., rows, cols] = vals
    out[..., cols, rows] = vals
    return out


# ---------------------------------------------------------------------------
# structure


@dataclass(frozen=True)
class SimpleBlock:
    """One simple factor of the cone, with its position in coordinates and in the eigenvalue vector."""

    index: int
    kind: str  # "orthant", "soc" or "psd"
    order: int  # matrix order for psd, vector length for soc, 1 for orthant
    dim: int
    rank: int
    offset: int
    eig_offset: int

    @property
    def coords(self) -> slice:
        return slice(self.offset, self.offset + self.dim)

    @property
    def eigs(self) -> slice:
        return slice(self.eig_offset, self.eig_offset + self.rank)


@dataclass(frozen=True)
class _Group:
    kind: ConeBlockKind
    offset: int
    eig_offset: int
    first_block: int

    @property
    def coords(self) -> slice:
        return slice(self.offset, self.offset + self.kind.dim)

    @property
    def eigs(self) -> slice:
        return slice(self.eig_offset, self.eig_offset + self.kind.rank)


class ConeStructure:
    """Ordered product of cone blocks.

    ``p`` counts simple blocks (an ``Orthant(n)`` adds ``n`` of them), ``r`` is
    the total rank and ``d`` the coordinate dimension.
    """

    def __init__(self, blocks: Sequence[ConeBlockKind]):
        blocks = tuple(parse_block(b) if isinstance(b, str) else b for b in blocks)
        if not blocks:
            raise ValueError("a cone structure needs at least one block")
        groups, simple = [], []
        offset = eig_offset = 0
        for kind in blocks:
            groups.append(_Group(kind, offset, eig_offset, len(simple)))
            if isinstance(kind, Orthant):
                for j in range(kind.n):
                    simple.append(SimpleBlock(len(simple), "orthant", 1, 1, 1, offset + j, eig_offset + j))
            elif isinstance(kind, SecondOrder):
                simple.append(SimpleBlock(len(simple), "soc", kind.n, kind.n, 2, offset, eig_offset))
            else:
                simple.append(SimpleBlock(len(simple), "psd", kind.n, kind.dim, kind.n, offset, eig_offset))
            offset += kind.dim
            eig_offset += kind.rank
        self.blocks = blocks
        self.groups = tuple(groups)
        self.simple_blocks = tuple(simple)
        self.p = len(simple)
        self.r = eig_offset
        self.d = offset
        self.ranks = np.array([b.rank for b in simple])
        self.r_max = int(self.ranks.max())
        self.eig_block = np.repeat(np.arange(self.p), self.ranks)

        e = np.zeros(self.d)
        for g in self.groups:
            if isinstance(g.kind, Orthant):
                e[g.coords] = 1.0
            elif isinstance(g.kind, SecondOrder):
                e[g.offset] = SQRT2
            else:
                e[g.coords] = svec(np.eye(g.kind.n))
        e.flags.writeable = False
        self._identity = e

    def __eq__(self, other):
        return isinstance(other, ConeStructure) and self.blocks == other.blocks

    def __hash__(self):
        return hash(self.blocks)

    def __repr__(self):
        return f"ConeStructure([{', '.join(map(str, self.blocks))}])"

    def describe(self) -> str:
        return " ".join(map(str, self.blocks))

    # constructors -----------------------------------------------------

    def element(self, coords) -> "Element":
        return Element(self, coords)

    def identity(self) -> "Element":
        return Element(self, self._identity)

    def zeros(self) -> "Element":
        return Element(self, np.zeros(self.d))

    def from_blocks(self, parts: Sequence) -> "Element":
        """Build an element from natural per-block data.

        One entry per block given at construction: a vector for orthant and
        second-order blocks (natural, unscaled coordinates), a symmetric matrix
        for PSD blocks.
        """
        if len(parts) != len(self.groups):
            raise StructureMismatch(f"expected {len(self.groups)} blocks, got {len(parts)}")
        coords = np.empty(self.d)
        for g, part in zip(self.groups, parts):
            part = np.asarray(part, dtype=float)
            if isinstance(g.kind, Psd):
                if part.shape != (g.kind.n, g.kind.n):
                    raise StructureMismatch(f"PSD block needs a {g.kind.n}x{g.kind.n} matrix")
                coords[g.coords] = svec((part + part.T) / 2)
            else:
                if part.shape != (g.kind.dim,):
                    raise StructureMismatch(f"block {g.kind} needs a vector of length {g.kind.dim}")
                coords[g.coords] = part * (SQRT2 if isinstance(g.kind, SecondOrder) else 1.0)
        return Element(self, coords)

    def to_blocks(self, x: "Element") -> list:
        """Natural per-block data of ``x`` (inverse of :meth:`from_blocks`)."""
        out = []
        for g in self.groups:
            c = x.coords[g.coords]
            if isinstance(g.kind, Psd):
                out.append(smat(c, g.kind.n))
            elif isinstance(g.kind, SecondOrder):
                out.append(c / SQRT2)
            else:
                out.append(c.copy())
        return out


# ---------------------------------------------------------------------------
# elements


class Element:
    """Immutable point of the Jordan algebra, stored in canonical coordinates."""

    __slots__ = ("structure", "coords")

    def __init__(self, structure: ConeStructure, coords):
        coords = np.array(coords, dtype=float)
        if coords.shape != (structure.d,):
            raise StructureMismatch(f"expected {structure.d} coordinates, got shape {coords.shape}")
        coords.flags.writeable = False
        object.__setattr__(self, "structure", structure)
        object.__setattr__(self, "coords", coords)

    def __setattr__(self, name, value):
        raise AttributeError("Element is immutable")

    def __repr__(self):
        return f"Element({self.structure.describe()}, {np.array2string(self.coords, precision=4)})"

    def _check(self, other: "Element"):
        if other.structure is not self.structure and other.structure != self.structure:
            raise StructureMismatch(f"{self.structure!r} vs {other.structure!r}")

    def __add__(self, other):
        self._check(other)
        return Element(self.structure, self.coords + other.coords)

    def __sub__(self, other):
        self._check(other)
        return Element(self.structure, self.coords - other.coords)

    def __neg__(self):
        return Element(self.structure, -self.coords)

    def __mul__(self, scalar):
        return Element(self.structure, self.coords * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Element(self.structure, self.coords / float(scalar))

    def block(self, index: int) -> np.ndarray:
        """Canonical coordinates of simple block ``index``."""
        return self.coords[self.structure.simple_blocks[index].coords]

    def allclose(self, other: "Element", atol: float = 1e-10) -> bool:
        self._check(other)
        return bool(np.linalg.norm(self.coords - other.coords) <= atol)


def _same(x: Element, y: Element) -> ConeStructure:
    x._check(y)
    return x.structure


# ---------------------------------------------------------------------------
# per-kind kernels


def _soc_product(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = np.empty_like(u)
    out[0] = u @ v
    out[1:] = u[0] * v[1:] + v[0] * u[1:]
    return out / SQRT2


def _soc_quad_matrix(v: np.ndarray) -> np.ndarray:
    """Matrix of ``Q_v`` in canonical second-order coordinates."""
    x = v / SQRT2
    x1, xb = x[0], x[1:]
    det = x1 * x1 - xb @ xb
    n = x.size
    M = np.empty((n, n))
    M[0, 0] = x @ x
    M[0, 1:] = M[1:, 0] = 2 * x1 * xb
    M[1:, 1:] = det * np.eye(n - 1) + 2 * np.outer(xb, xb)
    return M


def _soc_frame_direction(u: np.ndarray) -> tuple[float, float, np.ndarray]:
    x1 = u[0] / SQRT2
    xb = u[1:] / SQRT2
    nrm = float(np.linalg.norm(xb))
    if nrm <= SOC_ZERO_TOL:
        z = np.zeros_like(xb)
        z[0] = 1.0
    else:
        z = xb / nrm
    return x1, nrm, z


def quad_block_rows(block: SimpleBlock, g: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Apply ``Q_g`` (``g`` a block element) to every row of ``rows`` (shape ``(m, block.dim)``)."""
    if block.kind == "orthant":
        return rows * (g[0] * g[0])
    if block.kind == "soc":
        return rows @ _soc_quad_matrix(g)
    G = smat(g, block.order)
    return svec(G @ smat(rows, block.order) @ G)


# ---------------------------------------------------------------------------
# product / inner / quadratic representation


def jordan_product(x: Element, y: Element) -> Element:
    s = _same(x, y)
    out = np.empty(s.d)
    for g in s.groups:
        u, v = x.coords[g.coords], y.coords[g.coords]
        if isinstance(g.kind, Orthant):
            out[g.coords] = u * v
        elif isinstance(g.kind, SecondOrder):
            out[g.coords] = _soc_product(u, v)
        else:
            U, V = smat(u, g.kind.n), smat(v, g.kind.n)
            out[g.coords] = svec((U @ V + V @ U) / 2)
    return Element(s, out)


def inner(x: Element, y: Element) -> float:
    _same(x, y)
    return float(x.coords @ y.coords)


def quadratic_rep(v: Element, x: Element) -> Element:
    """``Q_v(x) = 2 v o (v o x) - v^2 o x`` evaluated blockwise in closed form."""
    s = _same(v, x)
    out = np.empty(s.d)
    for g in s.groups:
        a, b = v.coords[g.coords], x.coords[g.coords]
        if isinstance(g.kind, Orthant):
            out[g.coords] = a * a * b
        elif isinstance(g.kind, SecondOrder):
            out[g.coords] = _soc_quad_matrix(a) @ b
        else:
            V = smat(a, g.kind.n)
            out[g.coords] = svec(V @ smat(b, g.kind.n) @ V)
    return Element(s, out)


def quadratic_rep_generic(v: Element, x: Element) -> Element:
    """Reference evaluation straight from the product definition (used as a test oracle)."""
    return 2 * jordan_product(v, jordan_product(v, x)) - jordan_product(jordan_product(v, v), x)


# ---------------------------------------------------------------------------
# spectral decomposition


class SpectralDecomposition:
    """Eigenvalues and Jordan frame of an element.

    ``eigenvalues`` is the flat vector over all simple blocks (descending
    within each block).  Frames are materialised lazily from the stored
    eigenvectors (PSD) or directions (second-order).
    """

    def __init__(self, structure: ConeStructure, eigenvalues: np.ndarray, bases: list):
        self.structure = structure
        self.eigenvalues = eigenvalues
        self._bases = bases

    def block_eigenvalues(self, block: int) -> np.ndarray:
        return self.eigenvalues[self.structure.simple_blocks[block].eigs]

    def block_frame(self, block: int) -> np.ndarray:
        """Frame of simple block ``block`` as an ``(r_l, dim_l)`` array of block coordinates."""
        b = self.structure.simple_blocks[block]
        if b.kind == "orthant":
            return np.ones((1, 1))
        basis = self._basis_of(b)
        if b.kind == "soc":
            z = basis
            frame = np.empty((2, b.dim))
            frame[:, 0] = 1.0
            frame[0, 1:] = z
            frame[1, 1:] = -z
            return frame / SQRT2
        Q = basis
        return svec(Q.T[:, :, None] * Q.T[:, None, :])

    def _basis_of(self, b: SimpleBlock):
        # orthant groups carry no basis, every other group holds exactly one simple block
        for g, basis in zip(self.structure.groups, self._bases):
            if g.first_block == b.index and not isinstance(g.kind, Orthant):
                return basis
        raise KeyError(b.index)

    def compose_block(self, block: int, values) -> np.ndarray:
        """Block coordinates of ``sum_i values[i] c_i`` over the frame of ``block``."""
        b = self.structure.simple_blocks[block]
        values = np.asarray(values, dtype=float)
        if b.kind == "orthant":
            return values.copy()
        basis = self._basis_of(b)
        if b.kind == "soc":
            z = basis
            out = np.empty(b.dim)
            out[0] = values[0] + values[1]
            out[1:] = (values[0] - values[1]) * z
            return out / SQRT2
        Q = basis
        return svec((Q * values) @ Q.T)

    def compose(self, values) -> Element:
        """``sum_k values[k] c_k`` over the whole frame (``values`` indexed like ``eigenvalues``)."""
        s = self.structure
        values = np.asarray(values, dtype=float)
        out = np.empty(s.d)
        for g, basis in zip(s.groups, self._bases):
            vals = values[g.eigs]
            if isinstance(g.kind, Orthant):
                out[g.coords] = vals
            elif isinstance(g.kind, SecondOrder):
                out[g.offset] = (vals[0] + vals[1]) / SQRT2
                out[g.offset + 1 : g.offset + g.kind.dim] = (vals[0] - vals[1]) / SQRT2 * basis
            else:
                out[g.coords] = svec((basis * vals) @ basis.T)
        return Element(s, out)

    def idempotent(self, k: int) -> Element:
        """Primitive idempotent for flat eigen-index ``k``, embedded in the full algebra."""
        values = np.zeros(self.structure.r)
        values[k] = 1.0
        return self.compose(values)

    def frame_elements(self) -> list[Element]:
        return [self.idempotent(k) for k in range(self.structure.r)]

    @cached_property
    def argmin(self) -> int:
        return int(np.argmin(self.eigenvalues))

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[self.argmin])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues.max())


def spectral_decompose(x: Element) -> SpectralDecomposition:
    s = x.structure
    eig = np.empty(s.r)
    bases = []
    for g in s.groups:
        u = x.coords[g.coords]
        if isinstance(g.kind, Orthant):
            eig[g.eigs] = u
            bases.append(None)
        elif isinstance(g.kind, SecondOrder):
            x1, nrm, z = _soc_frame_direction(u)
            eig[g.eig_offset] = x1 + nrm
            eig[g.eig_offset + 1] = x1 - nrm
            bases.append(z)
        else:
            try:
                w, Q = np.linalg.eigh(smat(u, g.kind.n))
            except np.linalg.LinAlgError as exc:
                raise EigensolverError(g.first_block, str(exc)) from exc
            eig[g.eigs] = w[::-1]
            bases.append(Q[:, ::-1])
    return SpectralDecomposition(s, eig, bases)


def eigenvalues(x: Element) -> np.ndarray:
    return spectral_decompose(x).eigenvalues


# ---------------------------------------------------------------------------
# eigenvalue functions


def norms(x: Element) -> tuple[float, float, float]:
    """``(||x||_J, ||x||_1, ||x||_inf)``."""
    lam = eigenvalues(x)
    return float(math.sqrt(x.coords @ x.coords)), float(np.abs(lam).sum()), float(np.abs(lam).max(initial=0.0))


def norm_J(x: Element) -> float:
    return float(math.sqrt(x.coords @ x.coords))


def norm_1_inf(x: Element, decomp: SpectralDecomposition | None = None) -> float:
    """``max_l ||x_l||_1`` over simple blocks."""
    decomp = decomp or spectral_decompose(x)
    s = x.structure
    return float(np.bincount(s.eig_block, weights=np.abs(decomp.eigenvalues), minlength=s.p).max())


def trace(x: Element) -> float:
    return float(eigenvalues(x).sum())


def determinant(x: Element) -> float:
    return float(np.prod(eigenvalues(x)))


def log_abs_determinant(x: Element) -> float:
    return float(np.log(np.abs(eigenvalues(x))).sum())


def block_determinant(x: Element, block: int) -> float:
    return float(np.prod(spectral_decompose(x).block_eigenvalues(block)))


def inverse(x: Element) -> Element:
    decomp = spectral_decompose(x)
    lam = decomp.eigenvalues
    scale = max(1.0, float(np.abs(lam).max()))
    if np.any(np.abs(lam) <= 1e-15 * scale):
        raise SingularElementError("element has a zero eigenvalue")
    return decomp.compose(1.0 / lam)


def min_eigenvalue(x: Element, decomp: SpectralDecomposition | None = None) -> tuple[float, Element]:
    """Smallest eigenvalue over all blocks and its unit-trace primitive idempotent."""
    decomp = decomp or spectral_decompose(x)
    k = decomp.argmin
    return float(decomp.eigenvalues[k]), decomp.idempotent(k)


def project_cone(x: Element, decomp: SpectralDecomposition | None = None) -> Element:
    decomp = decomp or spectral_decompose(x)
    return decomp.compose(np.maximum(decomp.eigenvalues, 0.0))


def interior_tolerance(decomp: SpectralDecomposition) -> float:
    return 1e-12 * max(1.0, float(np.abs(decomp.eigenvalues).max(initial=0.0)))


def in_cone(x: Element, tol: float = 0.0) -> bool:
    return spectral_decompose(x).lambda_min >= -tol


def in_interior(x: Element, tol: float | None = None) -> bool:
    decomp = spectral_decompose(x)
    if tol is None:
        tol = interior_tolerance(decomp)
    return decomp.lambda_min > tol


def is_zero(x: Element, tol: float = 1e-12) -> bool:
    return norm_J(x) <= tol


# ---------------------------------------------------------------------------
# simplex / spectraplex


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto ``{w >= 0, sum(w) = 1}`` (sort-and-threshold)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def spectraplex_project(target: Element) -> Element:
    """``argmin { ||u - target||_J : u in K, <u, e> = 1 }``."""
    decomp = spectral_decompose(target)
    return decomp.compose(project_simplex(decomp.eigenvalues))


# ---------------------------------------------------------------------------
# frame scalings


class Direction(enum.Enum):
    FORWARD = "forward"
    INVERSE = "inverse"


@dataclass(frozen=True, eq=False)
class FrameScaling:
    """``g = sqrt(xi) sum_{h in H} c_h + sum_{h not in H} c_h`` on one simple block.

    ``FORWARD`` applies ``Q_g`` and ``INVERSE`` applies ``Q_{g^{-1}}``; both are
    the identity outside the block.
    """

    block: SimpleBlock
    cut: tuple[int, ...]
    xi: float
    g: np.ndarray
    g_inv: np.ndarray

    @classmethod
    def from_decomposition(cls, decomp: SpectralDecomposition, block: int, cut, xi: float) -> "FrameScaling":
        cut = tuple(sorted(int(i) for i in cut))
        b = decomp.structure.simple_blocks[block]
        if not cut:
            raise ValueError("frame scaling needs a nonempty index set")
        if not 0.0 < xi < 1.0:
            raise ValueError(f"xi must lie in (0, 1), got {xi}")
        if cut[0] < 0 or cut[-1] >= b.rank:
            raise IndexError(f"cut indices {cut} out of range for block of rank {b.rank}")
        s = np.ones(b.rank)
        s[list(cut)] = math.sqrt(xi)
        return cls(b, cut, float(xi), decomp.compose_block(block, s), decomp.compose_block(block, 1.0 / s))

    def _g(self, direction: Direction) -> np.ndarray:
        return self.g if direction is Direction.FORWARD else self.g_inv

    def apply(self, x: Element, direction: Direction = Direction.FORWARD) -> Element:
        out = x.coords.copy()
        sl = self.block.coords
        out[sl] = quad_block_rows(self.block, self._g(direction), out[sl][None, :])[0]
        return Element(x.structure, out)

    def apply_rows(self, rows: np.ndarray, direction: Direction = Direction.FORWARD) -> np.ndarray:
        """Apply to the block columns of a row-stacked matrix (rows are elements)."""
        out = np.array(rows, dtype=float)
        sl = self.block.coords
        out[:, sl] = quad_block_rows(self.block, self._g(direction), out[:, sl])
        return out


def frame_scaling_apply(
    decomp: SpectralDecomposition,
    block: int,
    cut,
    xi: float,
    x: Element,
    direction: Direction = Direction.FORWARD,
) -> Element:
    return FrameScaling.from_decomposition(decomp, block, cut, xi).apply(x, direction)
