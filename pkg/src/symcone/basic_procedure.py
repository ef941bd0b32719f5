"""Basic procedures: von Neumann, modified von Neumann and smooth perceptron updates with cut detection.

Each run works on the kernel projection ``P`` of the current (scaled)
operator and stops with one of

* :class:`PrimalInterior` -- ``z = P(y)`` lies in the interior of the cone,
* :class:`DualFromY` / :class:`DualFromV` -- a nonzero cone element in the range of ``A*``,
* :class:`Cut` -- per-block index sets ``H_l`` whose frame idempotents satisfy
  ``<c_i, x> <= xi`` for every feasible ``x`` with ``||x||_inf <= 1``,
* :class:`IterationLimit` -- the iteration cap was reached.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .jordan import (
    ConeStructure,
    Element,
    SpectralDecomposition,
    inner,
    norm_J,
    spectral_decompose,
    spectraplex_project,
)
from .linear_ops import KernelProjector

#: eigenvalues of ``v`` smaller than this times ``||v||_inf`` are never cut candidates
CANDIDATE_TOL = 1e-14


class Scheme(enum.Enum):
    VN = "vn"
    MVN = "mvn"
    SP = "sp"


class DegenerateStepError(ArithmeticError):
    """``P(c) = 0`` in a von Neumann step; ``c`` itself is then a dual certificate."""


@dataclass(frozen=True)
class BPConfig:
    xi: float = 0.25
    scheme: Scheme = Scheme.MVN
    tol_int: float = 1e-12  # relative: z is interior iff lambda_min(z) > tol_int * max(1, ||z||_inf)
    tol_zero: float = 1e-12
    max_iter_override: Optional[int] = None

    def __post_init__(self):
        if not 0.0 < self.xi < 1.0:
            raise ValueError(f"xi must lie in (0, 1), got {self.xi}")
        if isinstance(self.scheme, str):
            object.__setattr__(self, "scheme", Scheme(self.scheme.lower()))

    def iteration_bound(self, structure: ConeStructure) -> float:
        """Theoretical iteration bound of the scheme (not rounded)."""
        p, r_max = structure.p, structure.r_max
        if self.scheme is Scheme.SP:
            return 2 * math.sqrt(2) * p * r_max / self.xi
        return (p * r_max / self.xi) ** 2

    def iteration_cap(self, structure: ConeStructure) -> int:
        """Number of iterations allowed: the loop guards ``k <= bound`` (counting from 1)
        and ``k <= bound - 1`` (counting from 0) both admit ``floor(bound)`` passes."""
        if self.max_iter_override is not None:
            return int(self.max_iter_override)
        return max(1, math.floor(self.iteration_bound(structure) * (1 + 1e-12)))


# ---------------------------------------------------------------------------
# outcomes


@dataclass
class BPOutcome:
    iterations: int


@dataclass
class PrimalInterior(BPOutcome):
    z: Element


@dataclass
class DualFromY(BPOutcome):
    y: Element


@dataclass
class DualFromV(BPOutcome):
    v: Element


@dataclass
class Cut(BPOutcome):
    """Cut sets per simple block.

    ``H`` maps a simple-block index to the tuple of frame positions (within
    the block, eigenvalues descending) that were cut; ``frames`` is the
    spectral decomposition of ``v`` whose frames the indices refer to;
    ``bounds`` holds ``<e, P_K(-v / lambda_i)>`` for every returned index.
    """

    H: dict[int, tuple[int, ...]]
    frames: SpectralDecomposition
    bounds: dict[tuple[int, int], float]
    v: Element

    @property
    def total(self) -> int:
        return sum(len(h) for h in self.H.values())


@dataclass
class IterationLimit(BPOutcome):
    y: Element
    z: Element
    v: Element


# ---------------------------------------------------------------------------
# cut detection


def cut_bounds(eigenvalues: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Candidate positions and their bounds ``<e, P_K(-v/lambda_k)>`` computed from eigenvalues alone.

    Only eigenvalues with the sign of ``<e, v>`` (the eigenvalue sum) and
    magnitude above the candidate tolerance are considered.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    total = lam.sum()
    scale = float(np.abs(lam).max(initial=0.0))
    if total == 0.0 or scale == 0.0:
        return np.empty(0, dtype=int), np.empty(0)
    if total > 0:
        idx = np.nonzero(lam > CANDIDATE_TOL * scale)[0]
        neg_mass = np.maximum(-lam, 0.0).sum()
        return idx, neg_mass / lam[idx]
    idx = np.nonzero(lam < -CANDIDATE_TOL * scale)[0]
    pos_mass = np.maximum(lam, 0.0).sum()
    return idx, pos_mass / -lam[idx]


def detect_cuts(v: Element, decomp: SpectralDecomposition, xi: float) -> tuple[dict, dict]:
    """Per-block cut sets ``H_l = {i : <e, P_K(-v / lambda(v_l)_i)> <= xi}``.

    Returns ``(H, bounds)``; blocks without cuts are absent from ``H``.
    """
    s = v.structure
    idx, vals = cut_bounds(decomp.eigenvalues)
    H: dict[int, list[int]] = {}
    bounds = {}
    for k, b in zip(idx, vals):
        if b <= xi:
            blk = int(s.eig_block[k])
            pos = int(k - s.simple_blocks[blk].eig_offset)
            H.setdefault(blk, []).append(pos)
            bounds[(blk, pos)] = float(b)
    return {blk: tuple(pos) for blk, pos in H.items()}, bounds


def q_closed_form(eigenvalues: np.ndarray, k: int) -> float:
    """``min_{alpha >= 0} q_k(alpha) = min{1, <e, P_K(-v / lambda_k)>}``."""
    lam = np.asarray(eigenvalues, dtype=float)
    lk = lam[k]
    if lk > 0:
        val = np.maximum(-lam, 0.0).sum() / lk
    else:
        val = np.maximum(lam, 0.0).sum() / -lk
    return float(min(1.0, val))


def q_function(eigenvalues: np.ndarray, k: int, alpha) -> np.ndarray:
    """``q_k(alpha) = [1 - alpha lambda_k]^+ + sum_{j != k} [-alpha lambda_j]^+`` (vectorised in ``alpha``).

    For a negative ``lambda_k`` the same expression is evaluated for ``-v``.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lam[k] < 0:
        lam = -lam
    alpha = np.asarray(alpha, dtype=float)[..., None]
    terms = np.maximum(-alpha * lam, 0.0)
    terms[..., k] = np.maximum(1.0 - alpha[..., 0] * lam[k], 0.0)
    return terms.sum(axis=-1)


# ---------------------------------------------------------------------------
# update steps


def vn_step(y: Element, z: Element, c: Element, proj: KernelProjector, tol_zero: float = 1e-12):
    """One von Neumann update toward the idempotent combination ``c``; returns ``(y', z')``."""
    pc = proj.project(c)
    if norm_J(pc) <= tol_zero:
        raise DegenerateStepError("P(c) vanishes")
    diff = z - pc
    alpha = inner(pc, pc - z) / inner(diff, diff)
    y_new = alpha * y + (1.0 - alpha) * c
    return y_new, proj.project(y_new)


def _mvn_direction(decomp: SpectralDecomposition) -> Element:
    lam = decomp.eigenvalues
    mask = (lam <= 0).astype(float)
    return decomp.compose(mask / mask.sum())


@dataclass
class SPState:
    """Smooth perceptron iterate ``(u^k, y^k, mu^k, k)``."""

    u: Element
    y: Element
    mu: float
    k: int
    ubar: Element = field(repr=False)


def u_mu(ubar: Element, w: Element, mu: float) -> Element:
    """``argmin_{u in K, <u,e> = 1} <u, w> + mu/2 ||u - ubar||^2`` in proximal form."""
    return spectraplex_project(ubar - w / mu)


def sp_init(proj: KernelProjector) -> SPState:
    s = proj.structure
    ubar = s.identity() / s.r
    mu = 2.0
    y = u_mu(ubar, proj.project(ubar), mu)
    return SPState(ubar, y, mu, 0, ubar)


def sp_step(state: SPState, proj: KernelProjector) -> SPState:
    theta = 2.0 / (state.k + 3)
    u, y, mu = state.u, state.y, state.mu
    u_next = (1 - theta) * (u + theta * y) + theta**2 * u_mu(state.ubar, proj.project(u), mu)
    mu_next = (1 - theta) * mu
    y_next = (1 - theta) * y + theta * u_mu(state.ubar, proj.project(u_next), mu_next)
    return SPState(u_next, y_next, mu_next, state.k + 1, state.ubar)


# ---------------------------------------------------------------------------
# driver

Monitor = Callable[[int, Element, Element], None]


def _terminal(k, y, z, cfg) -> tuple[Optional[BPOutcome], SpectralDecomposition]:
    """Termination checks shared by all schemes, in the order interior z / v in K / z = 0 / cuts.

    Returns the outcome (``None`` to continue) and the decomposition of ``z``.
    """
    dz = spectral_decompose(z)
    lam_z = dz.eigenvalues
    scale = max(1.0, float(np.abs(lam_z).max(initial=0.0)))
    if dz.lambda_min > cfg.tol_int * scale:
        return PrimalInterior(k, z), dz
    v = y - z
    dv = spectral_decompose(v)
    # when z = 0 and v in K both hold, v is preferred
    if dv.lambda_min >= 0.0 and norm_J(v) > cfg.tol_zero:
        return DualFromV(k, v), dz
    if norm_J(z) <= cfg.tol_zero:
        return DualFromY(k, y), dz
    H, bounds = detect_cuts(v, dv, cfg.xi)
    if H:
        return Cut(k, H, dv, bounds, v), dz
    return None, dz


def run(
    proj: KernelProjector,
    y0: Optional[Element] = None,
    cfg: BPConfig = BPConfig(),
    monitor: Optional[Monitor] = None,
) -> BPOutcome:
    """Run the configured scheme from ``y0`` (default ``e / r``; the smooth perceptron ignores ``y0``).

    ``monitor(k, y, z)`` is called for every iterate before the termination checks.
    """
    s = proj.structure
    cap = cfg.iteration_cap(s)
    if cfg.scheme is Scheme.SP:
        return _run_sp(proj, cfg, cap, monitor)

    y = y0 if y0 is not None else s.identity() / s.r
    z = proj.project(y)
    k = 1
    while k <= cap:
        if monitor is not None:
            monitor(k, y, z)
        res, dz = _terminal(k, y, z, cfg)
        if res is not None:
            return res
        if cfg.scheme is Scheme.VN:
            c = dz.idempotent(dz.argmin)
        else:
            c = _mvn_direction(dz)
        try:
            y, z = vn_step(y, z, c, proj, cfg.tol_zero)
        except DegenerateStepError:
            return DualFromV(k, c)
        k += 1
    return IterationLimit(k - 1, y, z, y - z)


def _run_sp(proj, cfg, cap, monitor) -> BPOutcome:
    state = sp_init(proj)
    z = proj.project(state.y)
    while state.k < cap:
        if monitor is not None:
            monitor(state.k, state.y, z)
        res, _ = _terminal(state.k + 1, state.y, z, cfg)
        if res is not None:
            return res
        state = sp_step(state, proj)
        z = proj.project(state.y)
    return IterationLimit(state.k, state.y, z, state.y - z)
