"""Dense linear operators on the Jordan algebra and the kernel projection."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .jordan import ConeStructure, Direction, Element, FrameScaling, StructureMismatch

#: singular values below ``RANK_TOL * sigma_max`` are treated as zero
RANK_TOL = 1e-10


class RankDeficiencyWarning(RuntimeWarning):
    pass


class DenseOperator:
    """``A(x) = A @ coords(x)``; rows are canonical coordinates of elements ``a_i``."""

    def __init__(self, structure: ConeStructure, matrix):
        matrix = np.array(matrix, dtype=float, ndmin=2)
        if matrix.shape[1] != structure.d:
            raise StructureMismatch(f"operator has {matrix.shape[1]} columns, structure needs {structure.d}")
        matrix.flags.writeable = False
        self.structure = structure
        self.matrix = matrix

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self):
        return f"DenseOperator(m={self.m}, {self.structure!r})"

    def apply(self, x: Element) -> np.ndarray:
        if x.structure != self.structure:
            raise StructureMismatch(f"{x.structure!r} vs {self.structure!r}")
        return self.matrix @ x.coords

    def adjoint(self, y) -> Element:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.m,):
            raise StructureMismatch(f"adjoint expects a vector of length {self.m}")
        return Element(self.structure, self.matrix.T @ y)

    def row(self, i: int) -> Element:
        return Element(self.structure, self.matrix[i])


def apply(op: DenseOperator, x: Element) -> np.ndarray:
    return op.apply(x)


@dataclass(frozen=True)
class KernelProjector:
    """``P(x) = x - V V^T x`` with ``V`` an orthonormal basis of the row space of ``A``."""

    structure: ConeStructure
    basis: np.ndarray  # d x rank
    singular_values: np.ndarray

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def project_coords(self, x: np.ndarray) -> np.ndarray:
        return x - self.basis @ (self.basis.T @ x)

    def project(self, x: Element) -> Element:
        if x.structure != self.structure:
            raise StructureMismatch(f"{x.structure!r} vs {self.structure!r}")
        return Element(self.structure, self.project_coords(x.coords))


def build_kernel_projector(op: DenseOperator, warn: bool = True) -> KernelProjector:
    """Projector onto ``ker A`` from a fresh SVD; a numerical rank below ``m`` warns unless ``warn`` is false."""
    A = op.matrix
    if op.m > op.structure.d:
        raise ValueError(f"operator has more rows ({op.m}) than the space dimension ({op.structure.d})")
    _, sigma, vt = np.linalg.svd(A, full_matrices=False)
    if sigma.size == 0 or sigma[0] == 0.0:
        rank = 0
    else:
        rank = int(np.count_nonzero(sigma > RANK_TOL * sigma[0]))
    if rank < op.m and warn:
        warnings.warn(
            f"operator has numerical rank {rank} < m = {op.m}; projecting onto the detected row space",
            RankDeficiencyWarning,
            stacklevel=2,
        )
    basis = np.ascontiguousarray(vt[:rank].T)
    basis.flags.writeable = False
    return KernelProjector(op.structure, basis, sigma)


def project_kernel(proj: KernelProjector, x: Element) -> Element:
    return proj.project(x)


def compose_scaling(
    op: DenseOperator, scalings: Iterable[FrameScaling], direction: Direction = Direction.FORWARD
) -> DenseOperator:
    """``A <- A Q`` where ``Q`` is the block-diagonal product of the given frame scalings.

    Each ``Q_g`` is self-adjoint, so ``A Q`` has rows ``Q(a_i)``.  Scalings on
    distinct blocks commute; scalings on the same block are applied in order.
    """
    M = np.array(op.matrix)
    for sc in scalings:
        M = sc.apply_rows(M, direction)
    return DenseOperator(op.structure, M)
