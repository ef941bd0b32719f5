"""Seeded PSD feasibility instance generators for the families listed in ``FAMILIES``.

All randomness comes from ``numpy.random.Generator`` with the PCG64 bit
generator seeded by the instance seed, so identical specs reproduce the same
operator bit for bit.  Rows are emitted in ``svec`` coordinates, which keep the trace inner
product of the symmetric matrices they encode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional

import numpy as np

from .jordan import ConeStructure, Psd, svec
from .linear_ops import DenseOperator

FAMILIES = ("strong", "weak", "infeasible")


@dataclass(frozen=True)
class GenSpec:
    family: str
    n: int
    m: int
    seed: int
    tau: Optional[int] = None
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not 1 <= self.m <= self.n * (self.n + 1) // 2:
            raise ValueError(f"m must lie in [1, n(n+1)/2], got {self.m}")
        if self.family == "strong" and (self.tau is None or self.tau < 1):
            raise ValueError("the strong family needs tau >= 1")
        if self.family == "infeasible" and (self.alpha is None or self.alpha <= 0):
            raise ValueError("the infeasible family needs alpha > 0")


@dataclass
class GeneratedInstance:
    spec: GenSpec
    operator: DenseOperator
    planted: Optional[np.ndarray] = None  # strong: C, weak: C_plus, infeasible: B_plus
    log10_mu: Optional[float] = None  # strong only: log10 det C
    class_counts: Optional[tuple[int, ...]] = None
    extra: dict = field(default_factory=dict)


def m_from_nu(n: int, nu: float) -> int:
    """``round(n(n+1)/2 * nu)`` with ties rounded away from zero."""
    value = Decimal(n * (n + 1) // 2) * Decimal(str(nu))
    return int(value.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix from the QR factorisation of a Gaussian matrix."""
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def class_counts(n: int, tau: int) -> tuple[int, tuple[int, ...]]:
    """``(s, num)`` where ``num[i-1]`` is the number of eigenvalues drawn from class ``i``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    s = math.ceil(tau / (n - 1))
    t = 2 * s - 1
    b = (n - 1) % t
    a = ((n - 1) - b) // t
    num = [a] * t
    if b % 2 == 1:
        bb = (b - 1) // 2
        for i in range(s - bb, s + bb + 1):
            num[i - 1] += 1
    else:
        bb = b // 2
        for i in range(s - bb, s + bb + 1):
            if i != s:
                num[i - 1] += 1
    return s, tuple(num)


def eigenvalue_classes(n: int, tau: int, rng: np.random.Generator) -> np.ndarray:
    """The ``n - 1`` small eigenvalues of the planted solution, class by class (largest class first)."""
    s, num = class_counts(n, tau)
    lo = 10.0 ** (-tau / (n - 1))
    hi = 10.0 ** (-(tau - 1) / (n - 1))
    out = []
    for i, count in enumerate(num, start=1):
        scale = 10.0 ** (s - i)
        for _ in range(count):
            dl, du = lo * scale, hi * scale
            out.append(dl + (du - dl) * rng.random())
    return np.array(out)


def _random_symmetric(n: int, rng: np.random.Generator) -> np.ndarray:
    B = rng.random((n, n))
    return (B + B.T) / 2


def _projected_rows(count: int, n: int, c: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """``count`` random symmetric rows multiplied by ``R = I - c c^T / ||c||^2``."""
    rows = np.array([svec(_random_symmetric(n, rng)) for _ in range(count)]).reshape(count, -1)
    return rows - np.outer(rows @ c, c) / (c @ c)


def _psd_part(M: np.ndarray) -> np.ndarray:
    w, Q = np.linalg.eigh(M)
    return (Q * np.maximum(w, 0.0)) @ Q.T


def gen_strong(spec: GenSpec) -> GeneratedInstance:
    n, m, tau = spec.n, spec.m, spec.tau
    rng = np.random.default_rng(spec.seed)
    P = random_orthogonal(n, rng)
    _, counts = class_counts(n, tau)
    d = np.concatenate([[1.0], eigenvalue_classes(n, tau, rng)])
    C = (P * d) @ P.T
    u = np.zeros(n)
    u[0] = n
    U = (P * (u - 1.0 / d)) @ P.T
    c = svec(C)
    rows = np.vstack([svec(U)[None, :], _projected_rows(m - 1, n, c, rng)])
    log10_mu = float(np.log10(d).sum())
    return GeneratedInstance(
        spec, DenseOperator(ConeStructure([Psd(n)]), rows), planted=C, log10_mu=log10_mu, class_counts=counts
    )


def gen_weak(spec: GenSpec, max_redraws: int = 100) -> GeneratedInstance:
    n, m = spec.n, spec.m
    rng = np.random.default_rng(spec.seed)
    for _ in range(max_redraws):
        C = _random_symmetric(n, rng)
        w = np.linalg.eigvalsh(C)
        if w[0] < 0 < w[-1]:
            break
    else:
        raise RuntimeError(f"no indefinite matrix after {max_redraws} draws")
    C_plus = _psd_part(C)
    C_minus = -_psd_part(-C)
    c_plus = svec(C_plus)
    rows = np.vstack([svec(C_minus)[None, :], _projected_rows(m - 1, n, c_plus, rng)])
    return GeneratedInstance(
        spec, DenseOperator(ConeStructure([Psd(n)]), rows), planted=C_plus, extra={"C_minus": C_minus}
    )


def gen_infeasible(spec: GenSpec) -> GeneratedInstance:
    n, m, alpha = spec.n, spec.m, spec.alpha
    rng = np.random.default_rng(spec.seed)
    P = random_orthogonal(n, rng)
    E, Q = np.linalg.eigh(_random_symmetric(n, rng))
    E_plus = rng.random() * alpha + np.maximum(E, 0.0)
    B_plus = (Q * E_plus) @ Q.T
    D = rng.random(n)
    C = (P * D) @ P.T
    rows = np.vstack([svec(B_plus)[None, :], _projected_rows(m - 1, n, svec(C), rng)])
    return GeneratedInstance(
        spec, DenseOperator(ConeStructure([Psd(n)]), rows), planted=B_plus, extra={"C": C}
    )


def generate(spec: GenSpec) -> GeneratedInstance:
    return {"strong": gen_strong, "weak": gen_weak, "infeasible": gen_infeasible}[spec.family](spec)
