"""Shared instance builders and independent oracles for the test suite."""

import itertools

import numpy as np

from symcone.jordan import spectral_decompose
from symcone.linear_ops import DenseOperator


def interior_point(rng, s, spread=4):
    """Interior point with eigenvalues spread over ``spread`` decades."""
    frame = spectral_decompose(s.element(rng.standard_normal(s.d)))
    return frame.compose(10.0 ** rng.uniform(-spread, 0, s.r))


def feasible_operator(rng, s, m, spread=4):
    """Random operator whose kernel contains a known interior point."""
    x = interior_point(rng, s, spread)
    A = rng.standard_normal((m, s.d))
    A -= np.outer(A @ x.coords, x.coords) / (x.coords @ x.coords)
    return DenseOperator(s, A)


def weak_operator(rng, s, m):
    """Operator whose kernel meets the cone only on its boundary (many cut rounds)."""
    frame = spectral_decompose(s.element(rng.standard_normal(s.d)))
    lam = rng.uniform(0.1, 1.0, s.r)
    zero = rng.random(s.r) < 0.4
    zero[0] = True
    x = frame.compose(np.where(zero, 0.0, lam))
    blocker = frame.compose(np.where(zero, rng.uniform(0.5, 1.0, s.r), 0.0))
    A = rng.standard_normal((m - 1, s.d))
    A -= np.outer(A @ x.coords, x.coords) / (x.coords @ x.coords)
    return DenseOperator(s, np.vstack([blocker.coords, A]))


def lp_max_coordinate(A, i):
    """``max x_i  s.t.  A x = 0, 0 <= x <= 1`` by enumerating basic solutions.

    Every vertex of the polytope fixes at least ``d - rank`` coordinates at a
    bound; the remaining ones solve the equality system.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, d = A.shape
    best = -np.inf
    for free_count in range(0, m + 1):
        for free in itertools.combinations(range(d), free_count):
            fixed = [j for j in range(d) if j not in free]
            for bits in itertools.product((0.0, 1.0), repeat=len(fixed)):
                x = np.zeros(d)
                x[fixed] = bits
                if free:
                    sub = A[:, list(free)]
                    rhs = -A[:, fixed] @ np.array(bits) if fixed else np.zeros(m)
                    sol, *_ = np.linalg.lstsq(sub, rhs, rcond=None)
                    x[list(free)] = sol
                if np.all(x >= -1e-12) and np.all(x <= 1 + 1e-12) and np.linalg.norm(A @ x) <= 1e-10:
                    best = max(best, x[i])
    return best
