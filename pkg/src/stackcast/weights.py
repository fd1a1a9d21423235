"""Simplex-constrained quadratic program defining the stacking weights.

The criterion matrix S = e'e (e the n x K jackknife residual matrix) is PSD,
so minimizing w'Sw over the unit simplex is a convex QP. It is solved by
accelerated projected gradient with an exact sort-and-threshold simplex
projection; convergence is certified by a projected-gradient fixed-point
residual. A 1/n factor in front of the criterion would not change the
argmin, so the solver takes the raw S.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels import _pure
from .crossval import ResidualMatrix

MAX_QP_ITER = 10_000
KKT_TOL_SCALE = 1e-9


@dataclass(frozen=True)
class WeightVector:
    """Simplex weights with solver diagnostics."""

    w: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int
    converged: bool = True

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        object.__setattr__(self, "w", w)
        if np.any(w < 0.0) or abs(float(np.sum(w)) - 1.0) > 1e-10:
            raise ValueError("weights must be nonnegative and sum to one")


def gram(res: ResidualMatrix) -> np.ndarray:
    """Criterion matrix S = e'e, symmetrized as (S + S')/2."""
    e = res.values
    if not np.isfinite(e).all():
        raise ValueError("residual matrix has non-finite entries")
    s = e.T @ e
    return (s + s.T) / 2.0


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto {w >= 0, sum w = 1}."""
    return _kernels.project_simplex(np.asarray(v, dtype=np.float64))


def _check_gram(s) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError("S must be square")
    scale = float(np.max(np.abs(s))) if s.size else 0.0
    if float(np.max(np.abs(s - s.T))) > 1e-12 * (1.0 + scale):
        raise ValueError("S must be symmetric to 1e-12")
    return (s + s.T) / 2.0


def solve(s) -> WeightVector:
    """Minimize w'Sw over the unit simplex from the uniform start.

    Terminates when the fixed-point residual
    ||w - proj(w - Sw / lambda_max)|| falls below 1e-9 * (1 + trace(S)/K)
    and the objective does not exceed any vertex (single-candidate) value,
    when the iterate is an exact float fixed point of the projected step
    (no representable progress remains), or after 10,000 iterations,
    whichever comes first. Degenerate S (duplicate candidates) yields the
    deterministic limit from the uniform start; any minimizer gives
    identical predictions.
    """
    s = _check_gram(s)
    k = s.shape[0]
    tr = float(np.trace(s))
    kkt_tol = KKT_TOL_SCALE * (1.0 + tr / k)
    # the fixed-point residual is invariant under S -> cS, so cap the
    # tolerance by a scale-free variant; keeps the argmin stable across
    # rescalings, never looser than the documented tolerance
    lam = _pure._power_lambda_max(s)
    if lam > 0.0:
        kkt_tol = min(kkt_tol, KKT_TOL_SCALE * (1.0 + tr / (k * lam)))
    vertex_slack = 0.5e-9 * (1.0 + tr)
    w0 = np.full(k, 1.0 / k)
    w, obj, kkt, iters, converged = _kernels.solve_simplex_qp(
        s, w0, MAX_QP_ITER, kkt_tol, vertex_slack
    )
    return WeightVector(
        w=w, objective=obj, kkt_residual=kkt, iterations=iters, converged=converged
    )


def kkt_check(s, w) -> float:
    """Fixed-point residual ||w - proj(w - Sw / lambda_max(S))|| at w.

    Zero iff w is stationary for the projected dynamics; for S = 0 every
    feasible point is optimal and the residual is zero.
    """
    s = _check_gram(s)
    w = np.asarray(w, dtype=np.float64)
    lam = _pure._power_lambda_max(s)
    if lam <= 0.0:
        return 0.0
    return float(np.linalg.norm(w - project_simplex(w - (s @ w) / lam)))
