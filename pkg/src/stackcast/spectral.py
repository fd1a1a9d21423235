"""Numerical verification of the hat-matrix eigenvalue bounds.

For a full-column-rank X, SPD prior matrices S_k and sigma2 > 0, every
candidate hat matrix P_k = X (X'X + sigma2 S_k^{-1})^{-1} X' has largest
eigenvalue at most one, and any convex combination P(w) is positive
semi-definite with the same bound. This module checks both claims with
dense eigendecompositions (a test-time tool; n is capped to bound memory).
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .models import CandidateSpec, GeneralNormal, GPrior, penalized_normal_matrix

N_CAP = 2000
DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class SpectralReport:
    """Extreme eigenvalues of candidate hat matrices and their combination."""

    per_candidate_max_eig: np.ndarray
    combined_max_eig: float
    combined_min_eig: float
    tolerance: float
    passed: bool


def extreme_eigs(m) -> tuple[float, float]:
    """Smallest and largest eigenvalue of a symmetric matrix."""
    m = np.asarray(m, dtype=np.float64)
    scale = float(np.max(np.abs(m))) if m.size else 0.0
    if float(np.max(np.abs(m - m.T))) > 1e-10 * (1.0 + scale):
        raise ValueError("matrix is not symmetric to 1e-10")
    evals = np.linalg.eigvalsh((m + m.T) / 2.0)
    return float(evals[0]), float(evals[-1])


def hat_matrix(x: np.ndarray, spec: CandidateSpec) -> np.ndarray:
    """Dense hat matrix X (X'X + sigma2 S^{-1})^{-1} X' for one candidate."""
    a = penalized_normal_matrix(x, spec)
    cf = scipy.linalg.cho_factor(a, lower=True)
    p = x @ scipy.linalg.cho_solve(cf, x.T)
    return (p + p.T) / 2.0


def verify_lemma1(x, specs, sigma2: float, w, tol: float = DEFAULT_TOL) -> SpectralReport:
    """Check max eig(P_k) <= 1 per candidate and 0 <= eig(P(w)) <= 1 combined."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] > N_CAP:
        raise ValueError(f"n = {x.shape[0]} exceeds the dense cap {N_CAP}")
    specs = list(specs)
    if any(spec.family != "linear" for spec in specs):
        raise ValueError("eigenvalue checks apply to linear-family candidates only")
    w_arr = np.asarray(getattr(w, "w", w), dtype=np.float64)
    if w_arr.shape[0] != len(specs):
        raise ValueError("one weight per candidate required")

    per_max = np.empty(len(specs))
    combined = np.zeros((x.shape[0], x.shape[0]))
    for k, spec in enumerate(specs):
        pk = hat_matrix(x, CandidateSpec("linear", spec.prior, sigma2, spec.label))
        _, per_max[k] = extreme_eigs(pk)
        combined += w_arr[k] * pk
    cmin, cmax = extreme_eigs(combined)
    passed = (
        float(np.max(per_max)) <= 1.0 + tol and cmax <= 1.0 + tol and cmin >= -tol
    )
    return SpectralReport(
        per_candidate_max_eig=per_max,
        combined_max_eig=cmax,
        combined_min_eig=cmin,
        tolerance=tol,
        passed=passed,
    )


def g_prior_max_eig(g: float, sigma2: float) -> float:
    """Analytic top eigenvalue g/(g + sigma2) of a g-prior hat matrix."""
    return g / (g + sigma2)


def random_trial_report(trials: int, seed: int, tol: float = DEFAULT_TOL):
    """Run random (X, S_k, w) instances; returns (reports, worst_summary).

    Instances use n <= 50, p <= 10, random SPD prior covariances, random
    simplex weights, and a random sigma2, plus an exact g-prior eigenvalue
    check per trial.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    worst_max = -np.inf
    worst_min = np.inf
    worst_g_err = 0.0
    failures = 0
    for _ in range(trials):
        n = int(rng.integers(5, 51))
        p = int(rng.integers(1, min(n, 10) + 1))
        x = rng.standard_normal((n, p))
        sigma2 = float(rng.uniform(0.1, 4.0))
        k = int(rng.integers(1, 6))
        specs = []
        for j in range(k):
            a = rng.standard_normal((p, p))
            cov = a @ a.T + 0.1 * np.eye(p)
            specs.append(CandidateSpec("linear", GeneralNormal(cov), sigma2, f"c{j}"))
        w = rng.dirichlet(np.ones(k))
        report = verify_lemma1(x, specs, sigma2, w, tol)
        worst_max = max(worst_max, float(np.max(report.per_candidate_max_eig)),
                        report.combined_max_eig)
        worst_min = min(worst_min, report.combined_min_eig)
        if not report.passed:
            failures += 1
        g = float(rng.uniform(0.01, 1000.0))
        gspec = CandidateSpec("linear", GPrior(g), sigma2, "g")
        _, lam = extreme_eigs(hat_matrix(x, gspec))
        err = abs(lam - g_prior_max_eig(g, sigma2))
        worst_g_err = max(worst_g_err, err)
        if err > tol:
            failures += 1
    summary = {
        "trials": trials,
        "failures": failures,
        "worst_max_eig": worst_max,
        "worst_min_eig": worst_min,
        "worst_g_prior_error": worst_g_err,
        "tolerance": tol,
    }
    return summary
