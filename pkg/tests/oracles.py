"""Independent oracles used by the test suite.

These deliberately avoid the code paths they check: the QP oracle walks the
simplex by pairwise mass exchanges (no projection, no gradients), and the
derivative oracle uses central finite differences.
"""

import itertools

import numpy as np


def simplex_grid(k: int, steps: int):
    """All weight vectors with entries i/steps summing to one (compositions)."""
    out = []
    for cuts in itertools.combinations(range(steps + k - 1), k - 1):
        prev = -1
        parts = []
        for cut in cuts:
            parts.append(cut - prev - 1)
            prev = cut
        parts.append(steps + k - 2 - prev)
        out.append(np.asarray(parts, dtype=np.float64) / steps)
    return out


def grid_search_simplex_min(s, coarse_steps=None, h_final=1e-8, max_evals=200_000):
    """Refined grid-search minimum of w'Sw over the unit simplex.

    Starts from the best point of a coarse simplex grid, then pattern-searches
    along the simplex edge directions w + h (e_i - e_j), halving h when no
    exchange improves. The objective is convex, so the edge pattern converges
    to the global minimum.
    """
    s = np.asarray(s, dtype=np.float64)
    k = s.shape[0]
    if coarse_steps is None:
        coarse_steps = {1: 1, 2: 1000, 3: 50, 4: 20, 5: 10}.get(k, 8)

    def f(w):
        return float(w @ s @ w)

    best_w = None
    best_f = np.inf
    for w in simplex_grid(k, coarse_steps):
        fw = f(w)
        if fw < best_f:
            best_f, best_w = fw, w
    h = 1.0 / coarse_steps
    evals = 0
    while h >= h_final and evals < max_evals:
        improved = False
        for i in range(k):
            for j in range(k):
                if i == j:
                    continue
                step = min(h, best_w[j])
                if step <= 0.0:
                    continue
                cand = best_w.copy()
                cand[i] += step
                cand[j] -= step
                fc = f(cand)
                evals += 1
                if fc < best_f - 1e-18:
                    best_f, best_w = fc, cand
                    improved = True
        if not improved:
            h *= 0.5
    return best_w, best_f


def fd_gradient(func, x, h=1e-5):
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        out[i] = (func(xp) - func(xm)) / (2.0 * h)
    return out


def random_spd(rng, p: int, jitter: float = 0.1):
    """Random symmetric positive-definite matrix."""
    a = rng.standard_normal((p, p))
    return a @ a.T + jitter * np.eye(p)
