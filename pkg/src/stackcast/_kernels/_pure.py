"""Pure-numpy kernels: simplex QP and penalized logistic Newton.

Mirrors stackcast._kernels._compiled operation-for-operation so either
backend can serve the same contracts.
"""

import numpy as np

ARMIJO_C = 1e-4
MAX_HALVINGS = 60


def _expit(t):
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    et = np.exp(t[~pos])
    out[~pos] = et / (1.0 + et)
    return out


def _softplus(t):
    # log(1 + e^t), overflow-safe for |t| up to ~700
    return np.where(t > 0, t, 0.0) + np.log1p(np.exp(-np.abs(t)))


def project_simplex(v):
    """Euclidean projection of v onto {w >= 0, sum w = 1} (sort and threshold)."""
    v = np.asarray(v, dtype=np.float64)
    k = v.shape[0]
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, k + 1)
    rho = np.nonzero(u - css / idx > 0.0)[0][-1]
    tau = css[rho] / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


def _power_lambda_max(s, max_iter=200, rtol=1e-12):
    k = s.shape[0]
    v = np.diag(s) + 1.0
    v = v / np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        u = s @ v
        nrm = np.linalg.norm(u)
        if nrm == 0.0:
            return 0.0
        lam_new = float(v @ u)
        v = u / nrm
        if abs(lam_new - lam) <= rtol * max(1.0, abs(lam_new)):
            return max(lam_new, 0.0)
        lam = lam_new
    return max(lam, 0.0)


def solve_simplex_qp(s, w0, max_iter, kkt_tol, vertex_slack):
    """Minimize w' S w over the unit simplex by accelerated projected gradient.

    Gradient is taken as S w (objective reported as w' S w); step is
    1/lambda_max(S) from a power-iteration estimate, with momentum restart on
    a non-monotone objective and step-length halving (L doubling) if even the
    plain projected-gradient step fails to descend.

    Returns (w, objective, kkt_residual, iterations, converged).
    """
    s = np.asarray(s, dtype=np.float64)
    w = np.asarray(w0, dtype=np.float64).copy()
    k = w.shape[0]
    if k == 1:
        return np.ones(1), float(s[0, 0]), 0.0, 0, True

    # lam_ref anchors the fixed-point residual (any step size certifies an
    # exact optimum); step_lam alone is doubled when a step overshoots
    lam_ref = _power_lambda_max(s) * (1.0 + 1e-7)
    if lam_ref <= 0.0:
        # S is (numerically) zero: every feasible point is optimal
        return w, float(w @ s @ w), 0.0, 0, True
    step_lam = lam_ref

    min_diag = float(np.min(np.diag(s)))
    fw = float(w @ s @ w)
    z = w.copy()
    tm = 1.0
    converged = False
    it = 0

    def _kkt(wc):
        return float(np.linalg.norm(wc - project_simplex(wc - (s @ wc) / lam_ref)))

    def _done(wc, fc):
        return _kkt(wc) <= kkt_tol and fc <= min_diag + vertex_slack

    while it < max_iter:
        it += 1
        g = s @ z
        w_next = project_simplex(z - g / step_lam)
        f_next = float(w_next @ s @ w_next)
        if f_next > fw:
            # restart: plain projected-gradient step from the current iterate
            tm = 1.0
            w_next = project_simplex(w - (s @ w) / step_lam)
            f_next = float(w_next @ s @ w_next)
            # the plain step never increases f in exact arithmetic, so only
            # a rise beyond float resolution signals an underestimated
            # lambda_max; rounding-level wiggles are accepted as progress
            if f_next > fw + 4.0 * np.finfo(np.float64).eps * (1.0 + abs(fw)):
                if _done(w, fw):
                    converged = True
                    break
                step_lam *= 2.0
                z = w.copy()
                continue
        if np.array_equal(w_next, w):
            # pinned iterate: if even the plain step cannot move it, no
            # representable progress remains
            pg = project_simplex(w - (s @ w) / step_lam)
            if np.array_equal(pg, w):
                converged = fw <= min_diag + vertex_slack
                break
            z = w.copy()
            tm = 1.0
            continue
        if f_next == fw:
            # float-flat region: drop momentum so plain projected-gradient
            # contraction can finish the last ulps
            z = w_next.copy()
            tm = 1.0
        else:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tm * tm))
            z = w_next + ((tm - 1.0) / t_next) * (w_next - w)
            tm = t_next
        w = w_next
        fw = f_next
        if _done(w, fw):
            converged = True
            break

    w = np.where(w < 1e-12, 0.0, w)
    w = w / np.sum(w)
    obj = float(w @ s @ w)
    return w, obj, _kkt(w), it, converged


def _penalty(beta, kind, nu, q):
    qb = q @ beta
    bqb = float(beta @ qb)
    if kind == 0:
        return 0.5 * bqb, qb
    p = beta.shape[0]
    scale = (nu + p) / (nu + bqb)
    return 0.5 * (nu + p) * np.log1p(bqb / nu), scale * qb


def _penalty_hessian(beta, kind, nu, q):
    if kind == 0:
        return q
    qb = q @ beta
    bqb = float(beta @ qb)
    p = beta.shape[0]
    a = (nu + p) / (nu + bqb)
    b = 2.0 * (nu + p) / (nu + bqb) ** 2
    return a * q - b * np.outer(qb, qb)


def _objective(beta, t, y, kind, nu, q):
    nll = float(np.sum(_softplus(t)) - y @ t)
    pen, _ = _penalty(beta, kind, nu, q)
    return nll + pen


def logistic_newton(x, y, kind, nu, q, beta0, max_iter, tol):
    """Damped-Newton minimization of the penalized Bernoulli deviance.

    kind 0: quadratic penalty 0.5 b'Qb; kind 1: multivariate-T penalty
    0.5 (nu+p) log(1 + b'Qb/nu). Armijo backtracking (c=1e-4, halving);
    steepest-descent fallback when the Hessian factorization fails or the
    Newton direction is not a descent direction.

    Returns (beta, iterations, grad_inf_norm, converged, fallback_steps).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    beta = np.asarray(beta0, dtype=np.float64).copy()
    t = x @ beta
    f = _objective(beta, t, y, kind, nu, q)
    prob = _expit(t)
    _, pen_grad = _penalty(beta, kind, nu, q)
    g = x.T @ (prob - y) + pen_grad
    iterations = 0
    fallback_steps = 0
    for _ in range(max_iter):
        if float(np.max(np.abs(g))) <= tol:
            break
        w_diag = prob * (1.0 - prob)
        h = (x * w_diag[:, None]).T @ x + _penalty_hessian(beta, kind, nu, q)
        try:
            c = np.linalg.cholesky(h)
            d = -np.linalg.solve(c.T, np.linalg.solve(c, g))
        except np.linalg.LinAlgError:
            d = None
        newton_ok = d is not None and float(g @ d) < 0.0
        if not newton_ok:
            d = -g
            fallback_steps += 1
        slope = float(g @ d)
        # once the Newton decrement sinks below the float resolution of f,
        # a sufficient-decrease test cannot certify progress; take the
        # (tiny) full Newton step and let quadratic convergence finish
        if (
            newton_ok
            and -slope <= 1e-13 * (1.0 + abs(f))
            and float(np.max(np.abs(d))) <= 1e-4 * (1.0 + float(np.max(np.abs(beta))))
        ):
            beta_new = beta + d
            t_new = x @ beta_new
            f_new = _objective(beta_new, t_new, y, kind, nu, q)
            accepted = True
        else:
            alpha = 1.0
            accepted = False
            for _ in range(MAX_HALVINGS):
                beta_new = beta + alpha * d
                t_new = x @ beta_new
                f_new = _objective(beta_new, t_new, y, kind, nu, q)
                if f_new <= f + ARMIJO_C * alpha * slope:
                    accepted = True
                    break
                alpha *= 0.5
        if not accepted:
            break
        beta, t, f = beta_new, t_new, f_new
        prob = _expit(t)
        _, pen_grad = _penalty(beta, kind, nu, q)
        g = x.T @ (prob - y) + pen_grad
        iterations += 1
    grad_inf = float(np.max(np.abs(g)))
    return beta, iterations, grad_inf, grad_inf <= tol, fallback_steps
