# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: simplex QP and penalized logistic Newton.

Control flow mirrors stackcast._kernels._pure; only the inner loops are
lowered to C. Last-ulp float differences between the backends are expected.
"""

import numpy as np

cimport numpy as cnp
from libc.float cimport DBL_EPSILON
from libc.math cimport exp, fabs, log1p, sqrt

cnp.import_array()

DEF ARMIJO_C = 1e-4
DEF MAX_HALVINGS = 60


cdef inline double c_expit(double t) nogil:
    cdef double e
    if t >= 0.0:
        return 1.0 / (1.0 + exp(-t))
    e = exp(t)
    return e / (1.0 + e)


cdef inline double c_softplus(double t) nogil:
    if t > 0.0:
        return t + log1p(exp(-t))
    return log1p(exp(t))


cdef double _dot(double[::1] a, double[::1] b) nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(a.shape[0]):
        s += a[i] * b[i]
    return s


cdef void _matvec(double[:, ::1] a, double[::1] v, double[::1] out) nogil:
    cdef Py_ssize_t i, j
    cdef double s
    for i in range(a.shape[0]):
        s = 0.0
        for j in range(a.shape[1]):
            s += a[i, j] * v[j]
        out[i] = s


cdef int _chol_inplace(double[:, ::1] a) nogil:
    # lower-triangular factor stored in place; -1 when not PD
    cdef Py_ssize_t p = a.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double s
    for j in range(p):
        s = a[j, j]
        for k in range(j):
            s -= a[j, k] * a[j, k]
        if s <= 0.0:
            return -1
        a[j, j] = sqrt(s)
        for i in range(j + 1, p):
            s = a[i, j]
            for k in range(j):
                s -= a[i, k] * a[j, k]
            a[i, j] = s / a[j, j]
    return 0


cdef void _chol_solve(double[:, ::1] l, double[::1] b, double[::1] out) nogil:
    cdef Py_ssize_t p = l.shape[0]
    cdef Py_ssize_t i, k
    cdef double s
    for i in range(p):
        s = b[i]
        for k in range(i):
            s -= l[i, k] * out[k]
        out[i] = s / l[i, i]
    for i in range(p - 1, -1, -1):
        s = out[i]
        for k in range(i + 1, p):
            s -= l[k, i] * out[k]
        out[i] = s / l[i, i]


def project_simplex(v):
    """Euclidean projection of v onto {w >= 0, sum w = 1} (sort and threshold)."""
    cdef cnp.ndarray[double, ndim=1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] u = np.sort(vv)[::-1].copy()
    cdef Py_ssize_t k = vv.shape[0]
    cdef Py_ssize_t j, rho = 0
    cdef double css = 0.0, tau = 0.0
    for j in range(k):
        css += u[j]
        if u[j] - (css - 1.0) / (j + 1.0) > 0.0:
            rho = j
            tau = (css - 1.0) / (j + 1.0)
    cdef cnp.ndarray[double, ndim=1] out = np.empty(k, dtype=np.float64)
    for j in range(k):
        out[j] = vv[j] - tau if vv[j] > tau else 0.0
    return out


cdef double _power_lambda_max(double[:, ::1] s):
    cdef Py_ssize_t k = s.shape[0]
    cdef cnp.ndarray[double, ndim=1] v_arr = np.empty(k, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] u_arr = np.empty(k, dtype=np.float64)
    cdef double[::1] v = v_arr
    cdef double[::1] u = u_arr
    cdef Py_ssize_t i, it
    cdef double nrm = 0.0, lam = 0.0, lam_new
    for i in range(k):
        v[i] = s[i, i] + 1.0
        nrm += v[i] * v[i]
    nrm = sqrt(nrm)
    for i in range(k):
        v[i] /= nrm
    for it in range(200):
        _matvec(s, v, u)
        nrm = sqrt(_dot(u, u))
        if nrm == 0.0:
            return 0.0
        lam_new = _dot(v, u)
        for i in range(k):
            v[i] = u[i] / nrm
        if fabs(lam_new - lam) <= 1e-12 * max(1.0, fabs(lam_new)):
            return max(lam_new, 0.0)
        lam = lam_new
    return max(lam, 0.0)


cdef double _quad_form(double[:, ::1] s, double[::1] w, double[::1] tmp) nogil:
    _matvec(s, w, tmp)
    return _dot(w, tmp)


def solve_simplex_qp(s, w0, int max_iter, double kkt_tol, double vertex_slack):
    """Accelerated projected gradient for min w' S w over the unit simplex.

    Returns (w, objective, kkt_residual, iterations, converged); same
    contract as the pure backend.
    """
    cdef cnp.ndarray[double, ndim=2] s_arr = np.ascontiguousarray(s, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] w_arr = np.array(w0, dtype=np.float64)
    cdef double[:, ::1] sv = s_arr
    cdef Py_ssize_t k = w_arr.shape[0]
    if k == 1:
        return np.ones(1), float(s_arr[0, 0]), 0.0, 0, True

    # lam_ref anchors the fixed-point residual; step_lam alone is doubled
    # when a step overshoots
    cdef double lam_ref = _power_lambda_max(sv) * (1.0 + 1e-7)
    cdef cnp.ndarray[double, ndim=1] tmp_arr = np.empty(k, dtype=np.float64)
    cdef double[::1] tmp = tmp_arr
    cdef double[::1] wv = w_arr
    if lam_ref <= 0.0:
        return w_arr, float(_quad_form(sv, wv, tmp)), 0.0, 0, True
    cdef double step_lam = lam_ref

    cdef double min_diag = s_arr[0, 0]
    cdef Py_ssize_t i
    for i in range(1, k):
        if sv[i, i] < min_diag:
            min_diag = sv[i, i]

    cdef cnp.ndarray[double, ndim=1] z_arr = w_arr.copy()
    cdef double fw = _quad_form(sv, wv, tmp)
    cdef double tm = 1.0, t_next, f_next, kkt, diff
    cdef cnp.ndarray[double, ndim=1] w_next, probe
    cdef int it = 0
    cdef bint converged = False
    while it < max_iter:
        it += 1
        _matvec(sv, z_arr, tmp)
        w_next = project_simplex(z_arr - tmp_arr / step_lam)
        f_next = _quad_form(sv, w_next, tmp)
        if f_next > fw:
            tm = 1.0
            _matvec(sv, wv, tmp)
            w_next = project_simplex(w_arr - tmp_arr / step_lam)
            f_next = _quad_form(sv, w_next, tmp)
            # the plain step never increases f in exact arithmetic, so only
            # a rise beyond float resolution signals an underestimated
            # lambda_max; rounding-level wiggles are accepted as progress
            if f_next > fw + 4.0 * DBL_EPSILON * (1.0 + fabs(fw)):
                _matvec(sv, wv, tmp)
                probe = project_simplex(w_arr - tmp_arr / lam_ref)
                kkt = 0.0
                for i in range(k):
                    diff = w_arr[i] - probe[i]
                    kkt += diff * diff
                kkt = sqrt(kkt)
                if kkt <= kkt_tol and fw <= min_diag + vertex_slack:
                    converged = True
                    break
                step_lam *= 2.0
                z_arr = w_arr.copy()
                continue
        if np.array_equal(w_next, w_arr):
            # pinned iterate: if even the plain step cannot move it, no
            # representable progress remains
            _matvec(sv, wv, tmp)
            probe = project_simplex(w_arr - tmp_arr / step_lam)
            if np.array_equal(probe, w_arr):
                converged = fw <= min_diag + vertex_slack
                break
            z_arr = w_arr.copy()
            tm = 1.0
            continue
        if f_next == fw:
            # float-flat region: drop momentum so plain projected-gradient
            # contraction can finish the last ulps
            z_arr = w_next.copy()
            tm = 1.0
        else:
            t_next = 0.5 * (1.0 + sqrt(1.0 + 4.0 * tm * tm))
            z_arr = w_next + ((tm - 1.0) / t_next) * (w_next - w_arr)
            tm = t_next
        w_arr = w_next
        wv = w_arr
        fw = f_next
        _matvec(sv, wv, tmp)
        probe = project_simplex(w_arr - tmp_arr / lam_ref)
        kkt = 0.0
        for i in range(k):
            diff = w_arr[i] - probe[i]
            kkt += diff * diff
        kkt = sqrt(kkt)
        if kkt <= kkt_tol and fw <= min_diag + vertex_slack:
            converged = True
            break

    w_arr = np.where(w_arr < 1e-12, 0.0, w_arr)
    w_arr = w_arr / np.sum(w_arr)
    wv = w_arr
    cdef double obj = _quad_form(sv, wv, tmp)
    _matvec(sv, wv, tmp)
    probe = project_simplex(w_arr - tmp_arr / lam_ref)
    kkt = 0.0
    for i in range(k):
        diff = w_arr[i] - probe[i]
        kkt += diff * diff
    kkt = sqrt(kkt)
    return w_arr, obj, kkt, it, converged


cdef double _penalty_value(double[::1] beta, int kind, double nu, double[:, ::1] q,
                           double[::1] qb) nogil:
    cdef Py_ssize_t p = beta.shape[0]
    cdef double bqb
    _matvec(q, beta, qb)
    bqb = _dot(beta, qb)
    if kind == 0:
        return 0.5 * bqb
    return 0.5 * (nu + p) * log1p(bqb / nu)


cdef void _penalty_grad(double[::1] beta, int kind, double nu, double[:, ::1] q,
                        double[::1] out) nogil:
    cdef Py_ssize_t p = beta.shape[0]
    cdef Py_ssize_t i
    cdef double bqb, scale
    _matvec(q, beta, out)
    if kind == 0:
        return
    bqb = _dot(beta, out)
    scale = (nu + p) / (nu + bqb)
    for i in range(p):
        out[i] *= scale


cdef void _hessian(double[:, ::1] x, double[::1] wdiag, double[::1] beta,
                   int kind, double nu, double[:, ::1] q, double[::1] qb,
                   double[:, ::1] h) nogil:
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t p = x.shape[1]
    cdef Py_ssize_t i, j, r
    cdef double s, bqb, a, b
    for i in range(p):
        for j in range(i, p):
            s = 0.0
            for r in range(n):
                s += x[r, i] * wdiag[r] * x[r, j]
            h[i, j] = s
            h[j, i] = s
    if kind == 0:
        for i in range(p):
            for j in range(p):
                h[i, j] += q[i, j]
        return
    _matvec(q, beta, qb)
    bqb = _dot(beta, qb)
    a = (nu + p) / (nu + bqb)
    b = 2.0 * (nu + p) / ((nu + bqb) * (nu + bqb))
    for i in range(p):
        for j in range(p):
            h[i, j] += a * q[i, j] - b * qb[i] * qb[j]


cdef double _nll(double[::1] t, double[::1] y) nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(t.shape[0]):
        s += c_softplus(t[i]) - y[i] * t[i]
    return s


def logistic_newton(x, y, int kind, double nu, q, beta0, int max_iter, double tol):
    """Damped-Newton MAP for penalized logistic regression (compiled twin).

    Returns (beta, iterations, grad_inf_norm, converged, fallback_steps).
    """
    cdef cnp.ndarray[double, ndim=2] x_arr = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] y_arr = np.ascontiguousarray(y, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] q_arr = np.ascontiguousarray(q, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] beta = np.array(beta0, dtype=np.float64)
    cdef Py_ssize_t n = x_arr.shape[0]
    cdef Py_ssize_t p = x_arr.shape[1]

    cdef cnp.ndarray[double, ndim=1] t = np.empty(n)
    cdef cnp.ndarray[double, ndim=1] t_new = np.empty(n)
    cdef cnp.ndarray[double, ndim=1] prob = np.empty(n)
    cdef cnp.ndarray[double, ndim=1] wdiag = np.empty(n)
    cdef cnp.ndarray[double, ndim=1] g = np.empty(p)
    cdef cnp.ndarray[double, ndim=1] qb = np.empty(p)
    cdef cnp.ndarray[double, ndim=1] d = np.empty(p)
    cdef cnp.ndarray[double, ndim=1] beta_new = np.empty(p)
    cdef cnp.ndarray[double, ndim=2] h = np.empty((p, p))
    cdef double[:, ::1] xv = x_arr
    cdef double[:, ::1] qv = q_arr
    cdef double[:, ::1] hv = h
    cdef double[::1] yv = y_arr
    cdef double[::1] bv = beta
    cdef double[::1] tv = t
    cdef double[::1] tnv = t_new
    cdef double[::1] pv = prob
    cdef double[::1] wv = wdiag
    cdef double[::1] gv = g
    cdef double[::1] qbv = qb
    cdef double[::1] dv = d
    cdef double[::1] bnv = beta_new

    cdef Py_ssize_t i, j
    cdef double f, f_new, slope, alpha, ginf, s
    cdef int iterations = 0, fallback_steps = 0, it, hs
    cdef bint accepted, newton_ok
    cdef double dinf, binf

    _matvec(xv, bv, tv)
    f = _nll(tv, yv) + _penalty_value(bv, kind, nu, qv, qbv)
    for i in range(n):
        pv[i] = c_expit(tv[i])
    _penalty_grad(bv, kind, nu, qv, gv)
    for j in range(p):
        s = gv[j]
        for i in range(n):
            s += xv[i, j] * (pv[i] - yv[i])
        gv[j] = s

    for it in range(max_iter):
        ginf = 0.0
        for j in range(p):
            if fabs(gv[j]) > ginf:
                ginf = fabs(gv[j])
        if ginf <= tol:
            break
        for i in range(n):
            wv[i] = pv[i] * (1.0 - pv[i])
        _hessian(xv, wv, bv, kind, nu, qv, qbv, hv)
        slope = 0.0
        newton_ok = _chol_inplace(hv) == 0
        if newton_ok:
            _chol_solve(hv, gv, dv)
            for j in range(p):
                dv[j] = -dv[j]
            slope = _dot(gv, dv)
            if slope >= 0.0:
                newton_ok = False
        if not newton_ok:
            for j in range(p):
                dv[j] = -gv[j]
            fallback_steps += 1
            slope = _dot(gv, dv)
        dinf = 0.0
        binf = 0.0
        for j in range(p):
            if fabs(dv[j]) > dinf:
                dinf = fabs(dv[j])
            if fabs(bv[j]) > binf:
                binf = fabs(bv[j])
        # once the Newton decrement sinks below the float resolution of f,
        # a sufficient-decrease test cannot certify progress; take the
        # (tiny) full Newton step and let quadratic convergence finish
        if newton_ok and -slope <= 1e-13 * (1.0 + fabs(f)) and dinf <= 1e-4 * (1.0 + binf):
            for j in range(p):
                bnv[j] = bv[j] + dv[j]
            _matvec(xv, bnv, tnv)
            f_new = _nll(tnv, yv) + _penalty_value(bnv, kind, nu, qv, qbv)
            accepted = True
        else:
            alpha = 1.0
            accepted = False
            for hs in range(MAX_HALVINGS):
                for j in range(p):
                    bnv[j] = bv[j] + alpha * dv[j]
                _matvec(xv, bnv, tnv)
                f_new = _nll(tnv, yv) + _penalty_value(bnv, kind, nu, qv, qbv)
                if f_new <= f + ARMIJO_C * alpha * slope:
                    accepted = True
                    break
                alpha *= 0.5
        if not accepted:
            break
        for j in range(p):
            bv[j] = bnv[j]
        for i in range(n):
            tv[i] = tnv[i]
        f = f_new
        for i in range(n):
            pv[i] = c_expit(tv[i])
        _penalty_grad(bv, kind, nu, qv, gv)
        for j in range(p):
            s = gv[j]
            for i in range(n):
                s += xv[i, j] * (pv[i] - yv[i])
            gv[j] = s
        iterations += 1

    ginf = 0.0
    for j in range(p):
        if fabs(gv[j]) > ginf:
            ginf = fabs(gv[j])
    return beta, iterations, ginf, ginf <= tol, fallback_steps
