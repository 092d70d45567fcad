"""Hot numeric kernels with two interchangeable implementations.

Every function here exists twice: a pure-NumPy version (vectorized, BLAS
backed) and a numba ``@njit`` version (explicit loops, also BLAS backed for
matrix-vector products). On import the module binds the public names to the
numba builds when numba is importable, and to the NumPy builds otherwise.

Set the environment variable ``BILN_NO_NUMBA=1`` before import to force the
pure-NumPy path, e.g. for debugging or for timing the two paths against each
other (see ``benchmarks/bench_kernels.py``). The two paths implement the same
arithmetic but may differ in floating-point rounding (different summation
order), so results are reproducible within a path, not across paths.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_disabled() -> bool:
    return os.environ.get("BILN_NO_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}


if not _numba_disabled():
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        njit = None
else:
    njit = None

USE_NUMBA = njit is not None

_MAX_BACKTRACKS = 60
_PROJ_TOL = 1e-13
_PROJ_MAX_ROUNDS = 1000


# ---------------------------------------------------------------------------
# NumPy path
# ---------------------------------------------------------------------------

def _pairwise_sq_dists_np(a, b):
    """Squared Euclidean distances, shape (len(a), len(b))."""
    aa = np.einsum("ij,ij->i", a, a)
    bb = np.einsum("ij,ij->i", b, b)
    d = aa[:, None] + bb[None, :] - 2.0 * (a @ b.T)
    np.maximum(d, 0.0, out=d)  # gemm trick can go slightly negative
    return d


def _gaussian_kernel_np(a, b, sigma):
    """exp(-sigma * ||x - x'||^2) for all pairs."""
    return np.exp(-sigma * _pairwise_sq_dists_np(a, b))


def _knn_select_np(x, k):
    """Indices of the k nearest rows (self included), ties by ascending index."""
    d = _pairwise_sq_dists_np(x, x)
    order = np.argsort(d, axis=1, kind="stable")
    return np.ascontiguousarray(order[:, :k]).astype(np.int64)


def _logistic_value_np(theta, x, y, w, l2):
    margins = y * (x @ theta)
    data = float(w @ np.logaddexp(0.0, -margins)) / x.shape[0]
    return data + 0.5 * l2 * float(theta[1:] @ theta[1:])


def _logistic_value_grad_np(theta, x, y, w, l2):
    n = x.shape[0]
    margins = y * (x @ theta)
    value = float(w @ np.logaddexp(0.0, -margins)) / n
    value += 0.5 * l2 * float(theta[1:] @ theta[1:])
    # d/dz log(1+exp(-z)) = -sigmoid(-z); sigmoid(-z) = exp(-logaddexp(0, z))
    coef = w * y * np.exp(-np.logaddexp(0.0, margins))
    grad = -(x.T @ coef) / n
    grad[1:] += l2 * theta[1:]
    return value, grad


def _logistic_gd_np(x, y, w, l2, max_iters, grad_tol, step0, shrink, c1):
    p = x.shape[1]
    theta = np.zeros(p)
    trace = np.empty(max_iters + 1)
    value, grad = _logistic_value_grad_np(theta, x, y, w, l2)
    trace[0] = value
    iters = 0
    converged = False
    for _ in range(max_iters):
        if np.max(np.abs(grad)) <= grad_tol:
            converged = True
            break
        gg = float(grad @ grad)
        s = step0
        accepted = False
        for _ in range(_MAX_BACKTRACKS):
            cand = theta - s * grad
            cand_value = _logistic_value_np(cand, x, y, w, l2)
            if cand_value <= value - c1 * s * gg:
                accepted = True
                break
            s *= shrink
        if not accepted:
            break
        theta = cand
        iters += 1
        value, grad = _logistic_value_grad_np(theta, x, y, w, l2)
        trace[iters] = value
    if not converged:
        converged = bool(np.max(np.abs(grad)) <= grad_tol)
    return theta, iters, converged, trace[: iters + 1]


def _box_slab_project_np(v, cap, lo, hi):
    """Dykstra projection onto [0, cap]^m intersected with lo <= sum <= hi."""
    m = v.shape[0]
    x = v.copy()
    p = np.zeros(m)
    q = np.zeros(m)
    for _ in range(_PROJ_MAX_ROUNDS):
        ybox = np.clip(x + p, 0.0, cap)
        p = x + p - ybox
        z = ybox + q
        s = float(z.sum())
        if s > hi:
            xn = z - (s - hi) / m
        elif s < lo:
            xn = z + (lo - s) / m
        else:
            xn = z.copy()
        q = z - xn
        if np.max(np.abs(xn - x)) <= _PROJ_TOL:
            return xn
        x = xn
    return x


def _kmm_pgd_np(K, kappa, cap, lo, hi, step, tol, max_iters, stall_window, stall_ratio):
    m = kappa.shape[0]
    beta = _box_slab_project_np(np.ones(m), cap, lo, hi)
    trace = np.empty(max_iters + 1)
    grad = K @ beta - kappa
    value = 0.5 * float(beta @ (grad - kappa))
    trace[0] = value
    iters = 0
    pg_norm = np.inf
    checkpoint = np.inf
    check_at = stall_window
    for _ in range(max_iters):
        cand = _box_slab_project_np(beta - step * grad, cap, lo, hi)
        diff = beta - cand
        pg_norm = float(np.sqrt(diff @ diff)) / step
        if pg_norm <= tol:
            break
        beta = cand
        grad = K @ beta - kappa
        value = 0.5 * float(beta @ (grad - kappa))
        iters += 1
        trace[iters] = value
        if iters == check_at:
            # stalled: the projected gradient has stopped shrinking
            if pg_norm >= stall_ratio * checkpoint:
                break
            checkpoint = pg_norm
            check_at += stall_window
    return beta, iters, pg_norm, trace[: iters + 1]


# ---------------------------------------------------------------------------
# numba path: same arithmetic written as explicit loops
# ---------------------------------------------------------------------------

def _pairwise_sq_dists_loop(a, b):
    m, d = a.shape
    n = b.shape[0]
    out = np.empty((m, n))
    for i in range(m):
        for j in range(n):
            s = 0.0
            for t in range(d):
                diff = a[i, t] - b[j, t]
                s += diff * diff
            out[i, j] = s
    return out


def _make_gaussian_kernel_loop(pairwise):
    def _gaussian_kernel_loop(a, b, sigma):
        d = pairwise(a, b)
        m, n = d.shape
        for i in range(m):
            for j in range(n):
                d[i, j] = np.exp(-sigma * d[i, j])
        return d

    return _gaussian_kernel_loop


def _knn_select_loop(x, k):
    n, d = x.shape
    out = np.empty((n, k), dtype=np.int64)
    row = np.empty(n)
    for i in range(n):
        for j in range(n):
            s = 0.0
            for t in range(d):
                diff = x[i, t] - x[j, t]
                s += diff * diff
            row[j] = s
        order = np.argsort(row, kind="mergesort")  # stable: ties keep index order
        for t in range(k):
            out[i, t] = order[t]
    return out


def _logistic_value_loop(theta, x, y, w, l2):
    n, p = x.shape
    acc = 0.0
    for i in range(n):
        z = 0.0
        for t in range(p):
            z += x[i, t] * theta[t]
        m = y[i] * z
        if m >= 0.0:
            acc += w[i] * np.log1p(np.exp(-m))
        else:
            acc += w[i] * (-m + np.log1p(np.exp(m)))
    reg = 0.0
    for t in range(1, p):
        reg += theta[t] * theta[t]
    return acc / n + 0.5 * l2 * reg


def _logistic_value_grad_loop(theta, x, y, w, l2):
    n, p = x.shape
    grad = np.zeros(p)
    acc = 0.0
    for i in range(n):
        z = 0.0
        for t in range(p):
            z += x[i, t] * theta[t]
        m = y[i] * z
        if m >= 0.0:
            e = np.exp(-m)
            acc += w[i] * np.log1p(e)
            sig = e / (1.0 + e)  # sigmoid(-m)
        else:
            acc += w[i] * (-m + np.log1p(np.exp(m)))
            sig = 1.0 / (1.0 + np.exp(m))
        c = w[i] * y[i] * sig
        for t in range(p):
            grad[t] -= c * x[i, t]
    reg = 0.0
    for t in range(p):
        grad[t] /= n
        if t >= 1:
            grad[t] += l2 * theta[t]
            reg += theta[t] * theta[t]
    return acc / n + 0.5 * l2 * reg, grad


def _make_logistic_gd_loop(value_fn, value_grad_fn):
    def _logistic_gd_loop(x, y, w, l2, max_iters, grad_tol, step0, shrink, c1):
        p = x.shape[1]
        theta = np.zeros(p)
        trace = np.empty(max_iters + 1)
        value, grad = value_grad_fn(theta, x, y, w, l2)
        trace[0] = value
        iters = 0
        converged = False
        for _ in range(max_iters):
            ginf = 0.0
            gg = 0.0
            for t in range(p):
                a = abs(grad[t])
                if a > ginf:
                    ginf = a
                gg += grad[t] * grad[t]
            if ginf <= grad_tol:
                converged = True
                break
            s = step0
            accepted = False
            cand = theta
            for _ in range(_MAX_BACKTRACKS):
                cand = theta - s * grad
                cand_value = value_fn(cand, x, y, w, l2)
                if cand_value <= value - c1 * s * gg:
                    accepted = True
                    break
                s *= shrink
            if not accepted:
                break
            theta = cand
            iters += 1
            value, grad = value_grad_fn(theta, x, y, w, l2)
            trace[iters] = value
        if not converged:
            ginf = 0.0
            for t in range(p):
                a = abs(grad[t])
                if a > ginf:
                    ginf = a
            converged = ginf <= grad_tol
        return theta, iters, converged, trace[: iters + 1]

    return _logistic_gd_loop


def _box_slab_project_loop(v, cap, lo, hi):
    m = v.shape[0]
    x = v.copy()
    p = np.zeros(m)
    q = np.zeros(m)
    xn = np.empty(m)
    for _ in range(_PROJ_MAX_ROUNDS):
        s = 0.0
        for i in range(m):
            yb = x[i] + p[i]
            if yb < 0.0:
                yb = 0.0
            elif yb > cap:
                yb = cap
            p[i] = x[i] + p[i] - yb
            z = yb + q[i]
            xn[i] = z
            s += z
        if s > hi:
            shift = (s - hi) / m
        elif s < lo:
            shift = (lo - s) / m
            shift = -shift
        else:
            shift = 0.0
        delta = 0.0
        for i in range(m):
            z = xn[i]
            xn[i] = z - shift
            q[i] = z - xn[i]
            a = abs(xn[i] - x[i])
            if a > delta:
                delta = a
            x[i] = xn[i]
        if delta <= _PROJ_TOL:
            break
    return x.copy()


def _make_kmm_pgd_loop(project):
    def _kmm_pgd_loop(K, kappa, cap, lo, hi, step, tol, max_iters, stall_window, stall_ratio):
        m = kappa.shape[0]
        beta = project(np.ones(m), cap, lo, hi)
        trace = np.empty(max_iters + 1)
        grad = np.dot(K, beta) - kappa
        value = 0.0
        for i in range(m):
            value += beta[i] * (grad[i] - kappa[i])
        value *= 0.5
        trace[0] = value
        iters = 0
        pg_norm = np.inf
        checkpoint = np.inf
        check_at = stall_window
        for _ in range(max_iters):
            cand = project(beta - step * grad, cap, lo, hi)
            sq = 0.0
            for i in range(m):
                diff = beta[i] - cand[i]
                sq += diff * diff
            pg_norm = np.sqrt(sq) / step
            if pg_norm <= tol:
                break
            beta = cand
            grad = np.dot(K, beta) - kappa
            value = 0.0
            for i in range(m):
                value += beta[i] * (grad[i] - kappa[i])
            value *= 0.5
            iters += 1
            trace[iters] = value
            if iters == check_at:
                # stalled: the projected gradient has stopped shrinking
                if pg_norm >= stall_ratio * checkpoint:
                    break
                checkpoint = pg_norm
                check_at += stall_window
        return beta, iters, pg_norm, trace[: iters + 1]

    return _kmm_pgd_loop


# ---------------------------------------------------------------------------
# public bindings
# ---------------------------------------------------------------------------

if USE_NUMBA:
    pairwise_sq_dists = njit(cache=True)(_pairwise_sq_dists_loop)
    gaussian_kernel = njit(cache=True)(_make_gaussian_kernel_loop(pairwise_sq_dists))
    knn_select = njit(cache=True)(_knn_select_loop)
    logistic_value = njit(cache=True)(_logistic_value_loop)
    logistic_value_grad = njit(cache=True)(_logistic_value_grad_loop)
    logistic_gd = njit(cache=True)(
        _make_logistic_gd_loop(logistic_value, logistic_value_grad)
    )
    box_slab_project = njit(cache=True)(_box_slab_project_loop)
    kmm_pgd = njit(cache=True)(_make_kmm_pgd_loop(box_slab_project))
else:
    pairwise_sq_dists = _pairwise_sq_dists_np
    gaussian_kernel = _gaussian_kernel_np
    knn_select = _knn_select_np
    logistic_value = _logistic_value_np
    logistic_value_grad = _logistic_value_grad_np
    logistic_gd = _logistic_gd_np
    box_slab_project = _box_slab_project_np
    kmm_pgd = _kmm_pgd_np
