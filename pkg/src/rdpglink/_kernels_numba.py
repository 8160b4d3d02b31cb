"""Compiled kernels. Mirrors ``_kernels_numpy`` function for function."""

import numpy as np
from numba import config, njit, prange

# skip the TBB probe, which warns on systems with an old libtbb
config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

STATUS_OK = 0
STATUS_NONCAUSAL = 1
STATUS_SHORT = 2

RCOND = 1e-10
CAUSAL_MARGIN = 1e-6
GN_MAX_ITER = 50
GN_RESTARTS = 5


@njit(cache=True)
def csr_matvec(indptr, indices, data, x):
    n = indptr.shape[0] - 1
    y = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * x[indices[k]]
        y[i] = acc
    return y


@njit(cache=True)
def difference(z, b, B, s):
    w = z.copy()
    for _ in range(b):
        w = w[1:] - w[:-1]
    for _ in range(B):
        w = w[s:] - w[:-s]
    return w


@njit(cache=True)
def _residuals(w, theta, p, P, s, icpt, e, J):
    # theta layout: [c, phi_1..phi_p, Phi_1..Phi_P]
    start = p + P * s
    m = w.shape[0] - start
    for r in range(m):
        t = start + r
        pred = theta[0]
        for i in range(1, p + 1):
            pred += theta[i] * w[t - i]
        for j in range(1, P + 1):
            pred += theta[p + j] * w[t - j * s]
            for i in range(1, p + 1):
                pred -= theta[i] * theta[p + j] * w[t - i - j * s]
        e[r] = w[t] - pred
        J[r, 0] = -1.0 if icpt else 0.0
        for i in range(1, p + 1):
            g = w[t - i]
            for j in range(1, P + 1):
                g -= theta[p + j] * w[t - i - j * s]
            J[r, i] = -g
        for j in range(1, P + 1):
            g = w[t - j * s]
            for i in range(1, p + 1):
                g -= theta[i] * w[t - i - j * s]
            J[r, p + j] = -g


@njit(cache=True)
def _sse(w, theta, p, P, s, icpt, e, J):
    _residuals(w, theta, p, P, s, icpt, e, J)
    return np.sum(e * e)


@njit(cache=True)
def _acov(w, lag):
    n = w.shape[0]
    mu = np.mean(w)
    acc = 0.0
    for t in range(lag, n):
        acc += (w[t] - mu) * (w[t - lag] - mu)
    return acc / n


@njit(cache=True)
def _yule_walker(w, lags):
    k = lags.shape[0]
    G = np.empty((k, k))
    g = np.empty(k)
    for a in range(k):
        g[a] = _acov(w, lags[a])
        for c in range(k):
            G[a, c] = _acov(w, abs(lags[a] - lags[c]))
    return _lstsq_small(G, g, RCOND)


@njit(cache=True)
def _max_root_inverse(coefs):
    # largest |root|^-1 of 1 - c_1 v - ... - c_k v^k == spectral radius of the companion matrix
    k = coefs.shape[0]
    if k == 0:
        return 0.0
    if k == 1:
        return abs(coefs[0])
    C = np.zeros((k, k), dtype=np.complex128)
    for i in range(k):
        C[0, i] = coefs[i]
    for i in range(1, k):
        C[i, i - 1] = 1.0
    ev = np.linalg.eigvals(C)
    return np.max(np.abs(ev))


@njit(cache=True)
def is_causal(theta, p, P):
    if _max_root_inverse(theta[1:1 + p]) >= 1.0 - CAUSAL_MARGIN:
        return False
    return _max_root_inverse(theta[1 + p:1 + p + P]) < 1.0 - CAUSAL_MARGIN


@njit(cache=True)
def _lstsq_small(A, b, rcond):
    # Householder QR with column pivoting; columns whose pivot falls below
    # rcond * |R_00| are dropped (their coefficient is zero)
    m, k = A.shape
    R = A.copy()
    y = b.copy()
    perm = np.arange(k)
    v = np.empty(m)
    rank = 0
    r00 = 0.0
    for j in range(k):
        best = -1.0
        piv = j
        for c in range(j, k):
            nrm = 0.0
            for r in range(j, m):
                nrm += R[r, c] * R[r, c]
            if nrm > best:
                best = nrm
                piv = c
        if piv != j:
            for r in range(m):
                tmp = R[r, j]
                R[r, j] = R[r, piv]
                R[r, piv] = tmp
            tmp_i = perm[j]
            perm[j] = perm[piv]
            perm[piv] = tmp_i
        alpha = np.sqrt(best)
        if j == 0:
            r00 = alpha
        if alpha == 0.0 or alpha <= rcond * r00 or j >= m:
            break
        sign = 1.0 if R[j, j] >= 0.0 else -1.0
        vn = 0.0
        for r in range(j, m):
            v[r] = R[r, j]
        v[j] += sign * alpha
        for r in range(j, m):
            vn += v[r] * v[r]
        for c in range(j, k):
            f = 0.0
            for r in range(j, m):
                f += v[r] * R[r, c]
            f *= 2.0 / vn
            for r in range(j, m):
                R[r, c] -= f * v[r]
        f = 0.0
        for r in range(j, m):
            f += v[r] * y[r]
        f *= 2.0 / vn
        for r in range(j, m):
            y[r] -= f * v[r]
        rank += 1
    z = np.zeros(k)
    for i in range(rank - 1, -1, -1):
        acc = y[i]
        for c in range(i + 1, rank):
            acc -= R[i, c] * z[c]
        z[i] = acc / R[i, i]
    out = np.zeros(k)
    for i in range(k):
        out[perm[i]] = z[i]
    return out


@njit(cache=True)
def _gauss_newton(w, theta, p, P, s, icpt, e, J, e2, J2):
    sse = _sse(w, theta, p, P, s, icpt, e, J)
    trial = np.empty_like(theta)
    for _ in range(GN_MAX_ITER):
        delta = _lstsq_small(J, -e, RCOND)
        step = 1.0
        accepted = False
        new_sse = sse
        for _h in range(30):
            trial[:] = theta + step * delta
            new_sse = _sse(w, trial, p, P, s, icpt, e2, J2)
            if new_sse <= sse * (1.0 + 1e-14) + 1e-300:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        change = np.sqrt(np.sum((trial - theta) ** 2))
        scale = 1.0 + np.sqrt(np.sum(theta ** 2))
        theta[:] = trial
        e[:] = e2
        J[:, :] = J2
        old = sse
        sse = new_sse
        if change <= 1e-10 * scale or old - sse <= 1e-12 * (old + 1e-300):
            break
    return sse


@njit(cache=True)
def fit_one(w, p, P, s, icpt, theta):
    """Fit one differenced series; fills ``theta`` and returns (sigma2, status)."""
    start = p + P * s
    m = w.shape[0] - start
    theta[:] = 0.0
    if m < 1:
        return np.nan, STATUS_SHORT
    k = p + P + icpt
    if k == 0:
        return np.mean(w[start:] ** 2), STATUS_OK

    init = np.zeros(1 + p + P)
    if p > 0:
        init[1:1 + p] = _yule_walker(w, np.arange(1, p + 1))
    if P > 0:
        init[1 + p:] = _yule_walker(w, np.arange(1, P + 1) * s)
    shrink = 1.0
    while not is_causal(init, p, P) and shrink > 1e-6:
        init[1:] *= 0.5
        shrink *= 0.5
    if icpt:
        init[0] = np.mean(w) * (1.0 - np.sum(init[1:1 + p])) * (1.0 - np.sum(init[1 + p:]))

    e = np.empty(m)
    J = np.empty((m, 1 + p + P))
    e2 = np.empty(m)
    J2 = np.empty((m, 1 + p + P))
    tries = GN_RESTARTS + 1 if (p > 0 and P > 0) else 1
    th = np.empty(1 + p + P)
    sse = 0.0
    for attempt in range(tries):
        th[:] = init
        th[1:] *= 0.5 ** attempt
        sse = _gauss_newton(w, th, p, P, s, icpt, e, J, e2, J2)
        if is_causal(th, p, P):
            theta[:] = th
            return sse / m, STATUS_OK
    theta[:] = th
    return sse / m, STATUS_NONCAUSAL


@njit(cache=True, parallel=True)
def fit_grid(Z, specs, s, pmax, Pmax):
    """Fit every spec row ``(p, b, P, B)`` to every series row of ``Z``.

    Returns coefficient array (N, G, 1 + pmax + Pmax) in canonical layout
    ``[c, phi_1..phi_pmax, Phi_1..Phi_Pmax]``, sigma2 (N, G) and status (N, G).
    """
    N = Z.shape[0]
    G = specs.shape[0]
    coef = np.zeros((N, G, 1 + pmax + Pmax))
    sigma2 = np.full((N, G), np.nan)
    status = np.full((N, G), STATUS_SHORT, dtype=np.int64)
    for n in prange(N):
        for g in range(G):
            p = specs[g, 0]
            b = specs[g, 1]
            P = specs[g, 2]
            B = specs[g, 3]
            if Z.shape[1] - b - B * s < 1:
                continue
            icpt = 1 if b + B == 0 else 0
            w = difference(Z[n], b, B, s)
            th = np.zeros(1 + p + P)
            sig, st = fit_one(w, p, P, s, icpt, th)
            sigma2[n, g] = sig
            status[n, g] = st
            coef[n, g, 0] = th[0]
            for i in range(p):
                coef[n, g, 1 + i] = th[1 + i]
            for j in range(P):
                coef[n, g, 1 + pmax + j] = th[1 + p + j]
    return coef, sigma2, status


@njit(cache=True, parallel=True)
def forecast_linear(hist, lagcoef, intercept, k):
    """Iterate z_t = c + sum_l g_l z_{t-l} forward ``k`` steps for every row."""
    N, L = hist.shape
    maxlag = lagcoef.shape[1]
    out = np.empty((N, k))
    for n in prange(N):
        buf = np.empty(L + k)
        buf[:L] = hist[n]
        for h in range(k):
            t = L + h
            v = intercept[n]
            for lag in range(1, maxlag + 1):
                gl = lagcoef[n, lag - 1]
                if gl != 0.0:
                    v += gl * buf[t - lag]
            buf[t] = v
            out[n, h] = v
    return out
