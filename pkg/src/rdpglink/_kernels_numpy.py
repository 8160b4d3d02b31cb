"""Pure-numpy kernels, vectorized over series instead of compiled loops."""

import numpy as np

STATUS_OK = 0
STATUS_NONCAUSAL = 1
STATUS_SHORT = 2

RCOND = 1e-10
CAUSAL_MARGIN = 1e-6
GN_MAX_ITER = 50
GN_RESTARTS = 5


def csr_matvec(indptr, indices, data, x):
    n = indptr.shape[0] - 1
    rows = np.repeat(np.arange(n), np.diff(indptr))
    return np.bincount(rows, weights=data * x[indices], minlength=n).astype(np.float64)


def difference(z, b, B, s):
    """Apply (1-L)^b (1-L^s)^B along the last axis."""
    w = np.array(z, dtype=np.float64, copy=True)
    for _ in range(b):
        w = w[..., 1:] - w[..., :-1]
    for _ in range(B):
        w = w[..., s:] - w[..., :-s]
    return w


def _lagged(W, p, P, s):
    """Dict lag -> (N, m) slice aligned with the response W[:, start:]."""
    start = p + P * s
    m = W.shape[1] - start
    lags = {0}
    lags.update(range(1, p + 1))
    for j in range(1, P + 1):
        lags.add(j * s)
        lags.update(i + j * s for i in range(1, p + 1))
    return {lag: W[:, start - lag:start - lag + m] for lag in lags}


def _residuals(Wl, theta, p, P, s, icpt):
    phi = theta[:, 1:1 + p]
    Phi = theta[:, 1 + p:1 + p + P]
    pred = np.repeat(theta[:, :1], Wl[0].shape[1], axis=1)
    J = np.zeros(Wl[0].shape + (1 + p + P,))
    if icpt:
        J[:, :, 0] = -1.0
    for i in range(1, p + 1):
        pred += phi[:, i - 1:i] * Wl[i]
    for j in range(1, P + 1):
        pred += Phi[:, j - 1:j] * Wl[j * s]
        for i in range(1, p + 1):
            pred -= phi[:, i - 1:i] * Phi[:, j - 1:j] * Wl[i + j * s]
    for i in range(1, p + 1):
        g = Wl[i].copy()
        for j in range(1, P + 1):
            g -= Phi[:, j - 1:j] * Wl[i + j * s]
        J[:, :, i] = -g
    for j in range(1, P + 1):
        g = Wl[j * s].copy()
        for i in range(1, p + 1):
            g -= phi[:, i - 1:i] * Wl[i + j * s]
        J[:, :, p + j] = -g
    return Wl[0] - pred, J


def _acov(W, lag):
    n = W.shape[1]
    C = W - W.mean(axis=1, keepdims=True)
    return (C[:, lag:] * C[:, :n - lag]).sum(axis=1) / n


def _yule_walker(W, lags):
    k = len(lags)
    G = np.empty((W.shape[0], k, k))
    g = np.empty((W.shape[0], k))
    for a in range(k):
        g[:, a] = _acov(W, lags[a])
        for c in range(k):
            G[:, a, c] = _acov(W, abs(lags[a] - lags[c]))
    return np.einsum("nij,nj->ni", np.linalg.pinv(G, rcond=RCOND), g)


def _max_root_inverse(coefs):
    N, k = coefs.shape
    if k == 0:
        return np.zeros(N)
    if k == 1:
        return np.abs(coefs[:, 0])
    C = np.zeros((N, k, k), dtype=np.complex128)
    C[:, 0, :] = coefs
    C[:, np.arange(1, k), np.arange(k - 1)] = 1.0
    return np.abs(np.linalg.eigvals(C)).max(axis=1)


def is_causal(theta, p, P):
    theta = np.atleast_2d(theta)
    ok = _max_root_inverse(theta[:, 1:1 + p]) < 1.0 - CAUSAL_MARGIN
    return ok & (_max_root_inverse(theta[:, 1 + p:1 + p + P]) < 1.0 - CAUSAL_MARGIN)


def _gauss_newton(Wl, theta, p, P, s, icpt):
    e, J = _residuals(Wl, theta, p, P, s, icpt)
    sse = (e * e).sum(axis=1)
    active = np.ones(theta.shape[0], dtype=bool)
    for _ in range(GN_MAX_ITER):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        pinv = np.linalg.pinv(J[idx], rcond=RCOND)
        delta = -np.einsum("nkm,nm->nk", pinv, e[idx])
        step = np.ones(len(idx))
        pending = np.ones(len(idx), dtype=bool)
        new_theta = theta[idx].copy()
        new_sse = sse[idx].copy()
        new_e = e[idx].copy()
        new_J = J[idx].copy()
        for _h in range(30):
            if not pending.any():
                break
            pi = np.flatnonzero(pending)
            trial = theta[idx[pi]] + step[pi, None] * delta[pi]
            sub = {lag: arr[idx[pi]] for lag, arr in Wl.items()}
            te, tJ = _residuals(sub, trial, p, P, s, icpt)
            tsse = (te * te).sum(axis=1)
            ok = tsse <= sse[idx[pi]] * (1.0 + 1e-14) + 1e-300
            acc = pi[ok]
            new_theta[acc] = trial[ok]
            new_sse[acc] = tsse[ok]
            new_e[acc] = te[ok]
            new_J[acc] = tJ[ok]
            pending[acc] = False
            step[pi[~ok]] *= 0.5
        accepted = ~pending
        change = np.sqrt(((new_theta - theta[idx]) ** 2).sum(axis=1))
        scale = 1.0 + np.sqrt((theta[idx] ** 2).sum(axis=1))
        old = sse[idx]
        done = ~accepted | (change <= 1e-10 * scale) | (old - new_sse <= 1e-12 * (old + 1e-300))
        upd = idx[accepted]
        theta[upd] = new_theta[accepted]
        sse[upd] = new_sse[accepted]
        e[upd] = new_e[accepted]
        J[upd] = new_J[accepted]
        active[idx[done]] = False
    return sse


def fit_spec(W, p, P, s, icpt):
    """Fit one spec to every row of the differenced batch ``W``.

    Returns (theta (N, 1+p+P), sigma2 (N,), status (N,)).
    """
    N = W.shape[0]
    start = p + P * s
    m = W.shape[1] - start
    theta = np.zeros((N, 1 + p + P))
    if m < 1:
        return theta, np.full(N, np.nan), np.full(N, STATUS_SHORT)
    if p + P + icpt == 0:
        return theta, (W[:, start:] ** 2).mean(axis=1), np.full(N, STATUS_OK)

    init = np.zeros((N, 1 + p + P))
    if p > 0:
        init[:, 1:1 + p] = _yule_walker(W, list(range(1, p + 1)))
    if P > 0:
        init[:, 1 + p:] = _yule_walker(W, [j * s for j in range(1, P + 1)])
    shrink = 1.0
    bad = ~is_causal(init, p, P)
    while bad.any() and shrink > 1e-6:
        init[bad, 1:] *= 0.5
        shrink *= 0.5
        bad = ~is_causal(init, p, P)
    if icpt:
        init[:, 0] = (
            W.mean(axis=1)
            * (1.0 - init[:, 1:1 + p].sum(axis=1))
            * (1.0 - init[:, 1 + p:].sum(axis=1))
        )

    Wl = _lagged(W, p, P, s)
    tries = GN_RESTARTS + 1 if (p > 0 and P > 0) else 1
    status = np.full(N, STATUS_NONCAUSAL)
    sigma2 = np.full(N, np.nan)
    todo = np.arange(N)
    for attempt in range(tries):
        if todo.size == 0:
            break
        th = init[todo].copy()
        th[:, 1:] *= 0.5 ** attempt
        sub = {lag: arr[todo] for lag, arr in Wl.items()}
        sse = _gauss_newton(sub, th, p, P, s, icpt)
        causal = is_causal(th, p, P)
        theta[todo] = th
        sigma2[todo] = sse / m
        status[todo[causal]] = STATUS_OK
        todo = todo[~causal]
    return theta, sigma2, status


def fit_grid(Z, specs, s, pmax, Pmax):
    """Same contract as the compiled ``fit_grid``."""
    Z = np.asarray(Z, dtype=np.float64)
    N = Z.shape[0]
    G = specs.shape[0]
    coef = np.zeros((N, G, 1 + pmax + Pmax))
    sigma2 = np.full((N, G), np.nan)
    status = np.full((N, G), STATUS_SHORT, dtype=np.int64)
    for g in range(G):
        p, b, P, B = (int(v) for v in specs[g])
        if Z.shape[1] - b - B * s < 1:
            continue
        W = difference(Z, b, B, s)
        th, sig, st = fit_spec(W, p, P, s, 1 if b + B == 0 else 0)
        coef[:, g, 0] = th[:, 0]
        coef[:, g, 1:1 + p] = th[:, 1:1 + p]
        coef[:, g, 1 + pmax:1 + pmax + P] = th[:, 1 + p:]
        sigma2[:, g] = sig
        status[:, g] = st
    return coef, sigma2, status


def forecast_linear(hist, lagcoef, intercept, k):
    N, L = hist.shape
    maxlag = lagcoef.shape[1]
    pad = max(maxlag - L, 0)
    buf = np.concatenate([np.zeros((N, pad)), hist, np.zeros((N, k))], axis=1)
    rev = lagcoef[:, ::-1]
    base = pad + L
    for h in range(k):
        t = base + h
        buf[:, t] = intercept + (buf[:, t - maxlag:t] * rev).sum(axis=1) if maxlag else intercept
    return buf[:, base:].copy()
