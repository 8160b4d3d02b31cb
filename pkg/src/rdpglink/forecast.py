"""Seasonal autoregressive integrated (SARI) models.

Models are fitted by conditional sum of squares (Gaussian likelihood
conditional on the first p + P*s differenced values) with Gauss-Newton
iterations, selected by AICc over a bounded order grid and forecast by
iterating the model equation with zero future innovations.

The hot path is :func:`auto_sari_batch`, which fits the whole grid to many
series at once through the active kernel backend.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import _accel
from .errors import NonCausalFitError, UndefinedCriterionError

__all__ = [
    "SariSpec",
    "SariBounds",
    "SariModel",
    "SariBatch",
    "difference",
    "fit_sari",
    "aicc",
    "auto_sari",
    "forecast",
    "auto_sari_batch",
    "forecast_batch",
    "fit_forecast",
    "dump_models",
    "DEFAULT_PERIOD",
]

DEFAULT_PERIOD = 7
# likelihood only; keeps exact fits comparable through the AICc penalty
SIGMA2_FLOOR = 1e-12

STATUS_OK = 0


@dataclass(frozen=True)
class SariSpec:
    p: int = 0
    b: int = 0
    P: int = 0
    B: int = 0
    s: int = 1

    def __post_init__(self):
        if min(self.p, self.b, self.P, self.B) < 0 or self.s < 1:
            raise ValueError(f"invalid SARI orders {self}")

    @property
    def intercept(self) -> bool:
        return self.b + self.B == 0

    @property
    def n_params(self) -> int:
        """Free parameters counted by AICc, including the innovation variance."""
        return self.p + self.P + int(self.intercept) + 1

    @property
    def diff_lag(self) -> int:
        return self.b + self.B * self.s

    @property
    def ar_lag(self) -> int:
        return self.p + self.P * self.s

    @property
    def max_lag(self) -> int:
        return self.diff_lag + self.ar_lag

    def label(self) -> str:
        return f"SARI({self.p},{self.b})({self.P},{self.B})_{self.s}"


@dataclass(frozen=True)
class SariBounds:
    p: int = 2
    b: int = 1
    P: int = 1
    B: int = 1

    def __post_init__(self):
        if min(self.p, self.b, self.P, self.B) < 0:
            raise ValueError("order bounds must be non-negative")

    def grid(self, s: int) -> list[SariSpec]:
        """All specs within bounds, simplest first (ties resolve to the earlier spec)."""
        specs = [SariSpec(p, b, P, B, s) for b, B, p, P in product(
            range(self.b + 1), range(self.B + 1), range(self.p + 1), range(self.P + 1))]
        specs.sort(key=lambda sp_: (sp_.p + sp_.b + sp_.P + sp_.B, sp_.b, sp_.B, sp_.p, sp_.P))
        return specs


@dataclass(frozen=True)
class SariModel:
    spec: SariSpec
    phi: tuple
    Phi: tuple
    intercept: float
    sigma2: float
    n_obs: int
    degenerate: bool = False

    @property
    def loglik(self) -> float:
        return _loglik(self.sigma2, self.n_obs)

    def lag_coefficients(self) -> np.ndarray:
        """g_1..g_L with z_t = intercept + sum_l g_l z_{t-l} on the original scale."""
        return _lag_coefficients(np.array([self.phi]), np.array([self.Phi]),
                                 self.spec.b, self.spec.B, self.spec.s)[0]

    def to_dict(self) -> dict:
        sp_ = self.spec
        return {
            "spec": {"p": sp_.p, "b": sp_.b, "P": sp_.P, "B": sp_.B, "s": sp_.s},
            "phi": list(self.phi),
            "Phi": list(self.Phi),
            "intercept": self.intercept,
            "sigma2": self.sigma2,
            "n_obs": self.n_obs,
            "degenerate": self.degenerate,
        }


def _loglik(sigma2, m):
    return -0.5 * m * (np.log(2.0 * np.pi * np.maximum(sigma2, SIGMA2_FLOOR)) + 1.0)


def _aicc_value(sigma2, m, k):
    return -2.0 * _loglik(sigma2, m) + 2.0 * k * m / (m - k - 1.0)


def difference(z, b: int = 0, B: int = 0, s: int = 1) -> np.ndarray:
    """Apply (1 - L)^b (1 - L^s)^B; the result is b + B*s values shorter."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] <= b + B * s:
        raise ValueError(f"series of length {z.shape[-1]} is too short for b={b}, B={B}, s={s}")
    return _accel.kernels("numpy").difference(z, b, B, s)


def _poly_mul(a, c):
    """Row-wise polynomial product of coefficient arrays (N, la) and (N, lc)."""
    out = np.zeros((a.shape[0], a.shape[1] + c.shape[1] - 1))
    for i in range(c.shape[1]):
        out[:, i:i + a.shape[1]] += a * c[:, i:i + 1]
    return out


def _lag_coefficients(phi, Phi, b, B, s):
    """Lag coefficients g of phi(L) Phi(L^s) (1-L)^b (1-L^s)^B = 1 - sum g_l L^l."""
    N, p = phi.shape
    P = Phi.shape[1]
    poly = np.concatenate([np.ones((N, 1)), -phi], axis=1)
    seas = np.zeros((N, P * s + 1))
    seas[:, 0] = 1.0
    for j in range(P):
        seas[:, (j + 1) * s] = -Phi[:, j]
    poly = _poly_mul(poly, seas)
    one = np.ones((N, 1))
    for _ in range(b):
        poly = _poly_mul(poly, np.concatenate([one, -one], axis=1))
    for _ in range(B):
        lag = np.zeros((N, s + 1))
        lag[:, 0] = 1.0
        lag[:, s] = -1.0
        poly = _poly_mul(poly, lag)
    return -poly[:, 1:]


def _spec_array(specs):
    return np.array([[sp_.p, sp_.b, sp_.P, sp_.B] for sp_ in specs], dtype=np.int64)


def _unpack(coef_row, spec, pmax):
    c = float(coef_row[0]) if spec.intercept else 0.0
    phi = tuple(float(v) for v in coef_row[1:1 + spec.p])
    Phi = tuple(float(v) for v in coef_row[1 + pmax:1 + pmax + spec.P])
    return c, phi, Phi


def fit_sari(z, spec: SariSpec) -> SariModel:
    """Conditional least-squares fit of one specification.

    An intercept is estimated only when b + B = 0.
    """
    z = np.asarray(z, dtype=np.float64)
    diff_len = z.size - spec.diff_lag
    if diff_len <= spec.ar_lag + 1:
        raise ValueError(
            f"{spec.label()} needs more than {spec.ar_lag + 1} differenced values, got {max(diff_len, 0)}"
        )
    coef, sigma2, status = _accel.kernels().fit_grid(
        np.ascontiguousarray(z[None, :]), _spec_array([spec]), spec.s, spec.p, spec.P
    )
    c, phi, Phi = _unpack(coef[0, 0], spec, spec.p)
    if status[0, 0] != STATUS_OK:
        raise NonCausalFitError(f"no causal optimum found for {spec.label()}")
    return SariModel(spec, phi, Phi, c, float(sigma2[0, 0]), diff_len - spec.ar_lag)


def _in_sample_sse(model: SariModel, z) -> tuple[float, int]:
    z = np.asarray(z, dtype=np.float64)
    g = model.lag_coefficients()
    L = g.size
    m = z.size - L
    if m < 1:
        return np.nan, 0
    pred = np.full(m, model.intercept)
    for lag in range(1, L + 1):
        pred += g[lag - 1] * z[L - lag:L - lag + m]
    e = z[L:] - pred
    return float(e @ e), m


def aicc(model: SariModel, z=None) -> float:
    """Corrected AIC, -2 logLik + 2 k m / (m - k - 1).

    k counts AR coefficients, the intercept when present and the variance;
    m is the number of conditional residuals, the differenced length less
    the AR conditioning lags. With ``z`` the variance is recomputed from the
    data.
    """
    if z is None:
        sigma2, m = model.sigma2, model.n_obs
    else:
        sse, m = _in_sample_sse(model, z)
        sigma2 = sse / m if m else np.nan
    k = model.spec.n_params
    if m <= k + 1:
        raise UndefinedCriterionError(f"AICc undefined for m={m}, k={k}")
    return float(_aicc_value(sigma2, m, k))


@dataclass
class SariBatch:
    """Selected models for a batch of series, in array form."""

    specs: list
    choice: np.ndarray
    coef: np.ndarray
    sigma2: np.ndarray
    aicc: np.ndarray
    degenerate: np.ndarray
    pmax: int
    Pmax: int
    length: int

    def __len__(self):
        return self.choice.size

    def model(self, i: int) -> SariModel:
        spec = self.specs[self.choice[i]]
        c, phi, Phi = _unpack(self.coef[i], spec, self.pmax)
        return SariModel(spec, phi, Phi, c, float(self.sigma2[i]), self._n_obs(i), bool(self.degenerate[i]))

    def _n_obs(self, i):
        return int(self.length - self.specs[self.choice[i]].max_lag)


def _null_fit(Z):
    m = Z.shape[1]
    mean = Z.mean(axis=1)
    return mean, ((Z - mean[:, None]) ** 2).mean(axis=1), m


def auto_sari_batch(Z, s: int = DEFAULT_PERIOD, bounds: SariBounds | None = None) -> SariBatch:
    """Minimum-AICc causal model for each row of ``Z`` over the bounded grid.

    Series shorter than ``3 * s`` use the mean-only spec. Rows where every
    candidate fails fall back to the mean-only spec and are flagged
    ``degenerate``.
    """
    bounds = bounds or SariBounds()
    Z = np.ascontiguousarray(np.atleast_2d(np.asarray(Z, dtype=np.float64)))
    N, L = Z.shape
    specs = bounds.grid(s)
    null_idx = specs.index(SariSpec(0, 0, 0, 0, s))
    G = len(specs)
    kmax = 1 + bounds.p + bounds.P
    crit = np.full((N, G), np.inf)
    coef = np.zeros((N, G, kmax))
    sigma2 = np.full((N, G), np.nan)

    if L >= 3 * s and N:
        coef, sigma2, status = _accel.kernels().fit_grid(Z, _spec_array(specs), s, bounds.p, bounds.P)
        for g, spec in enumerate(specs):
            m = L - spec.max_lag
            k = spec.n_params
            if m <= k + 1:
                continue
            ok = status[:, g] == STATUS_OK
            crit[ok, g] = _aicc_value(sigma2[ok, g], m, k)

    choice = np.argmin(crit, axis=1)
    best = crit[np.arange(N), choice]
    degenerate = ~np.isfinite(best) & (L >= 3 * s)
    fallback = ~np.isfinite(best)
    out_coef = coef[np.arange(N), choice].copy()
    out_sigma2 = sigma2[np.arange(N), choice].copy()
    if fallback.any():
        mean, var, m = _null_fit(Z[fallback])
        choice[fallback] = null_idx
        out_coef[fallback] = 0.0
        out_coef[fallback, 0] = mean
        out_sigma2[fallback] = var
        k = specs[null_idx].n_params
        best[fallback] = _aicc_value(var, m, k) if m > k + 1 else np.nan
    return SariBatch(specs, choice, out_coef, out_sigma2, best, degenerate, bounds.p, bounds.P, L)


def forecast_batch(batch: SariBatch, Z, k: int) -> np.ndarray:
    """k-step forecasts (N, k) for every series of a fitted batch."""
    Z = np.ascontiguousarray(np.atleast_2d(np.asarray(Z, dtype=np.float64)))
    N, L = Z.shape
    if N != len(batch):
        raise ValueError("history rows do not match the fitted batch")
    max_lag = max((batch.specs[g].max_lag for g in np.unique(batch.choice)), default=0)
    if L < max_lag:
        raise ValueError(f"history of length {L} is shorter than the model lag {max_lag}")
    lagcoef = np.zeros((N, max(max_lag, 1)))
    intercept = np.zeros(N)
    for g in np.unique(batch.choice):
        spec = batch.specs[g]
        rows = np.flatnonzero(batch.choice == g)
        phi = batch.coef[rows, 1:1 + spec.p]
        Phi = batch.coef[rows, 1 + batch.pmax:1 + batch.pmax + spec.P]
        coeffs = _lag_coefficients(phi, Phi, spec.b, spec.B, spec.s)
        lagcoef[rows, :coeffs.shape[1]] = coeffs
        if spec.intercept:
            intercept[rows] = batch.coef[rows, 0]
    return _accel.kernels().forecast_linear(Z, lagcoef, intercept, int(k))


def fit_forecast(Z, k: int, s: int = DEFAULT_PERIOD, bounds: SariBounds | None = None):
    """Select, fit and forecast every row of ``Z``; returns (forecasts, batch)."""
    batch = auto_sari_batch(Z, s=s, bounds=bounds)
    return forecast_batch(batch, Z, k), batch


def auto_sari(z, s: int = DEFAULT_PERIOD, bounds: SariBounds | None = None) -> SariModel:
    """Minimum-AICc causal SARI model for a single series."""
    return auto_sari_batch(np.asarray(z, dtype=np.float64)[None, :], s=s, bounds=bounds).model(0)


def forecast(model: SariModel, history, k: int) -> np.ndarray:
    """Iterate the fitted equation ``k`` steps past ``history`` with zero innovations."""
    history = np.asarray(history, dtype=np.float64)
    g = model.lag_coefficients()
    if history.size < g.size:
        raise ValueError(f"history of length {history.size} is shorter than the model lag {g.size}")
    lagcoef = g[None, :] if g.size else np.zeros((1, 1))
    return _accel.kernels().forecast_linear(
        np.ascontiguousarray(history[None, :]), np.ascontiguousarray(lagcoef), np.array([model.intercept]), int(k)
    )[0]


def dump_models(models, series_ids, path) -> None:
    """Write fitted models as a JSON array of per-series records."""
    records = []
    for sid, model in zip(series_ids, models):
        rec = {"series_id": sid}
        rec.update(model.to_dict())
        try:
            rec["aicc"] = aicc(model)
        except UndefinedCriterionError:
            rec["aicc"] = None
        records.append(rec)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(records, fh, indent=1)
