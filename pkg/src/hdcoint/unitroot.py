"""Augmented Dickey-Fuller and GLS-detrended unit-root statistics.

Everything routes through one batched regression kernel so that a
bootstrap engine can evaluate hundreds of replications with a handful of
stacked linear-algebra calls.  The scalar entry points are thin wrappers
over batches of size one.

Lag selection uses a modified AIC with a variance-rescaling step that
standardizes increments by a rolling-window volatility estimate before
the criterion is evaluated, which keeps the choice stable under
permanent volatility shifts.

References
----------
Elliott, G., Rothenberg, T. J., Stock, J. H. (1996). Efficient tests for
an autoregressive unit root. Econometrica 64, 813-836.
Ng, S., Perron, P. (2001). Lag length selection and the construction of
unit root tests with good size and power. Econometrica 69, 1519-1554.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from .errors import DataError, NumericalError, ParameterError
from .panel import DeterministicSpec

__all__ = [
    "VARIANTS",
    "UnitRootStat",
    "CriticalValueSet",
    "adf_stat",
    "dfgls_stat",
    "select_lags",
    "default_max_lags",
    "union_stat",
    "four_stats",
    "adf_rho",
]

#: canonical ordering of the four component tests of the union statistic
VARIANTS = ("adf_mean", "adf_trend", "dfgls_mean", "dfgls_trend")

_GLS_CBAR = {DeterministicSpec.MEAN: -7.0, DeterministicSpec.TREND: -13.5}


def _as_batch(series) -> np.ndarray:
    y = np.asarray(series, dtype=float)
    if y.ndim == 1:
        y = y[None, :]
    if y.ndim != 2:
        raise ParameterError("series must be a vector or a (B, T) batch")
    return y


def _trim_leading_nan(y: np.ndarray) -> np.ndarray:
    """Drop a shared leading-NaN block; interior NaNs are a data error."""
    finite = np.isfinite(y).all(axis=0)
    if not finite.any():
        raise DataError("series has no observations")
    first = int(np.argmax(finite))
    if not finite[first:].all():
        raise DataError("series has interior missing values")
    return y[:, first:]


def _adf_tstat_batch(y: np.ndarray, det: int, lags: int) -> np.ndarray:
    """t-statistic on the lagged level in ADF regressions, batched.

    Parameters
    ----------
    y : ndarray, shape (B, T)
        Batch of series without missing values.
    det : int
        Number of deterministic regressors: 0 none, 1 constant,
        2 constant and trend.
    lags : int
        Number of lagged differences augmenting the regression.
    """
    B, T = y.shape
    if lags < 0:
        raise ParameterError("lags must be non-negative")
    s = lags + 1                       # first usable level index
    n = T - s
    if n < lags + det + 3:
        raise DataError(
            f"series too short for an ADF regression with {lags} lags: "
            f"effective sample {n}, need at least {lags + det + 3}")
    dy = y[:, 1:] - y[:, :-1]
    k = det + 1 + lags
    X = np.empty((B, n, k))
    if det >= 1:
        X[:, :, 0] = 1.0
    if det == 2:
        X[:, :, 1] = np.arange(s + 1.0, T + 1.0)[None, :]
    X[:, :, det] = y[:, s - 1:T - 1]
    for j in range(1, lags + 1):
        X[:, :, det + j] = dy[:, s - 1 - j:T - 1 - j]
    Y = dy[:, s - 1:]
    G = np.einsum("bti,btj->bij", X, X, optimize=True)
    c = np.einsum("bti,bt->bi", X, Y, optimize=True)
    try:
        beta = np.linalg.solve(G, c[..., None])[..., 0]
        Ginv_diag = np.linalg.inv(G)[:, det, det]
    except np.linalg.LinAlgError:
        Gpinv = np.linalg.pinv(G)
        beta = np.einsum("bij,bj->bi", Gpinv, c)
        Ginv_diag = Gpinv[:, det, det]
    resid = Y - np.einsum("btk,bk->bt", X, beta, optimize=True)
    dof = n - k
    if dof < 1:
        raise DataError("no degrees of freedom left in the ADF regression")
    sigma2 = np.einsum("bt,bt->b", resid, resid) / dof
    denom = sigma2 * Ginv_diag
    if np.any(denom <= 0) or not np.all(np.isfinite(denom)):
        raise NumericalError("singular ADF regression (zero residual variance)")
    return beta[:, det] / np.sqrt(denom)


def _adf_level_coef_batch(y: np.ndarray, det: int, lags: int) -> np.ndarray:
    """Coefficient on the lagged level (used for AR-root estimates)."""
    B, T = y.shape
    s = lags + 1
    n = T - s
    dy = y[:, 1:] - y[:, :-1]
    k = det + 1 + lags
    X = np.empty((B, n, k))
    if det >= 1:
        X[:, :, 0] = 1.0
    if det == 2:
        X[:, :, 1] = np.arange(s + 1.0, T + 1.0)[None, :]
    X[:, :, det] = y[:, s - 1:T - 1]
    for j in range(1, lags + 1):
        X[:, :, det + j] = dy[:, s - 1 - j:T - 1 - j]
    Y = dy[:, s - 1:]
    G = np.einsum("bti,btj->bij", X, X, optimize=True)
    c = np.einsum("bti,bt->bi", X, Y, optimize=True)
    try:
        beta = np.linalg.solve(G, c[..., None])[..., 0]
    except np.linalg.LinAlgError:
        beta = np.einsum("bij,bj->bi", np.linalg.pinv(G), c)
    return beta[:, det]


def _gls_detrend_batch(y: np.ndarray, spec: DeterministicSpec,
                       cbar: Optional[float] = None) -> np.ndarray:
    """Local-to-unity GLS demeaning/detrending of a batch of series."""
    if spec not in _GLS_CBAR:
        raise ParameterError("GLS detrending requires spec 'mean' or 'trend'")
    B, T = y.shape
    if T < 4:
        raise DataError("series too short for GLS detrending")
    cbar = _GLS_CBAR[spec] if cbar is None else float(cbar)
    rho = 1.0 + cbar / T
    t = np.arange(1.0, T + 1.0)
    Z = np.ones((T, 1)) if spec is DeterministicSpec.MEAN else np.column_stack([np.ones(T), t])
    yq = np.empty_like(y)
    yq[:, 0] = y[:, 0]
    yq[:, 1:] = y[:, 1:] - rho * y[:, :-1]
    Zq = np.empty_like(Z)
    Zq[0] = Z[0]
    Zq[1:] = Z[1:] - rho * Z[:-1]
    G = Zq.T @ Zq
    try:
        beta = np.linalg.solve(G, (yq @ Zq).T).T
    except np.linalg.LinAlgError:
        beta = (np.linalg.pinv(G) @ (yq @ Zq).T).T
    return y - beta @ Z.T


def adf_stat(series, spec: Union[str, DeterministicSpec] = DeterministicSpec.TREND,
             lags: int = 0) -> float:
    """ADF t-statistic with deterministics included in the regression."""
    spec = DeterministicSpec.parse(spec)
    det = {DeterministicSpec.NONE: 0, DeterministicSpec.MEAN: 1,
           DeterministicSpec.TREND: 2}[spec]
    y = _trim_leading_nan(_as_batch(series))
    return float(_adf_tstat_batch(y, det, lags)[0])


def dfgls_stat(series, spec: Union[str, DeterministicSpec] = DeterministicSpec.TREND,
               lags: int = 0, cbar: Optional[float] = None) -> float:
    """Dickey-Fuller statistic on GLS-demeaned/detrended data.

    The noncentrality parameter defaults to -7 (demeaning) and -13.5
    (detrending); the test regression contains no deterministics.
    """
    spec = DeterministicSpec.parse(spec)
    y = _trim_leading_nan(_as_batch(series))
    yd = _gls_detrend_batch(y, spec, cbar)
    return float(_adf_tstat_batch(yd, 0, lags)[0])


def adf_rho(series, lags: int = 0,
            spec: Union[str, DeterministicSpec] = DeterministicSpec.TREND) -> float:
    """Largest-autoregressive-root estimate ``1 + b0`` from an ADF regression."""
    spec = DeterministicSpec.parse(spec)
    det = {DeterministicSpec.NONE: 0, DeterministicSpec.MEAN: 1,
           DeterministicSpec.TREND: 2}[spec]
    y = _trim_leading_nan(_as_batch(series))
    return float(1.0 + _adf_level_coef_batch(y, det, lags)[0])


def default_max_lags(T: int) -> int:
    """Conventional cap ``floor(12 * (T / 100) ** 0.25)``."""
    return int(np.floor(12.0 * (T / 100.0) ** 0.25))


def _rolling_std(d: np.ndarray, window: int) -> np.ndarray:
    """Centered rolling standard deviation with shrinking edge windows."""
    m = d.shape[0]
    kernel = np.ones(window)
    counts = np.convolve(np.ones(m), kernel, mode="same")
    s2 = np.convolve(d * d, kernel, mode="same") / counts
    return np.sqrt(s2)


def _variance_rescale(x: np.ndarray) -> np.ndarray:
    """Standardize increments by local volatility and re-accumulate."""
    T = x.shape[0]
    d = np.diff(x)
    window = max(2, int(round(np.sqrt(T))))
    sd = _rolling_std(d, window)
    floor = 1e-8 * max(float(np.sqrt(np.mean(d * d))), 1e-300)
    sd = np.maximum(sd, floor)
    out = np.empty(T)
    out[0] = 0.0
    out[1:] = np.cumsum(d / sd)
    return out


def select_lags(series, spec: Union[str, DeterministicSpec] = DeterministicSpec.TREND,
                max_lags: Optional[int] = None) -> int:
    """Rescaled modified-AIC lag choice for the ADF regressions.

    The series is OLS-detrended per ``spec``, increments are standardized
    by a rolling-window volatility estimate (window about ``sqrt(T)``),
    and the Ng-Perron modified AIC is minimized over ``0..max_lags`` on a
    common estimation sample.  Ties break toward the smaller lag.
    """
    spec = DeterministicSpec.parse(spec)
    y = _trim_leading_nan(_as_batch(series))[0]
    T = y.shape[0]
    if max_lags is None:
        max_lags = default_max_lags(T)
    if max_lags < 0:
        raise ParameterError("max_lags must be non-negative")
    # feasibility: the largest candidate still needs its regression sample
    while max_lags > 0 and (T - max_lags - 1) < (max_lags + 3):
        max_lags -= 1
    if max_lags == 0:
        return 0
    if spec is not DeterministicSpec.NONE:
        t = np.arange(1.0, T + 1.0)
        X = np.ones((T, 1)) if spec is DeterministicSpec.MEAN else np.column_stack([np.ones(T), t])
        beta, *_ = np.linalg.lstsq(X, y, rcond=None)
        y = y - X @ beta
    d = np.diff(y)
    if not np.any(np.abs(d) > 0) or not np.all(np.isfinite(d)):
        return 0
    z = _variance_rescale(y)
    dz = np.diff(z)
    s = max_lags + 1                   # common first usable level index
    n = T - s
    lhs = dz[s - 1:]
    lag_level = z[s - 1:T - 1]
    best = (np.inf, 0)
    for k in range(max_lags + 1):
        cols = [lag_level]
        for j in range(1, k + 1):
            cols.append(dz[s - 1 - j:T - 1 - j])
        X = np.column_stack(cols)
        beta, *_ = np.linalg.lstsq(X, lhs, rcond=None)
        resid = lhs - X @ beta
        sigma2 = float(resid @ resid) / n
        if sigma2 <= 0:
            continue
        tau = beta[0] ** 2 * float(lag_level @ lag_level) / sigma2
        maic = np.log(sigma2) + 2.0 * (tau + k) / n
        if maic < best[0] - 1e-12:
            best = (maic, k)
    return best[1]


@dataclass(frozen=True)
class CriticalValueSet:
    """Level-``alpha`` critical values of the four component tests."""

    adf_mean: float
    adf_trend: float
    dfgls_mean: float
    dfgls_trend: float
    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError("alpha must lie in (0, 1)")
        vals = self.as_array()
        if not np.all(np.isfinite(vals)):
            raise NumericalError("critical values must be finite")
        if self.alpha <= 0.10 and np.any(vals >= 0.0):
            raise NumericalError(
                "left-tail critical values must be negative at "
                f"alpha={self.alpha}; got {vals.tolist()}")

    def as_array(self) -> np.ndarray:
        return np.array([self.adf_mean, self.adf_trend,
                         self.dfgls_mean, self.dfgls_trend])


@dataclass(frozen=True)
class UnitRootStat:
    """The four component statistics for one series plus the union value."""

    name: str
    stats: np.ndarray              # aligned with VARIANTS
    lag: int
    union: Optional[float] = None

    def __post_init__(self):
        arr = np.asarray(self.stats, dtype=float)
        if arr.shape != (4,):
            raise ParameterError("stats must contain the four component tests")
        object.__setattr__(self, "stats", arr)


def union_stat(stats, critvals: CriticalValueSet, x: float = -1.0) -> float:
    """Scale-and-minimize union of the four tests.

    Each statistic is scaled by ``x / c`` with ``c`` its critical value;
    the union statistic is the minimum of the four scaled values and the
    union test rejects when it falls below ``x``.
    """
    if x >= 0:
        raise ParameterError("scaling constant x must be negative")
    s = stats.stats if isinstance(stats, UnitRootStat) else np.asarray(stats, dtype=float)
    if s.shape != (4,):
        raise ParameterError("expected the four component statistics")
    c = critvals.as_array()
    if np.any(c == 0.0):
        raise ParameterError("critical values must be non-zero")
    return float(np.min(x / c * s))


def four_stats(series_or_batch, lags: int) -> np.ndarray:
    """All four component statistics, batched.

    Returns shape ``(B, 4)`` with columns ordered as :data:`VARIANTS`.
    """
    y = _trim_leading_nan(_as_batch(series_or_batch))
    out = np.empty((y.shape[0], 4))
    out[:, 0] = _adf_tstat_batch(y, 1, lags)
    out[:, 1] = _adf_tstat_batch(y, 2, lags)
    out[:, 2] = _adf_tstat_batch(_gls_detrend_batch(y, DeterministicSpec.MEAN), 0, lags)
    out[:, 3] = _adf_tstat_batch(_gls_detrend_batch(y, DeterministicSpec.TREND), 0, lags)
    return out
