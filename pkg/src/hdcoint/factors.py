"""Factor models for large panels: extraction, counting, forecasting.

Two extraction routes coexist.  The differences route estimates loadings
from the covariance of differenced, slope-detrended data and recovers
factor paths by cross-sectional averaging.  The levels route reads factor
paths directly off the dominant left singular vectors of the data matrix
as supplied, with separate normalization rates for stochastic-trend and
stationary factors.  The two forecasters combine either route with the
reduced-rank VECM machinery.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DataError, NumericalError, ParameterError
from .panel import DeterministicSpec, Panel
from .vecm import (_as_values, johansen_ml, select_lag_bic, select_rank_ic,
                   vecm_iterated_forecast)

__all__ = [
    "FactorModel",
    "extract_factors_diff",
    "extract_factors_levels",
    "pca_factors",
    "count_factors",
    "ndfm_forecast",
    "fecm_forecast",
]

COUNT_MODES = ("diff_ic", "levels_ipc")


def _slope_detrend(z: np.ndarray) -> np.ndarray:
    """Remove the per-column OLS trend slope, keeping the intercept."""
    T = z.shape[0]
    t = np.arange(1.0, T + 1.0)
    tc = t - t.mean()
    tau = (tc @ z) / (tc @ tc)
    return z - np.outer(t, tau)


def _fix_factor_signs(loadings: np.ndarray, factors: np.ndarray) -> None:
    """Make the largest-magnitude loading of each factor positive, in place.

    Sign conventions of eigen/singular vectors are solver-dependent; this
    pins one deterministically without touching rotation-invariant output.
    """
    for j in range(loadings.shape[1]):
        i = int(np.argmax(np.abs(loadings[:, j])))
        if loadings[i, j] < 0:
            loadings[:, j] = -loadings[:, j]
            factors[:, j] = -factors[:, j]


@dataclass(frozen=True)
class FactorModel:
    """Estimated loadings and factor paths with their normalization tag.

    Attributes
    ----------
    loadings : ndarray, shape (N, k)
    factors : ndarray, shape (T, k)
        Factor paths in levels of whatever the extractor consumed.
    normalization : str
        "differences" pins loadings to Λ'Λ/N = I; "levels" pins factor
        paths, the first ``r_ns`` at the T² rate ((1/T²)Σff' = I) and the
        next ``r_s`` at the T rate.
    r_ns, r_s : int
        Stochastic-trend and stationary factor counts.  The differences
        route does not distinguish them and stores (k, 0).
    eigenvalues : ndarray or None
        Spectrum of the extraction problem, non-increasing.
    """

    loadings: np.ndarray
    factors: np.ndarray
    normalization: str
    r_ns: int
    r_s: int
    eigenvalues: Optional[np.ndarray] = None

    def __post_init__(self):
        k = self.loadings.shape[1]
        if self.factors.shape[1] != k or self.r_ns + self.r_s != k:
            raise ParameterError("loading/factor/count dimensions disagree")
        if k == 0:
            return
        if self.normalization == "differences":
            gram = self.loadings.T @ self.loadings / self.loadings.shape[0]
            if np.max(np.abs(gram - np.eye(k))) > 1e-8:
                raise NumericalError("loading normalization violated")
        elif self.normalization == "levels":
            T = self.factors.shape[0]
            scale = np.concatenate([np.full(self.r_ns, float(T)),
                                    np.full(self.r_s, np.sqrt(float(T)))])
            gram = (self.factors / scale).T @ (self.factors / scale)
            if np.max(np.abs(gram - np.eye(k))) > 1e-8:
                raise NumericalError("factor-path normalization violated")
        else:
            raise ParameterError(
                f"unknown normalization '{self.normalization}'")

    @property
    def n_factors(self) -> int:
        return self.loadings.shape[1]

    def common_component(self) -> np.ndarray:
        """Fitted common part Λf' as a (T, N) matrix."""
        return self.factors @ self.loadings.T


def extract_factors_diff(data, k: int) -> FactorModel:
    """Loadings from differenced data, factor paths from detrended levels.

    The data is trend-slope detrended; loadings are sqrt(N) times the
    leading eigenvectors of the covariance of its first differences, and
    factor paths are the cross-sectional averages f_t = (1/N) Λ' z_t of
    the detrended levels.
    """
    z = _as_values(data)
    T, N = z.shape
    if not 0 <= k <= min(N, T - 2):
        raise ParameterError(
            f"factor count {k} outside [0, min(N, T-2)] = [0, {min(N, T - 2)}]")
    zt = _slope_detrend(z)
    dz = np.diff(zt, axis=0)
    S = dz.T @ dz / T
    vals, vecs = np.linalg.eigh(S)
    order = np.argsort(vals)[::-1][:k]
    loadings = np.sqrt(N) * vecs[:, order]
    factors = zt @ loadings / N
    _fix_factor_signs(loadings, factors)
    return FactorModel(loadings, factors, "differences", k, 0,
                       eigenvalues=vals[order])


def extract_factors_levels(data, r_ns: int, r_s: int = 0) -> FactorModel:
    """Factor paths from the leading left singular vectors of the levels.

    The first ``r_ns`` paths are normalized at the T² rate appropriate
    for stochastic trends, the next ``r_s`` at the stationary T rate;
    loadings follow by least squares.  The data enters as given; any
    detrending is the caller's choice.
    """
    z = _as_values(data)
    T, N = z.shape
    r = r_ns + r_s
    if r_ns < 0 or r_s < 0 or r > min(N, T):
        raise ParameterError(
            f"factor counts ({r_ns}, {r_s}) outside [0, min(N, T)]")
    u, s, _ = np.linalg.svd(z, full_matrices=False)
    factors = np.hstack([T * u[:, :r_ns], np.sqrt(T) * u[:, r_ns:r]])
    coef, *_ = np.linalg.lstsq(factors, z, rcond=None)
    loadings = coef.T.copy()
    _fix_factor_signs(loadings, factors)
    return FactorModel(loadings, factors, "levels", r_ns, r_s,
                       eigenvalues=s[:r] ** 2)


def pca_factors(data, k: int, demean: bool = True) -> FactorModel:
    """Principal-component factors of a stationary panel.

    Same normalization as the differences route; used by the
    factor-augmented forecasters on transformed data.
    """
    x = _as_values(data)
    T, N = x.shape
    if not 0 <= k <= min(N, T - 1):
        raise ParameterError(f"factor count {k} outside [0, {min(N, T - 1)}]")
    xc = x - x.mean(axis=0) if demean else x
    S = xc.T @ xc / T
    vals, vecs = np.linalg.eigh(S)
    order = np.argsort(vals)[::-1][:k]
    loadings = np.sqrt(N) * vecs[:, order]
    factors = xc @ loadings / N
    _fix_factor_signs(loadings, factors)
    return FactorModel(loadings, factors, "differences", k, 0,
                       eigenvalues=vals[order])


def _tail_variance(x: np.ndarray) -> np.ndarray:
    """V(k) for k = 0..min dimension: mean squared residual after k PCs."""
    s2 = np.linalg.svd(x, compute_uv=False) ** 2
    tail = np.concatenate([[s2.sum()], s2.sum() - np.cumsum(s2)])
    return tail / x.size


def count_factors(data, mode: str = "diff_ic", kmax: int = 8) -> int:
    """Information-criterion factor count over 0..kmax.

    "diff_ic" applies the (N+T)/(NT)·log(min(N,T)) penalty to standardized
    first differences; "levels_ipc" applies the heavier levels penalty with
    rate multiplier T/(4 log log T) directly to the data, which consistently
    counts stochastic-trend factors without differencing.
    """
    z = _as_values(data)
    T, N = z.shape
    if kmax < 0 or 2 * kmax > min(N, T):
        raise ParameterError(f"kmax {kmax} outside [0, min(N, T)/2]")
    if kmax == 0:
        return 0
    if mode == "diff_ic":
        x = np.diff(z, axis=0)
        sd = x.std(axis=0)
        sd[sd <= 0] = 1.0
        x = (x - x.mean(axis=0)) / sd
        Tx = x.shape[0]
        v = _tail_variance(x)[:kmax + 1]
        penalty = (N + Tx) / (N * Tx) * np.log(min(N, Tx))
        with np.errstate(divide="ignore"):
            crit = np.where(v > 0, np.log(np.maximum(v, 1e-300)), -np.inf)
        crit = crit + penalty * np.arange(kmax + 1)
    elif mode == "levels_ipc":
        if T < 3:
            raise DataError("levels criterion needs at least three rows")
        v = _tail_variance(z)[:kmax + 1]
        alpha_T = T / (4.0 * np.log(np.log(T)))
        penalty = v[kmax] * alpha_T * (N + T) / (N * T) * np.log(min(N, T))
        crit = v + penalty * np.arange(kmax + 1)
    else:
        raise ParameterError(f"unknown mode '{mode}'; choose from {COUNT_MODES}")
    return int(np.argmin(crit))


def _ar_forecast(u: np.ndarray, h: int, max_order: int = 3) -> np.ndarray:
    """Point forecasts 1..h from a BIC-selected AR(q), q in 0..max_order."""
    T = u.shape[0]
    qmax = max_order
    while qmax > 0 and T - qmax < qmax + 3:
        qmax -= 1
    n = T - qmax
    y = u[qmax:]
    best = (np.inf, 0, np.array([y.mean()]))
    for q in range(qmax + 1):
        X = np.ones((n, q + 1))
        for j in range(q):
            X[:, j + 1] = u[qmax - 1 - j:T - 1 - j]
        beta, *_ = np.linalg.lstsq(X, y, rcond=None)
        resid = y - X @ beta
        sigma2 = max(float(resid @ resid) / n, 1e-300)
        bic = n * np.log(sigma2) + np.log(n) * (q + 1)
        if bic < best[0]:
            best = (bic, q, beta)
    _, q, beta = best
    path = np.empty(h)
    state = list(u[T - q:][::-1]) if q else []
    for s in range(h):
        val = beta[0] + sum(beta[j + 1] * state[j] for j in range(q))
        path[s] = val
        if q:
            state = [val] + state[:-1]
    return path


def _factor_path(factors: np.ndarray, h: int, rank: Optional[int],
                 p: Optional[int]) -> np.ndarray:
    """Iterated factor forecasts; falls back to a frozen path only when
    automatic selection hits an infeasible window."""
    k = factors.shape[1]
    if k == 0:
        return np.zeros((h, 0))
    auto = rank is None and p is None
    try:
        p_f = select_lag_bic(factors, p_max=3, det=DeterministicSpec.MEAN) \
            if p is None else p
        r_f = select_rank_ic(factors, p=p_f, rmax=k,
                             det=DeterministicSpec.MEAN) if rank is None else rank
        model = johansen_ml(factors, r_f, p_f, det=DeterministicSpec.MEAN)
        return vecm_iterated_forecast(model, factors, h)
    except (DataError, NumericalError):
        if not auto:
            raise
        return np.repeat(factors[-1:], h, axis=0)


def ndfm_forecast(data, k: Optional[int] = None, rank: Optional[int] = None,
                  p: Optional[int] = None, h: int = 1, idio_ar: bool = True,
                  kmax: int = 8) -> np.ndarray:
    """Level forecasts for every series from the nonstationary factor model.

    Factors come from the differences route; their joint dynamics are a
    VECM fitted by reduced-rank ML (rank and lag by information criteria
    when not given), iterated one step at a time.  Per-series intercept
    and trend are re-estimated by OLS holding the loadings fixed, and an
    optional BIC-selected AR(≤3) carries the idiosyncratic remainder.
    ``h=0`` returns the fitted value at the last observation as a (1, N)
    row; ``h≥1`` returns the (h, N) forecast path.
    """
    z = _as_values(data)
    T, N = z.shape
    if h < 0:
        raise ParameterError("forecast horizon must be nonnegative")
    if k is None:
        k = count_factors(z, "diff_ic", min(kmax, min(N, T) // 2))
    fm = extract_factors_diff(z, k)
    common = fm.common_component()
    D = np.column_stack([np.ones(T), np.arange(1.0, T + 1.0)])
    coef, *_ = np.linalg.lstsq(D, z - common, rcond=None)
    uhat = z - common - D @ coef
    steps = np.array([float(T)]) if h == 0 else np.arange(T + 1.0, T + h + 1.0)
    if h == 0:
        fpath = fm.factors[-1:]
        upath = uhat[-1:] if idio_ar else np.zeros((1, N))
    else:
        fpath = _factor_path(fm.factors, h, rank, p)
        upath = np.zeros((h, N))
        if idio_ar:
            for j in range(N):
                upath[:, j] = _ar_forecast(uhat[:, j], h)
    det = np.outer(np.ones_like(steps), coef[0]) + np.outer(steps, coef[1])
    return det + fpath @ fm.loadings.T + upath


def _resolve_targets(data, targets) -> np.ndarray:
    if targets is None:
        n = data.n_series if isinstance(data, Panel) else \
            _as_values(data).shape[1]
        return np.arange(n)
    idx = []
    for key in targets:
        if isinstance(key, str):
            if not isinstance(data, Panel):
                raise ParameterError("named targets need a Panel input")
            idx.append(data.index(key))
        else:
            idx.append(int(key))
    if not idx:
        raise ParameterError("target set must not be empty")
    return np.asarray(idx)


def fecm_forecast(data, targets: Optional[Sequence[Union[int, str]]] = None,
                  r_ns: int = 0, r_s: int = 0, rank: Optional[int] = None,
                  p: Optional[int] = None, h: int = 1,
                  det: Union[str, DeterministicSpec] = DeterministicSpec.TREND
                  ) -> np.ndarray:
    """Level forecasts for the target block from a factor-augmented VECM.

    Levels-extracted factors are stacked under the target series and the
    joint system is estimated by reduced-rank ML; by default with an
    unrestricted intercept and a trend restricted to the cointegrating
    space, while already-detrended inputs can pass ``det="none"``.  Rank
    and lag come from the information criteria when not given.  With
    ``r_ns = r_s = 0`` this is a plain VECM on the targets.
    """
    z = _as_values(data)
    idx = _resolve_targets(data, targets)
    spec = DeterministicSpec.parse(det)
    blocks = [z[:, idx]]
    if r_ns + r_s > 0:
        blocks.append(extract_factors_levels(z, r_ns, r_s).factors)
    x = np.hstack(blocks)
    p_x = select_lag_bic(x, p_max=3, det=spec) if p is None else p
    r_x = select_rank_ic(x, p=p_x, rmax=x.shape[1],
                         det=spec) if rank is None else rank
    model = johansen_ml(x, r_x, p_x, det=spec)
    return vecm_iterated_forecast(model, x, h)[:, :idx.shape[0]]
