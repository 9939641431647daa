"""Kernel estimators of the conditional distribution of a censored response.

Given curves ``X_i`` and right-censored responses ``(Y_i, delta_i)`` the
conditional distribution function at a query curve ``x`` is estimated by

    F(t | x) = sum_i w_i delta_i / G(Y_i) H((t - Y_i) / h_H)

with Nadaraya-Watson weights ``w_i`` proportional to ``K(d(x, X_i) / h_K)``
and ``G`` the Kaplan-Meier estimate of the censoring survival function.
Conditional quantiles are obtained by inverting this function.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import ndtri

from .errors import (
    DegenerateDensity,
    EmptyNeighborhood,
    EstimationError,
    InputError,
    LengthMismatch,
    NonpositiveVariance,
    SaturatedQuantile,
    SaturatedWarning,
)
from .functional import Curve, SemiMetricSpec, embed
from .kernels import INTEGRATED_QUADRATIC, QUADRATIC, kernel_moments, tau_from_distances
from .survival import KaplanMeierFit, censoring_weights, fit_km

__all__ = ["QuantileModel", "QuantileInterval", "IntervalPrediction", "DENSITY_FLOOR"]

DENSITY_FLOOR = 1e-12
BISECTION_STEPS = 27  # bracket width * 2**-27 < 1e-8 * bracket width


@dataclass(frozen=True)
class QuantileInterval:
    """Quantile estimate with its asymptotic confidence interval."""

    alpha: float
    level: float
    quantile: float
    half_width: float
    std_error: float
    density: float
    censor_survival: float
    small_ball: float
    m1: float
    m2: float
    n_eff: int

    @property
    def lower(self) -> float:
        return self.quantile - self.half_width

    @property
    def upper(self) -> float:
        return self.quantile + self.half_width


@dataclass
class IntervalPrediction:
    """Quantiles at several levels for one query curve.

    A confidence half-width is NaN when it could not be computed; the reason
    is stored in ``ci_status`` (``"ok"`` otherwise).
    """

    alpha_levels: np.ndarray
    quantiles: np.ndarray
    ci_half_width: np.ndarray
    ci_level: float
    n_eff: int
    h_K: float
    small_ball: float
    m1: float
    m2: float
    density: np.ndarray
    censor_survival: np.ndarray
    saturated: np.ndarray
    ci_status: list[str] = field(default_factory=list)

    @property
    def ci_lower(self) -> np.ndarray:
        return self.quantiles - self.ci_half_width

    @property
    def ci_upper(self) -> np.ndarray:
        return self.quantiles + self.ci_half_width


@dataclass(frozen=True, eq=False)
class _Neighborhood:
    distances: np.ndarray  # to every training curve
    h_K: float
    y: np.ndarray  # responses with positive kernel weight
    coef: np.ndarray  # normalized weight times censoring weight


def _smoothed_cdf(t, y, coef, h_H, kernel_h):
    """Rows of ``sum_j coef[r, j] H((t[r] - y[r, j]) / h_H)``."""
    return np.sum(coef * kernel_h.cdf((t[:, None] - y) / h_H), axis=1)


def bisect_quantiles(y, coef, h_H, alpha, lo, hi, kernel_h=INTEGRATED_QUADRATIC, steps=BISECTION_STEPS):
    """Vectorized inversion of smoothed conditional CDFs.

    Parameters
    ----------
    y, coef : ndarray of shape (m, k)
        Neighbour responses and coefficients (normalized kernel weight times
        censoring weight) of ``m`` independent CDFs.
    h_H : float
    alpha : float
    lo, hi : float or ndarray of shape (m,)
        Search brackets; the CDFs must be below ``alpha`` at ``lo``.
    steps : int
        Number of halvings of the bracket.

    Returns
    -------
    q : ndarray of shape (m,)
        Smallest bracket point found with CDF >= alpha.
    saturated : ndarray of bool
        True where the CDF stays below ``alpha`` on the whole bracket; ``q``
        is then ``hi``.
    """
    m = y.shape[0]
    u = np.asarray(y, dtype=float) / h_H
    lo_arr = np.broadcast_to(np.asarray(lo, dtype=float), (m,)) / h_H
    hi_arr = np.broadcast_to(np.asarray(hi, dtype=float), (m,)) / h_H
    saturated = np.sum(coef * kernel_h.cdf(hi_arr[:, None] - u), axis=1) < alpha
    for _ in range(steps):
        mid = 0.5 * (lo_arr + hi_arr)
        above = np.sum(coef * kernel_h.cdf(mid[:, None] - u), axis=1) >= alpha
        hi_arr = np.where(above, mid, hi_arr)
        lo_arr = np.where(above, lo_arr, mid)
    q = np.where(saturated, np.broadcast_to(np.asarray(hi, dtype=float), (m,)), hi_arr * h_H)
    return q, saturated


class QuantileModel:
    """Frozen training sample and smoothing parameters.

    Parameters
    ----------
    curves : sequence of Curve or ndarray of shape (n, m)
        Functional covariates, in time order.
    y : array-like of shape (n,)
        Observed responses ``min(T, C)``.
    delta : array-like of shape (n,)
        1 where the response is uncensored.
    h_K : float, optional
        Fixed bandwidth on the curve distances.
    h_H : float
        Bandwidth of the response smoothing kernel.
    knn : int, optional
        Use the distance to the ``knn``-th nearest training curve as the
        curve bandwidth at each query instead of a fixed ``h_K``.
    semimetric : SemiMetricSpec
    grid : array-like, optional
        Sampling grid when ``curves`` is an array (default 1..m).
    """

    def __init__(
        self,
        curves,
        y,
        delta,
        h_K: float | None = None,
        h_H: float = None,
        *,
        knn: int | None = None,
        semimetric: SemiMetricSpec = SemiMetricSpec(),
        grid=None,
        kernel_k=QUADRATIC,
        kernel_h=INTEGRATED_QUADRATIC,
    ):
        if isinstance(curves, np.ndarray):
            values = np.array(curves, dtype=float)
            if values.ndim != 2:
                raise InputError("curve array must be two-dimensional")
            grid = np.arange(1, values.shape[1] + 1, dtype=float) if grid is None else grid
            grid = Curve(grid, values[0]).grid if values.shape[0] else np.asarray(grid, float)
        else:
            curves = list(curves)
            if not curves:
                raise InputError("at least one observation is required")
            grid = curves[0].grid
            for c in curves:
                if not np.array_equal(c.grid, grid):
                    raise InputError("all curves must share one grid")
            values = np.vstack([c.values for c in curves])
        y = np.array(y, dtype=float)
        delta = np.array(delta).astype(bool)
        n = values.shape[0]
        if n == 0:
            raise InputError("at least one observation is required")
        if y.shape != (n,) or delta.shape != (n,):
            raise LengthMismatch("curves, y and delta must have the same length")
        if (h_K is None) == (knn is None):
            raise InputError("give exactly one of h_K and knn")
        if h_K is not None and not h_K > 0:
            raise InputError("h_K must be positive")
        if knn is not None and not 1 <= knn <= n:
            raise InputError(f"knn must lie in [1, {n}]")
        if h_H is None or not h_H > 0:
            raise InputError("h_H must be positive")

        self.grid = np.asarray(grid, dtype=float)
        self.values = values
        self.y = y
        self.delta = delta
        self.h_K = None if h_K is None else float(h_K)
        self.h_H = float(h_H)
        self.knn = knn
        self.semimetric = semimetric
        self.kernel_k = kernel_k
        self.kernel_h = kernel_h
        self.km: KaplanMeierFit = fit_km(y, delta)
        self.censor_weights = censoring_weights(self.km, y, delta)
        self._features = embed(values, self.grid, semimetric)
        pad = self.h_H
        self.bracket = (float(y.min()) - pad, float(y.max()) + pad)
        for arr in (self.values, self.y, self.delta, self.censor_weights, self._features):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.y.size

    def __repr__(self):
        bw = f"knn={self.knn}" if self.knn is not None else f"h_K={self.h_K:g}"
        return f"QuantileModel(n={self.n}, {bw}, h_H={self.h_H:g}, censored={int((~self.delta).sum())})"

    # -- neighbourhood -------------------------------------------------

    def _as_values(self, x) -> np.ndarray:
        if isinstance(x, Curve):
            if not np.array_equal(x.grid, self.grid):
                raise InputError("query curve is not on the training grid")
            return x.values
        x = np.asarray(x, dtype=float)
        if x.shape != self.grid.shape:
            raise InputError(f"query must have {self.grid.size} samples")
        return x

    def distances(self, x) -> np.ndarray:
        feat = embed(self._as_values(x), self.grid, self.semimetric)
        return cdist(feat[None, :], self._features)[0]

    def bandwidth_at(self, x=None, distances=None) -> float:
        if self.h_K is not None:
            return self.h_K
        d = self.distances(x) if distances is None else distances
        return float(np.partition(d, self.knn - 1)[self.knn - 1])

    def neighborhood(self, x) -> _Neighborhood:
        d = self.distances(x)
        h = self.bandwidth_at(distances=d)
        if not h > 0:
            raise EmptyNeighborhood("curve bandwidth is zero at this query")
        w = self.kernel_k(d / h)
        keep = w > 0
        total = w.sum()
        if not total > 0:
            raise EmptyNeighborhood(f"no training curve within h_K={h:g} of the query")
        coef = w[keep] / total * self.censor_weights[keep]
        return _Neighborhood(d, h, self.y[keep], coef)

    # -- estimators ----------------------------------------------------

    def _cdf(self, nb: _Neighborhood, t):
        t = np.asarray(t, dtype=float)
        flat = _smoothed_cdf(t.reshape(-1), nb.y[None, :], nb.coef[None, :], self.h_H, self.kernel_h)
        return float(flat[0]) if t.ndim == 0 else flat.reshape(t.shape)

    def _density(self, nb: _Neighborhood, t):
        t = np.asarray(t, dtype=float)
        u = (t.reshape(-1)[:, None] - nb.y[None, :]) / self.h_H
        flat = np.sum(nb.coef * self.kernel_h.pdf(u), axis=1) / self.h_H
        return float(flat[0]) if t.ndim == 0 else flat.reshape(t.shape)

    def _quantile(self, nb: _Neighborhood, alpha: float) -> tuple[float, bool]:
        if not 0 < alpha < 1:
            raise InputError(f"quantile level must lie in (0, 1), got {alpha!r}")
        q, sat = bisect_quantiles(
            nb.y[None, :], nb.coef[None, :], self.h_H, alpha, *self.bracket, kernel_h=self.kernel_h
        )
        return float(q[0]), bool(sat[0])

    def conditional_cdf(self, x, t):
        """Estimated P(T <= t | X = x); may exceed 1 under censoring weights."""
        return self._cdf(self.neighborhood(x), t)

    def conditional_density(self, x, t):
        """Derivative in ``t`` of :meth:`conditional_cdf`."""
        return self._density(self.neighborhood(x), t)

    def conditional_quantile(self, x, alpha: float) -> float:
        """Smallest ``t`` with estimated F(t | x) >= alpha.

        When the estimate never reaches ``alpha`` the right end of the
        search bracket is returned and a :class:`SaturatedWarning` issued.
        """
        q, sat = self._quantile(self.neighborhood(x), alpha)
        if sat:
            warnings.warn(f"conditional CDF stays below {alpha}; quantile saturated", SaturatedWarning, stacklevel=2)
        return q

    def _moments(self, nb: _Neighborhood):
        small_ball = np.count_nonzero(nb.distances <= nb.h_K) / self.n
        moments = kernel_moments(tau_from_distances(nb.distances, nb.h_K), self.kernel_k)
        return small_ball, moments

    def _interval(self, nb, alpha, level, q, small_ball, moments) -> QuantileInterval:
        if not 0 < level < 1:
            raise InputError(f"confidence level must lie in (0, 1), got {level!r}")
        f = self._density(nb, q)
        if not f > DENSITY_FLOOR:
            raise DegenerateDensity(f"conditional density {f:g} at the quantile is below the floor")
        g = max(self.km.survival(q), 1.0 / self.n)
        spread = alpha * (1.0 / g - alpha)
        if not spread > 0 or not moments.m1 > 0 or not moments.m2 > 0:
            raise NonpositiveVariance("plug-in variance is not positive")
        se = math.sqrt(moments.m2) / (moments.m1 * f) * math.sqrt(spread / (self.n * small_ball))
        z = float(ndtri(0.5 + level / 2))
        return QuantileInterval(
            alpha=alpha,
            level=level,
            quantile=q,
            half_width=z * se,
            std_error=se,
            density=f,
            censor_survival=g,
            small_ball=small_ball,
            m1=moments.m1,
            m2=moments.m2,
            n_eff=int(round(small_ball * self.n)),
        )

    def confidence_interval(self, x, alpha: float, level: float = 0.9) -> QuantileInterval:
        """Asymptotic ``level`` confidence interval for the ``alpha`` quantile at ``x``.

        The half-width is ``z * sqrt(M2) / (M1 f) * sqrt(alpha (1/G(q) - alpha) / (n F_x(h_K)))``
        with ``z`` the standard normal ``(1 + level) / 2`` quantile, ``f`` the
        estimated conditional density at the quantile ``q`` and ``F_x`` the
        empirical small-ball frequency.
        """
        nb = self.neighborhood(x)
        q, sat = self._quantile(nb, alpha)
        if sat:
            raise SaturatedQuantile(f"conditional CDF stays below {alpha}")
        small_ball, moments = self._moments(nb)
        return self._interval(nb, alpha, level, q, small_ball, moments)

    def predict_intervals(self, x, levels: Sequence[float] = (0.05, 0.5, 0.95), ci_level: float = 0.9) -> IntervalPrediction:
        """Quantiles and confidence intervals at several levels for one curve."""
        levels = np.asarray(levels, dtype=float)
        if levels.ndim != 1 or levels.size == 0:
            raise InputError("levels must be a non-empty list")
        if np.any(np.diff(levels) < 0) or np.any(levels <= 0) or np.any(levels >= 1):
            raise InputError("levels must be sorted and lie in (0, 1)")
        nb = self.neighborhood(x)
        small_ball, moments = self._moments(nb)
        q, sat = _per_level(self, nb, levels)
        q = np.maximum.accumulate(q)
        half = np.full(levels.size, np.nan)
        dens = np.asarray(self._density(nb, q), dtype=float).reshape(-1)
        surv = np.maximum(np.asarray(self.km.survival(q), dtype=float).reshape(-1), 1.0 / self.n)
        status = []
        for j, alpha in enumerate(levels):
            if sat[j]:
                status.append(SaturatedQuantile.__name__)
                continue
            try:
                half[j] = self._interval(nb, float(alpha), ci_level, float(q[j]), small_ball, moments).half_width
            except EstimationError as exc:
                status.append(type(exc).__name__)
            else:
                status.append("ok")
        return IntervalPrediction(
            alpha_levels=levels,
            quantiles=q,
            ci_half_width=half,
            ci_level=ci_level,
            n_eff=int(np.count_nonzero(nb.distances <= nb.h_K)),
            h_K=nb.h_K,
            small_ball=small_ball,
            m1=moments.m1,
            m2=moments.m2,
            density=dens,
            censor_survival=surv,
            saturated=sat,
            ci_status=status,
        )


def _per_level(model: QuantileModel, nb: _Neighborhood, levels: np.ndarray):
    out = [model._quantile(nb, float(a)) for a in levels]
    return np.array([q for q, _ in out]), np.array([s for _, s in out])
