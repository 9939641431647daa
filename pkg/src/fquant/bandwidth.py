"""Leave-one-out selection of the number of nearest neighbours.

For a candidate ``k`` the curve bandwidth at ``X_i`` is the distance to its
``k``-th nearest other curve and the response bandwidth is
``sd(uncensored Y) * (k / n) ** (1/5)``. Each candidate is scored by the
censoring-weighted check loss of the leave-one-out quantile predictions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import AllFoldsEmpty, InputError, InsufficientData
from .estimator import QuantileModel, bisect_quantiles
from .functional import SemiMetricSpec, embed
from .kernels import INTEGRATED_QUADRATIC, QUADRATIC
from .survival import censoring_weights, fit_km

CV_STEPS = 20  # leave-one-out quantiles to 1e-6 of their bracket

__all__ = ["BandwidthSelection", "select_bandwidth", "response_bandwidth", "check_loss", "parse_k_grid"]


def check_loss(u, alpha: float):
    """Pinball loss ``u (alpha - 1{u < 0})``."""
    u = np.asarray(u, dtype=float)
    return u * (alpha - (u < 0))


def response_bandwidth(y, delta, k: int) -> float:
    y_obs = np.asarray(y, dtype=float)[np.asarray(delta, dtype=bool)]
    if y_obs.size < 2:
        raise AllFoldsEmpty("fewer than two uncensored responses; the criterion is undefined")
    sd = float(np.std(y_obs, ddof=1))
    if not sd > 0:
        raise AllFoldsEmpty("uncensored responses are constant; the response bandwidth is zero")
    return sd * (k / len(y)) ** 0.2


def parse_k_grid(text: str) -> list[int]:
    """Parse ``"start:stop:step"`` (inclusive stop) or a comma list of ints."""
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0:
                raise ValueError
            start, stop, step = parts
            grid = list(range(start, stop + 1, step))
        else:
            grid = [int(p) for p in text.split(",")]
    except ValueError:
        raise InputError(f"bad k grid {text!r}; use start:stop:step or k1,k2,...") from None
    if not grid or min(grid) < 2:
        raise InputError("k grid must be non-empty with every k >= 2")
    return sorted(set(grid))


@dataclass(frozen=True)
class BandwidthSelection:
    k: int
    h_H: float
    cv_score: float
    grid: tuple[int, ...]
    scores: tuple[float, ...]  # inf where a candidate had an empty fold
    alpha: float

    def h_K_for(self, distances) -> float:
        """Curve bandwidth for a query with the given distances to the training curves."""
        return float(np.partition(np.asarray(distances), self.k - 1)[self.k - 1])

    def fit(self, curves, y, delta, **kwargs) -> QuantileModel:
        return QuantileModel(curves, y, delta, knn=self.k, h_H=self.h_H, **kwargs)


def loo_scores(curves, y, delta, alpha, k_grid, semimetric=SemiMetricSpec(), grid=None,
               kernel_k=QUADRATIC, kernel_h=INTEGRATED_QUADRATIC):
    """Cross-validation score of every candidate in ``k_grid`` (inf if a fold is empty)."""
    curves = np.asarray(curves, dtype=float)
    y = np.asarray(y, dtype=float)
    delta = np.asarray(delta, dtype=bool)
    n = y.size
    if grid is None:
        grid = np.arange(1, curves.shape[1] + 1, dtype=float)
    km = fit_km(y, delta)
    cw = censoring_weights(km, y, delta)
    if not np.any(cw > 0):
        raise AllFoldsEmpty("every observation is censored; the criterion is identically zero")

    feats = embed(curves, grid, semimetric)
    dist = cdist(feats, feats)
    np.fill_diagonal(dist, np.inf)
    order = np.argsort(dist, axis=1, kind="stable")
    rows = np.arange(n)[:, None]

    scores = []
    for k in k_grid:
        nbr = order[:, :k]
        d_k = dist[rows, nbr]
        h = d_k[:, k - 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(h[:, None] > 0, kernel_k(d_k / h[:, None]), 0.0)
        total = w.sum(axis=1)
        if np.any(total <= 0):
            scores.append(np.inf)
            continue
        h_H = response_bandwidth(y, delta, k)
        coef = w / total[:, None] * cw[nbr]
        y_nbr = y[nbr]
        q, _ = bisect_quantiles(
            y_nbr, coef, h_H, alpha, y_nbr.min(axis=1) - h_H, y_nbr.max(axis=1) + h_H, kernel_h, steps=CV_STEPS
        )
        scores.append(float(np.sum(cw * check_loss(y - q, alpha))))
    return scores


def select_bandwidth(curves, y, delta, alpha: float = 0.5, k_grid=range(5, 51, 5),
                     semimetric: SemiMetricSpec = SemiMetricSpec(), grid=None,
                     kernel_k=QUADRATIC, kernel_h=INTEGRATED_QUADRATIC) -> BandwidthSelection:
    """Choose ``k`` minimizing the leave-one-out check loss at level ``alpha``.

    Parameters
    ----------
    curves : ndarray of shape (n, m)
    y, delta : array-like of shape (n,)
    alpha : float
        Quantile level of the criterion.
    k_grid : iterable of int
        Candidates, each >= 2 and at most n - 1.

    Returns
    -------
    BandwidthSelection
        Ties are resolved toward the smaller ``k``.

    Raises
    ------
    InsufficientData
        If the sample has at most ``max(k_grid)`` rows.
    AllFoldsEmpty
        If no candidate yields a finite positive-weight criterion.
    """
    k_grid = tuple(sorted(int(k) for k in k_grid))
    if not k_grid:
        raise InputError("k_grid must be non-empty")
    if k_grid[0] < 2:
        raise InputError("every k must be at least 2")
    if not 0 < alpha < 1:
        raise InputError("alpha must lie in (0, 1)")
    n = len(y)
    if n < k_grid[-1] + 1:
        raise InsufficientData(f"{n} observations cannot support k = {k_grid[-1]}")
    scores = loo_scores(curves, y, delta, alpha, k_grid, semimetric, grid, kernel_k, kernel_h)
    finite = [s for s in scores if np.isfinite(s)]
    if not finite:
        raise AllFoldsEmpty("every candidate k left some fold with an empty neighbourhood")
    best = int(np.argmin(np.where(np.isfinite(scores), scores, np.inf)))
    k = k_grid[best]
    return BandwidthSelection(
        k=k,
        h_H=response_bandwidth(y, delta, k),
        cv_score=scores[best],
        grid=k_grid,
        scores=tuple(scores),
        alpha=alpha,
    )
