"""Kaplan-Meier estimate of the censoring survival function."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyDataset, InputError, LengthMismatch

__all__ = ["CensoredPair", "KaplanMeierFit", "fit_km", "survival_at", "censoring_weights"]


@dataclass(frozen=True)
class CensoredPair:
    """Observed response ``y = min(T, C)`` and ``delta = 1{T <= C}``."""

    y: float
    delta: bool

    def __post_init__(self):
        if not np.isfinite(self.y):
            raise InputError("response must be finite")
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "delta", bool(self.delta))


@dataclass(frozen=True, eq=False)
class KaplanMeierFit:
    """Product-limit estimate of P(C > t) from right-censored responses.

    Attributes
    ----------
    sorted_y : ndarray
        Order statistics of the responses.
    concomitant_delta : ndarray of bool
        Censoring indicators aligned with ``sorted_y``.
    step_values : ndarray
        Value of the estimate on ``[sorted_y[i], sorted_y[i+1])``; the last
        entry is 0 because the estimate vanishes from the largest response on.
    """

    sorted_y: np.ndarray
    concomitant_delta: np.ndarray
    step_values: np.ndarray

    @property
    def n(self) -> int:
        return self.sorted_y.size

    def survival(self, t, side: str = "at"):
        """Evaluate the step function at ``t`` (``side="left_limit"`` for G(t-))."""
        if side == "at":
            idx = np.searchsorted(self.sorted_y, t, side="right")
        elif side == "left_limit":
            idx = np.searchsorted(self.sorted_y, t, side="left")
        else:
            raise InputError(f"side must be 'at' or 'left_limit', got {side!r}")
        padded = np.concatenate(([1.0], self.step_values))
        out = padded[idx]
        return float(out) if np.ndim(out) == 0 else out


def fit_km(y, delta=None) -> KaplanMeierFit:
    """Fit the censoring survival function.

    Parameters
    ----------
    y : array-like of float, or sequence of CensoredPair
        Observed responses. When ``delta`` is omitted, ``y`` must hold
        ``CensoredPair`` objects.
    delta : array-like of bool, optional
        1 if the response is uncensored.

    Notes
    -----
    Each censored order statistic multiplies the estimate by
    ``1 - 1/(n - i + 1)``. At tied responses uncensored observations are
    ordered before censored ones, then by original position.
    """
    if delta is None:
        pairs: Sequence[CensoredPair] = list(y)
        y = [p.y for p in pairs]
        delta = [p.delta for p in pairs]
    y = np.asarray(y, dtype=float)
    delta = np.asarray(delta).astype(bool)
    if y.size == 0:
        raise EmptyDataset("Kaplan-Meier needs at least one observation")
    if y.shape != delta.shape or y.ndim != 1:
        raise LengthMismatch("y and delta must be 1-d arrays of the same length")
    if not np.all(np.isfinite(y)):
        raise InputError("responses must be finite")

    n = y.size
    # lexsort: last key is primary
    order = np.lexsort((np.arange(n), ~delta, y))
    sorted_y = y[order]
    sorted_delta = delta[order]
    at_risk = n - np.arange(n)
    factors = 1.0 - (~sorted_delta) / at_risk
    steps = np.cumprod(factors)
    steps[-1] = 0.0
    for arr in (sorted_y, sorted_delta, steps):
        arr.setflags(write=False)
    return KaplanMeierFit(sorted_y, sorted_delta, steps)


def survival_at(fit: KaplanMeierFit, t, side: str = "at"):
    return fit.survival(t, side)


def censoring_weights(fit: KaplanMeierFit, y, delta) -> np.ndarray:
    """Inverse-probability-of-censoring weights ``delta / G(y-)``.

    The left limit keeps the weight finite at the largest response, and the
    survival estimate is floored at ``1/n`` so that no weight exceeds ``n``.
    """
    y = np.asarray(y, dtype=float)
    delta = np.asarray(delta).astype(bool)
    g = np.maximum(fit.survival(y, side="left_limit"), 1.0 / fit.n)
    return np.where(delta, 1.0 / g, 0.0)
