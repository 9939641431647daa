"""Smoothing kernels and the small-ball constants used by the interval estimator.

Two kernels enter the estimator: an asymmetric kernel ``K`` on [0, 1] that
weights curves by their distance to the query, and a distribution kernel
``H`` (with density ``H1``) that smooths the response indicator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import simpson

from .errors import EmptyBall, InputError
from .functional import Curve, SemiMetricSpec, distances_to

__all__ = [
    "QuadraticKernel",
    "IntegratedQuadraticKernel",
    "KernelMoments",
    "eval_K",
    "eval_H",
    "eval_H1",
    "tau_from_distances",
    "estimate_tau",
    "kernel_moments",
    "QUADRATIC",
    "INTEGRATED_QUADRATIC",
]


class QuadraticKernel:
    """``K(u) = 1.5 (1 - u^2)`` on [0, 1], zero elsewhere.

    Other kernels can be plugged into the estimator by providing the same
    three members: ``__call__``, ``derivative`` and ``name``.
    """

    name = "quadratic"

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return np.where((u >= 0) & (u <= 1), 1.5 * (1.0 - u * u), 0.0)

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        return np.where((u >= 0) & (u <= 1), -3.0 * u, 0.0)

    def __repr__(self):
        return "QuadraticKernel()"


class IntegratedQuadraticKernel:
    """Distribution function of the density ``0.75 (1 - u^2)`` on [-1, 1]."""

    name = "integrated-quadratic"

    def cdf(self, u):
        u = np.clip(np.asarray(u, dtype=float), -1.0, 1.0)
        return 0.5 + u * (0.75 - 0.25 * u * u)

    def pdf(self, u):
        u = np.asarray(u, dtype=float)
        return np.where(np.abs(u) <= 1, 0.75 * (1.0 - u * u), 0.0)

    def ppf(self, p):
        # H(2 sin t) = (1 + sin 3t) / 2
        p = np.asarray(p, dtype=float)
        return 2.0 * np.sin(np.arcsin(2.0 * p - 1.0) / 3.0)

    def __repr__(self):
        return "IntegratedQuadraticKernel()"


QUADRATIC = QuadraticKernel()
INTEGRATED_QUADRATIC = IntegratedQuadraticKernel()


def eval_K(u):
    return QUADRATIC(u)


def eval_H(u):
    return INTEGRATED_QUADRATIC.cdf(u)


def eval_H1(u):
    return INTEGRATED_QUADRATIC.pdf(u)


@dataclass(frozen=True)
class KernelMoments:
    m1: float
    m2: float
    source: str = "empirical-tau"

    def __post_init__(self):
        if self.source not in ("analytic-tau", "empirical-tau"):
            raise InputError(f"unknown moment source {self.source!r}")


def tau_from_distances(distances: np.ndarray, h: float) -> Callable[[np.ndarray], np.ndarray]:
    """Empirical small-ball ratio ``s -> F_n(s h) / F_n(h)`` as a vectorized function.

    Raises
    ------
    EmptyBall
        If no distance is <= h.
    """
    d = np.sort(np.asarray(distances, dtype=float))
    in_ball = np.searchsorted(d, h, side="right")
    if in_ball == 0:
        raise EmptyBall(f"no curve within distance {h!r} of the query")

    def tau(s):
        return np.searchsorted(d, np.asarray(s, dtype=float) * h, side="right") / in_ball

    return tau


def estimate_tau(x: Curve, data: Sequence[Curve], spec: SemiMetricSpec, h: float, s) -> float:
    """Ratio of small-ball frequencies at radii ``s*h`` and ``h`` around ``x``."""
    tau = tau_from_distances(distances_to(x, data, spec), h)
    out = tau(s)
    return float(out) if np.ndim(out) == 0 else out


def kernel_moments(
    tau: Callable[[np.ndarray], np.ndarray],
    kernel=QUADRATIC,
    nodes: int = 1001,
    source: str = "empirical-tau",
) -> KernelMoments:
    """Constants ``M_j = K^j(1) - int_0^1 (K^j)'(t) tau(t) dt`` for j = 1, 2.

    The integral uses composite Simpson quadrature on ``nodes`` equispaced
    points (at least 201, odd).
    """
    if nodes < 201:
        raise InputError("at least 201 quadrature nodes are required")
    if nodes % 2 == 0:
        nodes += 1
    t = np.linspace(0.0, 1.0, nodes)
    k = kernel(t)
    dk = kernel.derivative(t)
    tau_t = np.broadcast_to(np.asarray(tau(t), dtype=float), t.shape)
    k_one = float(kernel(1.0))
    m1 = k_one - simpson(dk * tau_t, x=t)
    m2 = k_one**2 - simpson(2.0 * k * dk * tau_t, x=t)
    return KernelMoments(float(m1), float(m2), source)
