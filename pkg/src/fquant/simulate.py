"""Stationary functional processes with known conditional quantiles.

Each curve is ``X_t(s) = a_t sin(2 pi s / S) + 0.1 (level + a_t)`` on the
hourly grid ``s = 1..S``, driven by a stationary Gaussian AR(1) amplitude
chain ``a_t`` with unit marginal variance. The response is
``T_t = m(X_t) + noise_scale * eps_t`` and is right-censored by i.i.d.
exponential variables whose rate is calibrated to a target censoring
fraction.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtri

from .errors import CalibrationFailed, InputError
from .functional import Curve
from .survival import CensoredPair

__all__ = [
    "SimModel",
    "SimulatedData",
    "generate",
    "true_quantile",
    "link_value",
    "calibrate_censoring_rate",
    "write_simulation",
]

LINKS = ("mean", "max")
ERROR_DISTS = ("normal", "exponential")
CALIBRATION_DRAWS = 100_000


@dataclass(frozen=True)
class SimModel:
    """Parameters of the simulated process.

    ``link`` names the functional ``m``: ``"mean"`` averages the curve's
    samples, ``"max"`` takes the largest sample.
    """

    n_points_per_curve: int = 24
    ar_coefficient: float = 0.5
    link: str = "mean"
    noise_scale: float = 0.1
    error_dist: str = "normal"
    censor_rate_target: float = 0.0
    seed: int = 0
    level: float = 10.0

    def __post_init__(self):
        if not -1 < self.ar_coefficient < 1:
            raise InputError("ar_coefficient must lie in (-1, 1)")
        if not 0 <= self.censor_rate_target < 1:
            raise InputError("censor_rate_target must lie in [0, 1)")
        if not self.noise_scale > 0:
            raise InputError("noise_scale must be positive")
        if self.link not in LINKS:
            raise InputError(f"link must be one of {LINKS}")
        if self.error_dist not in ERROR_DISTS:
            raise InputError(f"error_dist must be one of {ERROR_DISTS}")
        if self.n_points_per_curve < 3:
            raise InputError("curves need at least 3 points")

    @property
    def grid(self) -> np.ndarray:
        return np.arange(1, self.n_points_per_curve + 1, dtype=float)

    def curves_from_amplitudes(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        shape = np.sin(2 * np.pi * self.grid / self.n_points_per_curve)
        return a[..., None] * shape + 0.1 * (self.level + a[..., None])

    def curve(self, amplitude: float) -> Curve:
        return Curve(self.grid, self.curves_from_amplitudes(amplitude))


@dataclass(frozen=True, eq=False)
class SimulatedData:
    """Observed sample plus the hidden lifetimes and censoring times."""

    model: SimModel
    grid: np.ndarray
    curves: np.ndarray  # (n, S)
    y: np.ndarray
    delta: np.ndarray
    lifetimes: np.ndarray
    censor_times: np.ndarray
    amplitudes: np.ndarray
    censor_rate: float  # exponential rate; 0 means no censoring

    def __len__(self):
        return self.y.size

    @property
    def day_ids(self) -> list[str]:
        return [f"d{i:05d}" for i in range(1, len(self) + 1)]

    def curve(self, i: int) -> Curve:
        return Curve(self.grid, self.curves[i])

    def observations(self) -> list[tuple[Curve, CensoredPair]]:
        return [(self.curve(i), CensoredPair(self.y[i], self.delta[i])) for i in range(len(self))]

    def split(self, n_train: int) -> tuple["SimulatedData", "SimulatedData"]:
        """Chronological split into the first ``n_train`` rows and the rest."""
        def part(sl):
            return SimulatedData(
                self.model, self.grid, self.curves[sl], self.y[sl], self.delta[sl],
                self.lifetimes[sl], self.censor_times[sl], self.amplitudes[sl], self.censor_rate,
            )
        return part(slice(0, n_train)), part(slice(n_train, None))


def link_value(model: SimModel, values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if model.link == "mean":
        return values.mean(axis=-1)
    return values.max(axis=-1)


def _errors(model: SimModel, rng: np.random.Generator, size) -> np.ndarray:
    if model.error_dist == "normal":
        return rng.standard_normal(size)
    return rng.standard_exponential(size)


def calibrate_censoring_rate(model: SimModel, rng: np.random.Generator | None = None) -> float:
    """Exponential censoring rate giving P(T > C) = ``censor_rate_target``.

    The censoring probability is averaged in closed form, ``1 - exp(-rate T+)``,
    over Monte-Carlo draws of ``T`` from the stationary law, and the rate is
    found by bisection on its logarithm.
    """
    target = model.censor_rate_target
    if target == 0:
        return 0.0
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(model.seed).spawn(4)[3])
    a = rng.standard_normal(CALIBRATION_DRAWS)
    t = link_value(model, model.curves_from_amplitudes(a)) + model.noise_scale * _errors(model, rng, a.size)
    positive = np.maximum(t, 0.0)

    def rate_of(log_rate):
        return float(np.mean(-np.expm1(-math.exp(log_rate) * positive)))

    lo, hi = math.log(1e-8), math.log(1e8)
    if rate_of(hi) < target + 1e-3:
        raise CalibrationFailed(
            f"censoring rate {target} is unreachable; at most {np.mean(t > 0):.3f} of lifetimes are positive"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if rate_of(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    return math.exp(0.5 * (lo + hi))


def generate(model: SimModel, n: int) -> SimulatedData:
    """Draw ``n`` consecutive observations of the process.

    Output is a deterministic function of ``model`` (including its seed)
    and ``n``.
    """
    if n < 1:
        raise InputError("n must be at least 1")
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(model.seed).spawn(4)]
    amp_rng, noise_rng, censor_rng, calib_rng = streams

    phi = model.ar_coefficient
    innov = amp_rng.standard_normal(n)
    a = np.empty(n)
    a[0] = innov[0]
    scale = math.sqrt(1.0 - phi * phi)
    for i in range(1, n):
        a[i] = phi * a[i - 1] + scale * innov[i]

    curves = model.curves_from_amplitudes(a)
    lifetimes = link_value(model, curves) + model.noise_scale * _errors(model, noise_rng, n)
    rate = calibrate_censoring_rate(model, calib_rng)
    if rate == 0:
        censor_times = np.full(n, np.inf)
    else:
        censor_times = censor_rng.standard_exponential(n) / rate
    y = np.minimum(lifetimes, censor_times)
    delta = lifetimes <= censor_times
    return SimulatedData(model, model.grid, curves, y, delta, lifetimes, censor_times, a, rate)


def true_quantile(model: SimModel, x, alpha: float) -> float:
    """Exact conditional ``alpha`` quantile of the lifetime given curve ``x``."""
    if not 0 < alpha < 1:
        raise InputError("alpha must lie in (0, 1)")
    values = x.values if isinstance(x, Curve) else x
    m = float(link_value(model, values))
    if model.error_dist == "normal":
        return m + model.noise_scale * float(ndtri(alpha))
    return m - model.noise_scale * math.log1p(-alpha)


def write_simulation(data: SimulatedData, out_dir, stem: str = "sim") -> tuple[Path, Path]:
    """Write ``<stem>.csv`` (observations) and ``<stem>_truth.json`` into ``out_dir``."""
    from .io import write_observations

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{stem}.csv"
    truth_path = out_dir / f"{stem}_truth.json"
    write_observations(csv_path, data.day_ids, data.curves, data.y, data.delta)
    truth = {
        "model": asdict(data.model),
        "censor_rate": data.censor_rate,
        "rows": [
            {
                "day_id": day,
                "lifetime": float(t),
                "censor_time": None if math.isinf(c) else float(c),
                "amplitude": float(a),
                "median": true_quantile(data.model, data.curves[i], 0.5),
            }
            for i, (day, t, c, a) in enumerate(
                zip(data.day_ids, data.lifetimes, data.censor_times, data.amplitudes)
            )
        ],
    }
    truth_path.write_text(json.dumps(truth, indent=1) + "\n", encoding="utf-8")
    return csv_path, truth_path
