"""Sampled curves, finite-difference derivatives and L2-type semi-metrics."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .errors import CurveTooShort, EmptyDataset, GridMismatch, InputError, NonUniformGrid

__all__ = [
    "Curve",
    "SemiMetricSpec",
    "second_derivative",
    "distance",
    "small_ball_cdf",
    "embed",
    "distances_to",
    "pairwise_distances",
    "read_curves",
    "write_curves",
]

_UNIFORM_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class Curve:
    """A real function sampled on a strictly increasing time grid.

    Parameters
    ----------
    grid : array-like of shape (m,)
        Sampling times, m >= 3.
    values : array-like of shape (m,)
        Function values at ``grid``.
    """

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        values = np.array(self.values, dtype=float)
        if grid.ndim != 1 or values.ndim != 1:
            raise InputError("grid and values must be one-dimensional")
        if grid.size < 3:
            raise CurveTooShort(f"a curve needs at least 3 points, got {grid.size}")
        if values.size != grid.size:
            raise InputError(
                f"values length {values.size} does not match grid length {grid.size}"
            )
        if not (np.all(np.isfinite(grid)) and np.all(np.isfinite(values))):
            raise InputError("curve entries must be finite")
        if np.any(np.diff(grid) <= 0):
            raise InputError("grid must be strictly increasing")
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.grid.size

    def __add__(self, other):
        if isinstance(other, Curve):
            _check_same_grid(self, other)
            return Curve(self.grid, self.values + other.values)
        return Curve(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, Curve):
            _check_same_grid(self, other)
            return Curve(self.grid, self.values - other.values)
        return Curve(self.grid, self.values - other)

    @classmethod
    def hourly(cls, values: Sequence[float]) -> "Curve":
        """Curve on the grid 1, 2, ..., len(values)."""
        values = np.asarray(values, dtype=float)
        return cls(np.arange(1, values.size + 1, dtype=float), values)


@dataclass(frozen=True)
class SemiMetricSpec:
    """L2 distance between derivatives of order ``derivative_order`` (0 or 2).

    The integral is always computed with the trapezoid rule.
    """

    derivative_order: int = 2
    quadrature: str = field(default="trapezoid", init=False)

    def __post_init__(self):
        if self.derivative_order not in (0, 2):
            raise InputError(
                f"derivative_order must be 0 or 2, got {self.derivative_order!r}"
            )

    @classmethod
    def from_name(cls, name: str) -> "SemiMetricSpec":
        try:
            return cls({"l2": 0, "deriv2": 2}[name])
        except KeyError:
            raise InputError(f"unknown semi-metric {name!r}; use 'deriv2' or 'l2'") from None


def _check_same_grid(a: Curve, b: Curve):
    if a.grid.shape != b.grid.shape or not np.array_equal(a.grid, b.grid):
        raise GridMismatch("curves are sampled on different grids")


def _uniform_step(grid: np.ndarray) -> float:
    steps = np.diff(grid)
    step = steps.mean()
    if np.max(np.abs(steps - step)) > _UNIFORM_RTOL * abs(step):
        raise NonUniformGrid("derivatives require a uniformly spaced grid")
    return float(step)


def _second_difference(values: np.ndarray, step: float) -> np.ndarray:
    # values: (..., m). Endpoints reuse the stencil of their neighbour, which
    # is the one-sided second difference and is exact on quadratics.
    out = np.empty_like(values)
    out[..., 1:-1] = values[..., :-2] - 2.0 * values[..., 1:-1] + values[..., 2:]
    out[..., 0] = out[..., 1]
    out[..., -1] = out[..., -2]
    return out / step**2


def second_derivative(c: Curve) -> Curve:
    """Second derivative of ``c`` by finite differences on its own grid.

    Central differences are used on interior points and one-sided second
    differences at both endpoints; all are exact for quadratic curves.

    Raises
    ------
    NonUniformGrid
        If the grid spacing varies by more than 1e-9 relative.
    """
    if len(c) < 3:  # unreachable through Curve, kept for duck-typed input
        raise CurveTooShort("second derivative needs at least 3 points")
    step = _uniform_step(c.grid)
    return Curve(c.grid, _second_difference(c.values, step))


def _trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    steps = np.diff(grid)
    w = np.zeros(grid.size)
    w[:-1] += steps / 2
    w[1:] += steps / 2
    return w


def embed(values: np.ndarray, grid: np.ndarray, spec: SemiMetricSpec) -> np.ndarray:
    """Map sampled curves to vectors whose Euclidean distance is the semi-metric.

    Parameters
    ----------
    values : ndarray of shape (n, m) or (m,)
    grid : ndarray of shape (m,)
    spec : SemiMetricSpec

    Returns
    -------
    ndarray with the same shape as ``values``
    """
    values = np.asarray(values, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if values.shape[-1] != grid.size:
        raise GridMismatch(
            f"curves have {values.shape[-1]} samples but the grid has {grid.size}"
        )
    if spec.derivative_order == 2:
        values = _second_difference(values, _uniform_step(grid))
    return values * np.sqrt(_trapezoid_weights(grid))


def distance(a: Curve, b: Curve, spec: SemiMetricSpec = SemiMetricSpec()) -> float:
    """Semi-metric ``sqrt(int (a^(k) - b^(k))^2 dt)`` with k = derivative order."""
    _check_same_grid(a, b)
    diff = embed(a.values - b.values, a.grid, spec)
    return float(np.sqrt(np.dot(diff, diff)))


def _stack(data: Iterable[Curve]) -> tuple[np.ndarray, np.ndarray]:
    data = list(data)
    if not data:
        raise EmptyDataset("no curves given")
    grid = data[0].grid
    for c in data[1:]:
        _check_same_grid(data[0], c)
    return grid, np.vstack([c.values for c in data])


def distances_to(x: Curve, data: Sequence[Curve], spec: SemiMetricSpec = SemiMetricSpec()) -> np.ndarray:
    """Distances from ``x`` to every curve of ``data``."""
    grid, values = _stack(data)
    _check_same_grid(x, data[0])
    feats = embed(values, grid, spec)
    return cdist(embed(x.values, grid, spec)[None, :], feats)[0]


def pairwise_distances(data: Sequence[Curve], spec: SemiMetricSpec = SemiMetricSpec()) -> np.ndarray:
    grid, values = _stack(data)
    feats = embed(values, grid, spec)
    return cdist(feats, feats)


def small_ball_cdf(x: Curve, data: Sequence[Curve], spec: SemiMetricSpec, u: float) -> float:
    """Fraction of ``data`` within distance ``u`` of ``x`` (closed ball)."""
    if u < 0:
        raise InputError("radius must be nonnegative")
    d = distances_to(x, data, spec)
    return float(np.count_nonzero(d <= u)) / d.size


def read_curves(path, grid: Sequence[float] | None = None) -> tuple[list[str], list[Curve]]:
    """Read a CSV with one curve per row: a day identifier then the samples.

    The first row is a header. Without ``grid`` the samples are placed on
    1, 2, ..., m.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyDataset(f"{path} is empty")
        ids, rows = [], []
        for row in reader:
            if not row:
                continue
            ids.append(row[0])
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise InputError(f"{path}: non-numeric sample in row {row[0]!r}") from exc
    if not rows:
        raise EmptyDataset(f"{path} has no data rows")
    m = len(rows[0])
    if grid is None:
        grid = np.arange(1, m + 1, dtype=float)
    return ids, [Curve(grid, r) for r in rows]


def write_curves(path, day_ids: Sequence[str], curves: Sequence[Curve]):
    if len(day_ids) != len(curves):
        raise InputError("one identifier per curve is required")
    m = len(curves[0]) if curves else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["day_id"] + [f"h{j}" for j in range(1, m + 1)])
        for day, c in zip(day_ids, curves):
            writer.writerow([day] + [repr(float(v)) for v in c.values])
