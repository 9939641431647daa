"""CSV/JSON readers and writers shared by the simulator and the CLI.

Observation table layout: ``day_id, x1..xS, y, delta`` with one row per day.
Day-record tables (temperature and load curves) live in :mod:`fquant.workflow`.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyDataset, InputError

__all__ = ["ObservationTable", "read_observations", "write_observations", "read_table", "read_truth"]


@dataclass(frozen=True, eq=False)
class ObservationTable:
    day_ids: list[str]
    grid: np.ndarray
    curves: np.ndarray
    y: np.ndarray
    delta: np.ndarray
    # true lifetimes, NaN where unknown (censored rows of a real dataset)
    truth: np.ndarray | None = None

    def __len__(self):
        return len(self.day_ids)

    def head(self, n: int) -> "ObservationTable":
        return self._take(slice(0, n))

    def tail_from(self, n: int) -> "ObservationTable":
        return self._take(slice(n, None))

    def _take(self, sl):
        truth = None if self.truth is None else self.truth[sl]
        return ObservationTable(self.day_ids[sl], self.grid, self.curves[sl], self.y[sl], self.delta[sl], truth)


def _fmt(v: float) -> str:
    return repr(float(v))


def write_observations(path, day_ids, curves, y, delta):
    curves = np.asarray(curves, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["day_id"] + [f"x{j}" for j in range(1, curves.shape[1] + 1)] + ["y", "delta"])
        for day, row, yi, di in zip(day_ids, curves, y, delta):
            writer.writerow([day] + [_fmt(v) for v in row] + [_fmt(yi), int(bool(di))])


def read_observations(path) -> ObservationTable:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise EmptyDataset(f"{path} is empty")
    header, body = rows[0], [r for r in rows[1:] if r]
    if len(header) < 6 or header[0] != "day_id" or header[-2:] != ["y", "delta"]:
        raise InputError(f"{path}: expected columns day_id, x1..xS, y, delta")
    if not body:
        raise EmptyDataset(f"{path} has no data rows")
    width = len(header)
    ids, curves, y, delta = [], [], [], []
    for r in body:
        if len(r) != width:
            raise InputError(f"{path}: row {r[0]!r} has {len(r)} fields, expected {width}")
        try:
            curves.append([float(v) for v in r[1:-2]])
            y.append(float(r[-2]))
            delta.append(int(r[-1]))
        except ValueError as exc:
            raise InputError(f"{path}: malformed row {r[0]!r}") from exc
        ids.append(r[0])
    delta = np.array(delta)
    if not np.all(np.isin(delta, (0, 1))):
        raise InputError(f"{path}: delta must be 0 or 1")
    y = np.array(y)
    curves = np.array(curves)
    if not (np.all(np.isfinite(curves)) and np.all(np.isfinite(y))):
        raise InputError(f"{path}: non-finite values")
    truth = np.where(delta == 1, y, np.nan)
    grid = np.arange(1, curves.shape[1] + 1, dtype=float)
    return ObservationTable(ids, grid, curves, y, delta.astype(bool), truth)


def read_table(path) -> ObservationTable:
    """Read either an observation table or a day-record table, by header."""
    from .workflow import read_day_records, records_to_table

    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), None)
    if header is None:
        raise EmptyDataset(f"{path} is empty")
    if header[-2:] == ["y", "delta"]:
        return read_observations(path)
    if any(h.startswith("load") for h in header):
        return records_to_table(read_day_records(path))
    raise InputError(f"{path}: unrecognized table layout")


def read_truth(path) -> dict[str, float]:
    """Map day_id to true response from a simulation truth JSON or a table CSV."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        try:
            return {r["day_id"]: float(r["lifetime"]) for r in doc["rows"]}
        except (KeyError, TypeError) as exc:
            raise InputError(f"{path}: not a simulation truth file") from exc
    table = read_table(path)
    return {d: float(t) for d, t in zip(table.day_ids, table.truth) if np.isfinite(t)}
