"""Daily peak-load pipeline: censored peaks from hourly readings and forecast metrics.

A day whose meter stopped reporting after hour ``t_c`` contributes the
maximum of its first ``t_c`` readings as a censored response; complete days
contribute their true daily peak.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyDataset, EmptyLoad, InputError, LengthMismatch, NonpositiveTruth
from .functional import Curve
from .survival import CensoredPair

__all__ = [
    "DayRecord",
    "extract_response",
    "mape",
    "interval_coverage",
    "mean_interval_width",
    "read_day_records",
    "write_day_records",
    "records_to_table",
]

HOURS = 24


@dataclass(frozen=True, eq=False)
class DayRecord:
    """One day of hourly temperature and (possibly truncated) load readings.

    ``forecast_temperature`` optionally holds the temperature forecast that
    was available before the day; :func:`records_to_table` can use it as the
    covariate instead of the observed curve.
    """

    day_id: str
    temperature: Curve
    load: np.ndarray
    censor_hour: int | None = None
    forecast_temperature: Curve | None = None

    def __post_init__(self):
        load = np.array(self.load, dtype=float)
        load.setflags(write=False)
        object.__setattr__(self, "load", load)
        if self.censor_hour is not None:
            if not 1 <= self.censor_hour <= HOURS:
                raise InputError(f"{self.day_id}: censor hour must lie in [1, {HOURS}]")
            if load.size != self.censor_hour:
                raise InputError(
                    f"{self.day_id}: censored at hour {self.censor_hour} but {load.size} readings given"
                )

    @property
    def censored(self) -> bool:
        return self.censor_hour is not None


def extract_response(rec: DayRecord) -> CensoredPair:
    """Daily peak (uncensored) or maximum over the observed prefix (censored)."""
    if rec.load.size == 0:
        raise EmptyLoad(f"{rec.day_id}: no load readings")
    return CensoredPair(float(rec.load.max()), not rec.censored)


def _pair_lengths(*arrays):
    arrays = [np.asarray(a, dtype=float) for a in arrays]
    if len({a.shape for a in arrays}) != 1 or arrays[0].ndim != 1:
        raise LengthMismatch("inputs must be 1-d and of equal length")
    return arrays


def mape(truths, medians) -> float:
    """Mean of ``|truth - median| / truth``."""
    truths, medians = _pair_lengths(truths, medians)
    if truths.size == 0:
        raise EmptyDataset("no predictions to score")
    if np.any(truths <= 0):
        raise NonpositiveTruth("MAPE needs strictly positive true values")
    return float(np.mean(np.abs(truths - medians) / truths))


def interval_coverage(truths, lowers, uppers) -> float:
    truths, lowers, uppers = _pair_lengths(truths, lowers, uppers)
    if truths.size == 0:
        raise EmptyDataset("no intervals to score")
    return float(np.mean((truths >= lowers) & (truths <= uppers)))


def mean_interval_width(lowers, uppers) -> float:
    lowers, uppers = _pair_lengths(lowers, uppers)
    return float(np.mean(uppers - lowers))


def _columns(prefix):
    return [f"{prefix}{j}" for j in range(1, HOURS + 1)]


def read_day_records(path) -> list[DayRecord]:
    """Read ``day_id, temp1..24, load1..24[, censor_hour][, ftemp1..24]`` rows.

    Load cells after the censoring hour are left empty.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        for col in ["day_id"] + _columns("temp") + _columns("load"):
            if col not in fields:
                raise InputError(f"{path}: missing column {col!r}")
        has_forecast = all(c in fields for c in _columns("ftemp"))
        grid = np.arange(1, HOURS + 1, dtype=float)
        records = []
        for row in reader:
            try:
                temp = Curve(grid, [float(row[c]) for c in _columns("temp")])
                loads = [row[c].strip() for c in _columns("load")]
                hour_text = (row.get("censor_hour") or "").strip()
                censor_hour = int(hour_text) if hour_text else None
                n_obs = censor_hour if censor_hour is not None else HOURS
                if any(v == "" for v in loads[:n_obs]) or any(v != "" for v in loads[n_obs:]):
                    raise InputError(f"{path}: day {row['day_id']!r} load cells do not match censor_hour")
                forecast = Curve(grid, [float(row[c]) for c in _columns("ftemp")]) if has_forecast else None
                records.append(
                    DayRecord(row["day_id"], temp, [float(v) for v in loads[:n_obs]], censor_hour, forecast)
                )
            except ValueError as exc:
                if isinstance(exc, InputError):
                    raise
                raise InputError(f"{path}: malformed day {row.get('day_id')!r}: {exc}") from exc
    if not records:
        raise EmptyDataset(f"{path} has no day records")
    return records


def write_day_records(path, records: Sequence[DayRecord]):
    has_forecast = any(r.forecast_temperature is not None for r in records)
    header = ["day_id"] + _columns("temp") + _columns("load") + ["censor_hour"]
    if has_forecast:
        header += _columns("ftemp")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for r in records:
            loads = [repr(float(v)) for v in r.load] + [""] * (HOURS - r.load.size)
            row = [r.day_id] + [repr(float(v)) for v in r.temperature.values] + loads
            row.append("" if r.censor_hour is None else str(r.censor_hour))
            if has_forecast:
                if r.forecast_temperature is None:
                    raise InputError(f"{r.day_id}: forecast temperature missing")
                row += [repr(float(v)) for v in r.forecast_temperature.values]
            writer.writerow(row)


def records_to_table(records: Sequence[DayRecord], covariate: str = "observed"):
    """Observation table built from day records.

    ``covariate`` selects the observed temperature curve or its forecast.
    The table's ``truth`` holds the daily peak of uncensored days.
    """
    from .io import ObservationTable

    if covariate not in ("observed", "forecast"):
        raise InputError("covariate must be 'observed' or 'forecast'")
    curves, y, delta = [], [], []
    for r in records:
        curve = r.temperature if covariate == "observed" else r.forecast_temperature
        if curve is None:
            raise InputError(f"{r.day_id}: no forecast temperature curve")
        pair = extract_response(r)
        curves.append(curve.values)
        y.append(pair.y)
        delta.append(pair.delta)
    y = np.array(y)
    delta = np.array(delta, dtype=bool)
    return ObservationTable(
        [r.day_id for r in records],
        records[0].temperature.grid,
        np.vstack(curves),
        y,
        delta,
        np.where(delta, y, np.nan),
    )
