import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fquant.errors import EmptyDataset, EmptyLoad, InputError, LengthMismatch, NonpositiveTruth
from fquant.functional import Curve
from fquant.workflow import (
    DayRecord,
    extract_response,
    interval_coverage,
    mape,
    mean_interval_width,
    read_day_records,
    records_to_table,
    write_day_records,
)

TEMP = Curve.hourly(np.linspace(10, 20, 24))


def test_complete_day():
    load = np.arange(24.0)
    load[7] = 99.0
    pair = extract_response(DayRecord("a", TEMP, load))
    assert pair.y == 99.0 and pair.delta


def test_censored_day():
    pair = extract_response(DayRecord("b", TEMP, [3.0, 7.0, 5.0], censor_hour=3))
    assert pair.y == 7.0 and not pair.delta


def test_empty_load():
    with pytest.raises(EmptyLoad):
        extract_response(DayRecord("c", TEMP, []))


def test_censor_hour_checked():
    with pytest.raises(InputError):
        DayRecord("d", TEMP, [1.0, 2.0], censor_hour=3)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1e4, allow_nan=False), min_size=24, max_size=24), st.integers(1, 24))
def test_prefix_never_exceeds_peak(load, hour):
    full = extract_response(DayRecord("e", TEMP, load))
    part = extract_response(DayRecord("e", TEMP, load[:hour], censor_hour=hour))
    assert part.y <= full.y


def test_mape():
    assert mape([10.0, 20.0], [9.0, 22.0]) == pytest.approx(0.1)
    assert mape([5.0], [5.0]) == 0.0


@pytest.mark.parametrize("c", [0.001, 7.0, 1e6])
def test_mape_scale_invariant(rng, c):
    t = rng.uniform(1, 2, 10)
    m = t + rng.normal(0, 0.1, 10)
    assert mape(c * t, c * m) == pytest.approx(mape(t, m), rel=1e-12)


def test_mape_errors():
    with pytest.raises(LengthMismatch):
        mape([1.0, 2.0], [1.0])
    with pytest.raises(NonpositiveTruth):
        mape([0.0, 1.0], [1.0, 1.0])
    with pytest.raises(EmptyDataset):
        mape([], [])


def test_coverage_and_width():
    t = [1.0, 2.0, 3.0, 4.0]
    lo = [0.5, 2.0, 3.5, 3.0]
    hi = [1.5, 2.5, 4.0, 5.0]
    assert interval_coverage(t, lo, hi) == 0.75
    assert mean_interval_width(lo, hi) == pytest.approx(1.0)


def test_day_record_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    recs = [
        DayRecord("x1", Curve.hourly(rng.normal(size=24)), rng.uniform(1, 2, 24),
                  forecast_temperature=Curve.hourly(rng.normal(size=24))),
        DayRecord("x2", Curve.hourly(rng.normal(size=24)), rng.uniform(1, 2, 9), censor_hour=9,
                  forecast_temperature=Curve.hourly(rng.normal(size=24))),
    ]
    path = tmp_path / "days.csv"
    write_day_records(path, recs)
    back = read_day_records(path)
    assert [r.day_id for r in back] == ["x1", "x2"]
    for a, b in zip(recs, back):
        np.testing.assert_array_equal(a.load, b.load)
        np.testing.assert_array_equal(a.temperature.values, b.temperature.values)
        np.testing.assert_array_equal(a.forecast_temperature.values, b.forecast_temperature.values)
        assert a.censor_hour == b.censor_hour

    table = records_to_table(back)
    np.testing.assert_array_equal(table.delta, [True, False])
    assert table.y[1] == recs[1].load.max()
    assert np.isnan(table.truth[1])
    fc = records_to_table(back, covariate="forecast")
    np.testing.assert_array_equal(fc.curves[0], recs[0].forecast_temperature.values)


def test_malformed_day_records(tmp_path):
    path = tmp_path / "bad.csv"
    write_day_records(path, [DayRecord("x", TEMP, np.ones(24))])
    text = path.read_text().splitlines()
    text[1] = text[1].rstrip(",") + ",3"  # claims censoring at hour 3 with 24 readings
    path.write_text("\n".join(text) + "\n")
    with pytest.raises(InputError):
        read_day_records(path)
