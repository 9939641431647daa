import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fquant.errors import CurveTooShort, EmptyDataset, GridMismatch, InputError, NonUniformGrid
from fquant.functional import (
    Curve,
    SemiMetricSpec,
    distance,
    distances_to,
    pairwise_distances,
    read_curves,
    second_derivative,
    small_ball_cdf,
    write_curves,
)

ORDER0 = SemiMetricSpec(0)
ORDER2 = SemiMetricSpec(2)

finite = st.floats(-1e3, 1e3, allow_nan=False)
curve_values = arrays(np.float64, 12, elements=finite)
GRID12 = np.linspace(0.0, 5.5, 12)


class TestCurve:
    def test_rejects_short(self):
        with pytest.raises(CurveTooShort):
            Curve([0.0, 1.0], [1.0, 2.0])

    def test_rejects_length_mismatch(self):
        with pytest.raises(InputError):
            Curve([0.0, 1.0, 2.0], [1.0, 2.0])

    @pytest.mark.parametrize("grid", [[0.0, 2.0, 1.0], [0.0, 1.0, 1.0]])
    def test_rejects_nonincreasing(self, grid):
        with pytest.raises(InputError):
            Curve(grid, [1.0, 2.0, 3.0])

    def test_rejects_nonfinite(self):
        with pytest.raises(InputError):
            Curve([0.0, 1.0, 2.0], [1.0, np.nan, 3.0])

    def test_immutable(self):
        c = Curve.hourly([1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            c.values[0] = 5.0


class TestSecondDerivative:
    def test_constant(self, hourly_grid):
        d2 = second_derivative(Curve(hourly_grid, np.full(24, 5.0)))
        np.testing.assert_array_equal(d2.values, np.zeros(24))

    def test_affine(self, hourly_grid):
        d2 = second_derivative(Curve(hourly_grid, 3.0 - 0.7 * hourly_grid))
        np.testing.assert_allclose(d2.values, 0.0, atol=1e-12)

    def test_quadratic_five_points(self):
        # t^2 on 0..4: 0 1 4 9 16; second differences are 2 at every stencil
        d2 = second_derivative(Curve(np.arange(5.0), np.arange(5.0) ** 2))
        np.testing.assert_allclose(d2.values, [2.0] * 5)
        np.testing.assert_array_equal(d2.grid, np.arange(5.0))

    def test_quadratic_nonunit_step(self):
        grid = np.linspace(-1.0, 2.0, 13)
        d2 = second_derivative(Curve(grid, 4.0 * grid**2 - grid + 1))
        np.testing.assert_allclose(d2.values, 8.0, rtol=1e-10)

    def test_nonuniform_rejected(self):
        with pytest.raises(NonUniformGrid):
            second_derivative(Curve([0.0, 1.0, 3.0, 4.0], [0.0, 1.0, 2.0, 3.0]))


class TestDistance:
    def test_identity(self, rng, hourly_grid):
        c = Curve(hourly_grid, rng.standard_normal(24))
        assert distance(c, c, ORDER0) == 0.0
        assert distance(c, c, ORDER2) == 0.0

    def test_order2_constant_shift(self, rng, hourly_grid):
        a = Curve(hourly_grid, rng.standard_normal(24))
        assert distance(a, a + 3.0, ORDER2) == pytest.approx(0.0, abs=1e-9)

    def test_order0_unit_gap(self):
        grid = np.linspace(0.0, 1.0, 11)
        assert distance(Curve(grid, np.zeros(11)), Curve(grid, np.ones(11)), ORDER0) == pytest.approx(1.0)

    def test_order0_matches_trapezoid(self, rng):
        grid = np.sort(rng.uniform(0, 3, 9))
        a, b = Curve(grid, rng.standard_normal(9)), Curve(grid, rng.standard_normal(9))
        sq = (a.values - b.values) ** 2
        expected = np.sqrt(np.sum(0.5 * (sq[1:] + sq[:-1]) * np.diff(grid)))
        assert distance(a, b, ORDER0) == pytest.approx(expected, rel=1e-12)

    def test_grid_mismatch(self):
        a = Curve([0.0, 1.0, 2.0], [0.0, 0.0, 0.0])
        b = Curve([0.0, 1.0, 2.5], [0.0, 0.0, 0.0])
        with pytest.raises(GridMismatch):
            distance(a, b)

    def test_vectorized_agrees(self, rng, hourly_grid):
        data = [Curve(hourly_grid, rng.standard_normal(24)) for _ in range(6)]
        for spec in (ORDER0, ORDER2):
            d = pairwise_distances(data, spec)
            for i in range(6):
                np.testing.assert_allclose(distances_to(data[i], data, spec), d[i], atol=1e-12)
                for j in range(6):
                    assert d[i, j] == pytest.approx(distance(data[i], data[j], spec), abs=1e-12)

    def test_bad_order(self):
        with pytest.raises(InputError):
            SemiMetricSpec(1)

    @settings(max_examples=60, deadline=None)
    @given(curve_values, curve_values, curve_values, st.sampled_from([0, 2]))
    def test_semimetric_axioms(self, a, b, c, order):
        spec = SemiMetricSpec(order)
        a, b, c = (Curve(GRID12, v) for v in (a, b, c))
        ab, ba = distance(a, b, spec), distance(b, a, spec)
        assert ab == pytest.approx(ba, abs=1e-9)
        assert ab >= 0
        assert distance(a, a, spec) == 0
        assert distance(a, c, spec) <= ab + distance(b, c, spec) + 1e-9 * (1 + ab)

    @settings(max_examples=60, deadline=None)
    @given(curve_values, finite, finite)
    def test_order2_annihilates_affine(self, a, alpha, beta):
        a = Curve(GRID12, a)
        b = Curve(GRID12, a.values + alpha + beta * GRID12)
        scale = 1 + np.abs(a.values).max() + abs(alpha) + abs(beta) * GRID12[-1]
        assert distance(a, b, ORDER2) <= 1e-9 * scale


class TestSmallBall:
    def _setup(self):
        # curves 0.1, 0.2, 0.3, 0.4 away from x in the order-0 metric on [0, 1]
        grid = np.linspace(0.0, 1.0, 5)
        x = Curve(grid, np.zeros(5))
        data = [Curve(grid, np.full(5, r)) for r in (0.1, 0.2, 0.3, 0.4)]
        return x, data

    def test_count(self):
        x, data = self._setup()
        assert small_ball_cdf(x, data, ORDER0, 0.25) == 0.5

    def test_zero_radius(self):
        x, data = self._setup()
        assert small_ball_cdf(x, data, ORDER0, 0.0) == 0.0

    def test_full(self):
        x, data = self._setup()
        assert small_ball_cdf(x, data, ORDER0, 0.4 + 1e-12) == 1.0

    def test_empty(self):
        x, _ = self._setup()
        with pytest.raises(EmptyDataset):
            small_ball_cdf(x, [], ORDER0, 1.0)

    def test_step_function(self, rng, hourly_grid):
        data = [Curve(hourly_grid, rng.standard_normal(24)) for _ in range(13)]
        x = data[0]
        radii = np.sort(rng.uniform(0, 10, 200))
        values = [small_ball_cdf(x, data, ORDER2, u) for u in radii]
        assert np.all(np.diff(values) >= 0)
        assert np.allclose(np.array(values) * 13, np.round(np.array(values) * 13))


def test_csv_round_trip(tmp_path, rng, hourly_grid):
    curves = [Curve(hourly_grid, rng.standard_normal(24)) for _ in range(3)]
    path = tmp_path / "curves.csv"
    write_curves(path, ["a", "b", "c"], curves)
    ids, back = read_curves(path)
    assert ids == ["a", "b", "c"]
    for c, d in zip(curves, back):
        np.testing.assert_array_equal(c.values, d.values)
        np.testing.assert_array_equal(c.grid, d.grid)
