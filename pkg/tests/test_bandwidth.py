import numpy as np
import pytest

from fquant.bandwidth import check_loss, loo_scores, parse_k_grid, response_bandwidth, select_bandwidth
from fquant.errors import AllFoldsEmpty, InputError, InsufficientData
from fquant.estimator import QuantileModel
from fquant.simulate import SimModel, generate

GRID_K = [2, 3, 4, 5, 8, 12, 16, 24, 32, 48, 64, 96]


@pytest.fixture(scope="module")
def sample():
    return generate(SimModel(noise_scale=1e-3, seed=7), 200)


def test_check_loss():
    np.testing.assert_allclose(check_loss([2.0, -2.0, 0.0], 0.25), [0.5, 1.5, 0.0])


def test_response_bandwidth():
    y = np.array([1.0, 2.0, 3.0, 100.0])
    delta = np.array([1, 1, 1, 0])
    assert response_bandwidth(y, delta, 2) == pytest.approx(1.0 * 0.5**0.2)


@pytest.mark.parametrize("text, grid", [("5:20:5", [5, 10, 15, 20]), ("3,2,9", [2, 3, 9]), ("4:4:1", [4])])
def test_parse_k_grid(text, grid):
    assert parse_k_grid(text) == grid


@pytest.mark.parametrize("text", ["1:5:1", "a,b", "5:1:0", ""])
def test_parse_k_grid_rejects(text):
    with pytest.raises(InputError):
        parse_k_grid(text)


def test_single_candidate(sample):
    n = len(sample)
    sel = select_bandwidth(sample.curves, sample.y, sample.delta, k_grid=[n - 1])
    assert sel.k == n - 1
    assert np.isfinite(sel.cv_score)


def test_noiseless_regression(sample):
    # a near-deterministic response favours the smallest usable neighbourhood
    sel = select_bandwidth(sample.curves, sample.y, sample.delta, 0.5, GRID_K)
    assert sel.k == 3
    assert sel.scores[1] == min(sel.scores)


def test_score_matches_direct_loo(sample):
    # brute-force leave-one-out with the full-sample censoring weights
    n = 60
    curves, y, delta = sample.curves[:n], sample.y[:n], sample.delta[:n]
    k = 8
    score = loo_scores(curves, y, delta, 0.5, [k])[0]
    h_H = response_bandwidth(y, delta, k)
    full = QuantileModel(curves, y, delta, knn=1, h_H=h_H)
    total = 0.0
    for i in range(n):
        rest = np.arange(n) != i
        d = full.distances(curves[i])[rest]
        h = np.sort(d)[k - 1]
        w = 1.5 * np.clip(1 - (d / h) ** 2, 0, None) * (d <= h)
        coef = w / w.sum() * full.censor_weights[rest]
        lo, hi = y.min() - h_H, y.max() + h_H
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            u = np.clip((mid - y[rest]) / h_H, -1, 1)
            if np.sum(coef * (0.5 + 0.75 * u - 0.25 * u**3)) >= 0.5:
                hi = mid
            else:
                lo = mid
        total += full.censor_weights[i] * check_loss(y[i] - hi, 0.5)
    assert score == pytest.approx(total, rel=1e-4)


def test_fully_censored(sample):
    with pytest.raises(AllFoldsEmpty):
        select_bandwidth(sample.curves, sample.y, np.zeros(len(sample), bool), k_grid=[5])


def test_insufficient(sample):
    with pytest.raises(InsufficientData):
        select_bandwidth(sample.curves[:10], sample.y[:10], sample.delta[:10], k_grid=[5, 10])


def test_permutation_invariant(sample):
    data = generate(SimModel(censor_rate_target=0.3, seed=3), 150)
    base = select_bandwidth(data.curves, data.y, data.delta, 0.5, GRID_K[:8])
    p = np.random.default_rng(0).permutation(150)
    perm = select_bandwidth(data.curves[p], data.y[p], data.delta[p], 0.5, GRID_K[:8])
    assert perm.k == base.k
    np.testing.assert_allclose(perm.scores, base.scores, rtol=1e-9)


@pytest.mark.parametrize("c", [0.01, 3.0, 250.0])
def test_scale_invariant(c):
    data = generate(SimModel(censor_rate_target=0.3, seed=5), 150)
    base = select_bandwidth(data.curves, data.y, data.delta, 0.5, GRID_K[:8])
    scaled_y = select_bandwidth(data.curves, c * data.y, data.delta, 0.5, GRID_K[:8])
    scaled_x = select_bandwidth(c * data.curves, data.y, data.delta, 0.5, GRID_K[:8])
    assert scaled_y.k == scaled_x.k == base.k
    assert scaled_y.h_H == pytest.approx(c * base.h_H)
    np.testing.assert_allclose(scaled_y.scores, c * np.array(base.scores), rtol=1e-6)


def test_fit_uses_knn(sample):
    sel = select_bandwidth(sample.curves, sample.y, sample.delta, 0.5, [5, 10])
    model = sel.fit(sample.curves, sample.y, sample.delta)
    d = model.distances(sample.curves[0])
    assert model.bandwidth_at(distances=d) == sel.h_K_for(d)
    assert model.h_H == sel.h_H
