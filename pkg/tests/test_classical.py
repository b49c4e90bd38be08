import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zipfest.classical import (
    CLAUSET_BRACKET,
    HANEL_BRACKET,
    Method,
    clauset_mle,
    hanel_mle,
    leading_term_loglik,
)
from zipfest.errors import DegenerateInput, DomainError
from zipfest.models import CountVector, ZipfModel, sample_counts
from zipfest.special import UNBOUNDED

FIG4 = CountVector([10, 3, 3, 2, 1, 1])

count_vectors = st.lists(st.integers(1, 500), min_size=2, max_size=40).map(
    lambda xs: CountVector(sorted(xs, reverse=True))
)


def test_loglik_single_event():
    for lam in (0.3, 1.0, 2.7):
        assert leading_term_loglik(lam, CountVector([17]), 1) == 0.0


def test_loglik_hand_value():
    expected = 2 * math.log(2 / 3) + math.log(1 / 3)
    assert leading_term_loglik(1.0, CountVector([2, 1]), 2) == pytest.approx(expected, rel=1e-14)


def test_loglik_domain():
    with pytest.raises(DomainError):
        leading_term_loglik(1.0, FIG4, UNBOUNDED)
    with pytest.raises(DomainError):
        leading_term_loglik(1.2, FIG4, 5)


def test_hanel_figure_value():
    res = hanel_mle(FIG4, 6)
    assert res.lambda_hat == pytest.approx(1.27, abs=0.01)
    assert res.method is Method.HANEL
    f = lambda lam: leading_term_loglik(lam, FIG4, 6)
    assert f(res.lambda_hat) >= max(f(res.lambda_hat - 1e-3), f(res.lambda_hat + 1e-3))


def test_hanel_uniform_hits_lower_edge():
    res = hanel_mle(CountVector([5, 5]), 2)
    assert res.lambda_hat == pytest.approx(HANEL_BRACKET[0], abs=1e-5)
    assert res.diagnostics["at_bracket_edge"]


def test_hanel_harmonic_counts_dense_grid():
    counts = CountVector([100, 50, 33, 25])
    res = hanel_mle(counts, 4)
    grid = np.linspace(*HANEL_BRACKET, 60_001)
    ll = [leading_term_loglik(x, counts, 4) for x in grid]
    best = grid[int(np.argmax(ll))]
    assert res.lambda_hat == pytest.approx(best, abs=grid[1] - grid[0])
    assert res.lambda_hat == pytest.approx(1.0, abs=0.01)


def test_hanel_single_space_is_flat():
    res = hanel_mle(CountVector([9]), 1)
    assert res.diagnostics["flat"]
    assert res.lambda_hat == HANEL_BRACKET[0]


def test_hanel_errors():
    with pytest.raises(DomainError):
        hanel_mle(FIG4, 5)
    with pytest.raises(DomainError):
        hanel_mle(FIG4, UNBOUNDED)


def test_clauset_degenerate():
    with pytest.raises(DegenerateInput):
        clauset_mle(CountVector([40]))


def test_clauset_recovers_steep_exponent():
    counts = sample_counts(ZipfModel(1.8), 10**4, 31)
    res = clauset_mle(counts)
    assert abs(res.lambda_hat - 1.8) < 0.05
    assert CLAUSET_BRACKET[0] <= res.lambda_hat <= CLAUSET_BRACKET[1]


def test_clauset_positive_bias_shallow_exponent():
    estimates = [clauset_mle(sample_counts(ZipfModel(1.1), 10**5, s)).lambda_hat for s in range(20)]
    assert np.mean(estimates) - 1.1 > 0.05


@settings(max_examples=30, deadline=None)
@given(counts=count_vectors, k=st.integers(2, 9))
def test_scale_covariance(counts, k):
    scaled = CountVector(counts.counts * k)
    a = clauset_mle(counts).lambda_hat
    b = clauset_mle(scaled).lambda_hat
    assert b == pytest.approx(a, abs=1e-5)


@settings(max_examples=30, deadline=None)
@given(counts=count_vectors, extra=st.integers(0, 50))
def test_unimodal_on_bracket(counts, extra):
    w = counts.w_obs + extra
    grid = np.linspace(*HANEL_BRACKET, 400)
    ll = np.array([leading_term_loglik(x, counts, w) for x in grid])
    steps = np.sign(np.diff(ll))
    steps = steps[steps != 0]
    # increasing then decreasing: at most one sign change from + to -
    assert np.count_nonzero(np.diff(steps) != 0) <= 1
    if steps.size and np.any(np.diff(steps) != 0):
        assert steps[0] > 0


def test_hanel_converges_to_clauset():
    counts = sample_counts(ZipfModel(1.5), 2000, 4)
    c = clauset_mle(counts).lambda_hat
    h = hanel_mle(counts, 10**7).lambda_hat
    assert c > 1.1
    assert abs(h - c) < 1e-3


def test_result_json():
    res = hanel_mle(FIG4, 6)
    d = json.loads(res.to_json())
    assert d["method"] == "hanel"
    assert d["lambda_hat"] == res.lambda_hat
    assert {"loglik", "evaluations", "tolerance"} <= set(d["diagnostics"])
