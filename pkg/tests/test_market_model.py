import numpy as np
import pytest
from scipy import integrate

from market_model import (AcceptanceFunction, CostMatrix, MarketParams, accept, profit, realization_rng,
                          sale_outcome, sample_uncorrelated, sorted_distinct)


def test_headline_defaults():
    params = MarketParams()
    assert (params.M, params.N, params.p, params.Z) == (500, 2000, 0.05, 5.0)
    assert params.price == 1.0


@pytest.mark.parametrize('changes', [{'M': 0}, {'N': 0}, {'p': 0.0}, {'p': 0.5}, {'Z': -1.0}, {'M': 2.5}])
def test_invalid_params_rejected(changes):
    with pytest.raises(ValueError):
        MarketParams().with_changes(**changes)


def test_with_changes_keeps_other_fields():
    params = MarketParams().with_changes(Z=2.0)
    assert params.Z == 2.0
    assert params.M == 500


def test_linear_acceptance_values():
    f = AcceptanceFunction.linear(0.05)
    assert f(0.0) == 1.0
    assert f(0.05) == pytest.approx(0.5)
    assert f(0.1) == 0.0
    assert f(0.7) == 0.0


def test_step_acceptance_is_deterministic():
    f = AcceptanceFunction.step(0.05)
    assert accept(f, 0.049, 0.999)
    assert not accept(f, 0.05, 0.0)


def test_constant_acceptance_ignores_cost():
    f = AcceptanceFunction.constant(0.3)
    np.testing.assert_allclose(f(np.array([0.0, 0.5, 1.0])), 0.3)
    assert f.mean_acceptance() == 0.3


def test_mean_acceptance_integrates_to_p():
    for f in (AcceptanceFunction.linear(0.05), AcceptanceFunction.step(0.05)):
        xs = np.linspace(0.0, 1.0, 200_001)
        assert integrate.trapezoid(f(xs), xs) == pytest.approx(0.05, rel=1e-3)
        assert f.mean_acceptance() == 0.05


def test_unknown_acceptance_kind():
    with pytest.raises(ValueError, match="Unknown acceptance"):
        AcceptanceFunction('quadratic', 0.05)


def test_accept_checks_ranges():
    f = AcceptanceFunction.linear(0.05)
    with pytest.raises(ValueError):
        accept(f, 1.5, 0.1)
    with pytest.raises(ValueError):
        accept(f, 0.1, 1.0)


def test_profit_of_idle_vendor_is_zero():
    assert profit([], [0.1, 0.2], 0, 5.0) == 0.0


def test_profit_sums_margins_minus_costs():
    assert profit([10, 5], [0.1, 0.2, 0.9], 2, 1.0) == pytest.approx(10 * 0.9 + 5 * 0.8 - 2.0)


def test_profit_shape_mismatch():
    with pytest.raises(ValueError):
        profit([1, 2, 3], [0.1, 0.2, 0.3], 2, 0.0)


def test_sale_outcome_rejects_double_purchases():
    with pytest.raises(ValueError, match="sold to only"):
        sale_outcome([3, 3], [0.1, 0.2], 0.0, M=5)
    outcome = sale_outcome([3, 2], [0.1, 0.2], 0.0, M=5)
    assert outcome.total_sale == 5
    assert outcome.k == 2


def test_cost_matrix_requires_ascending_vendor_costs():
    with pytest.raises(ValueError, match="ascending"):
        CostMatrix(x=np.zeros((2, 2)), y=np.array([0.5, 0.2]))


def test_sample_uncorrelated_is_reproducible():
    params = MarketParams(M=20, N=50)
    a = sample_uncorrelated(params, 42)
    b = sample_uncorrelated(params, 42)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.y, b.y)
    assert a.x.shape == (20, 50)
    assert np.all(np.diff(a.y) > 0)


def test_sample_uncorrelated_partial_columns():
    market = sample_uncorrelated(MarketParams(M=10, N=100), 1, columns=7)
    assert market.x.shape == (10, 7)
    assert market.N == 100


def test_sorted_distinct_redraws_ties():
    rng = np.random.default_rng(3)
    values = sorted_distinct(np.array([0.3, 0.3, 0.1, 0.1]), rng)
    assert np.all(np.diff(values) > 0)


def test_realization_streams_are_independent_of_order():
    first = realization_rng(7, 3).random(5)
    realization_rng(7, 0).random(100)
    again = realization_rng(7, 3).random(5)
    np.testing.assert_array_equal(first, again)
    assert not np.array_equal(first, realization_rng(7, 4).random(5))


@pytest.mark.parametrize('p', [0.75, 2.0])
def test_mean_acceptance_of_wide_linear_ramp(p):
    f = AcceptanceFunction.linear(p)
    xs = np.linspace(0.0, 1.0, 200_001)
    assert f.mean_acceptance() == pytest.approx(1.0 - 1.0 / (4.0 * p))
    assert f.mean_acceptance() == pytest.approx(integrate.trapezoid(f(xs), xs), rel=1e-6)


def test_accept_frequency_of_linear_rule():
    f = AcceptanceFunction.linear(0.05)
    rng = np.random.default_rng(17)
    trials = 100_000
    accepted = sum(accept(f, x, u) for x, u in zip(rng.random(trials), rng.random(trials)))
    se = np.sqrt(0.05 * 0.95 / trials)
    assert abs(accepted / trials - 0.05) <= 4.0 * se


def test_mean_vendor_cost_by_rank():
    params = MarketParams(M=1, N=20)
    draws = np.array([sample_uncorrelated(params, seed, columns=0).y for seed in range(2000)])
    alpha = np.arange(1, params.N + 1)
    se = draws.std(axis=0, ddof=1) / np.sqrt(draws.shape[0])
    assert np.max(np.abs(draws.mean(axis=0) - alpha / (params.N + 1)) / se) <= 4.0


def test_profit_is_linear_in_counts():
    y = [0.1, 0.4, 0.7]
    first, second = np.array([3.0, 1.0, 2.0]), np.array([0.0, 5.0, 1.0])
    combined = profit(first + second, y, 3, 2.0)
    assert combined == pytest.approx(profit(first, y, 3, 2.0) + profit(second, y, 3, 2.0) + 3 * 2.0)
    assert profit([1.0, 0.0, 0.0], y, 3, 2.0) - profit([0.0, 0.0, 0.0], y, 3, 2.0) == pytest.approx(0.9)
