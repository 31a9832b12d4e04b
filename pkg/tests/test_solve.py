import math

import numpy as np
import pytest

import analytic
import solve
from market_model import MarketParams

M, P = 500, 0.05


def test_argmax_prefers_smaller_k_on_ties():
    assert solve.argmax_k(lambda k: 1.0 if k in (2, 4) else 0.0, 6) == (2, 1.0)


def test_argmax_rejects_undefined_objective():
    with pytest.raises(ValueError, match="undefined"):
        solve.argmax_k(lambda k: math.nan if k == 3 else 0.0, 5)
    with pytest.raises(ValueError):
        solve.argmax_k(lambda k: 0.0, -1)


def test_integer_optimum_headline(headline_params):
    k_star, X_star = solve.optimal_uninformed(headline_params, 200)
    assert k_star == 32
    assert X_star == pytest.approx(235.761, abs=1e-3)


def test_integer_optimum_idle(headline_params):
    assert solve.optimal_uninformed(headline_params.with_changes(Z=30.0), 50) == (0, 0.0)


def test_integer_optimum_near_closed_form(headline_params):
    for Z in (2.0, 5.0, 10.0, 20.0):
        market = headline_params.with_changes(Z=Z)
        k_formula, _ = analytic.kopt_uninformed(market)
        k_star, _ = solve.optimal_uninformed(market)
        assert abs(k_star - k_formula) <= 2.0


def test_correlated_optimum_agrees_with_curve(headline_params):
    k_star, X_star = solve.optimal_correlated(headline_params, 0.5, 200)
    curve = analytic.corr_profit_curve(headline_params, 0.5, 200)
    assert X_star == pytest.approx(curve.max())
    assert k_star == int(np.argmax(curve))


def test_perfect_correlation_offers_one_variant(headline_params):
    k_star, _ = solve.optimal_correlated(headline_params, 1.0, 50)
    assert k_star == 1


def test_best_response_to_absent_rival_is_monopoly():
    k_br, X_br = solve.best_response(M, P, 5.0, 0)
    assert (k_br, X_br) == pytest.approx(solve.monopoly_optimum(M, P, 5.0))


def test_best_response_is_zero_when_too_expensive():
    assert solve.best_response(M, P, 30.0, 10)[0] == 0


def test_symmetric_equilibrium():
    eq = solve.duopoly_equilibrium(M, P, 5.0, 5.0)
    assert eq.converged
    assert eq.k1 == eq.k2
    assert eq.cycle is None
    assert solve.verify_equilibrium(M, P, 5.0, 5.0, eq.k1, eq.k2)
    assert eq.as_tuple()[:2] == (eq.k1, eq.k2)


def test_non_equilibrium_is_detected():
    eq = solve.duopoly_equilibrium(M, P, 5.0, 5.0)
    assert not solve.verify_equilibrium(M, P, 5.0, 5.0, eq.k1 + 10, eq.k2)


def test_equilibrium_requires_positive_costs():
    with pytest.raises(ValueError):
        solve.duopoly_equilibrium(M, P, 0.0, 5.0)


def test_competition_never_beats_the_cheaper_monopolist():
    for Z1 in (2.0, 5.0, 8.0):
        for Z2 in (2.0, 5.0, 8.0):
            eq = solve.duopoly_equilibrium(M, P, Z1, Z2)
            _, monopoly = solve.monopoly_optimum(M, P, min(Z1, Z2))
            assert eq.total_profit <= monopoly + 1e-9


def test_priced_out_rival():
    eq = solve.duopoly_equilibrium(M, P, 5.0, 1e9)
    assert eq.k2 == 0
    assert eq.k1 == solve.monopoly_optimum(M, P, 5.0)[0]


def test_priceout_sweep_brackets_threshold():
    grid = np.arange(1.0, 20.0 + 1e-9, 0.5)
    sweep = solve.priceout_sweep(M, P, 5.0, grid)
    assert sweep.analytic_threshold == pytest.approx(12.43, abs=0.01)
    assert sweep.exit_bracket is not None
    assert sweep.bracket_contains(sweep.analytic_threshold, tolerance=1.0)
    low, high = sweep.exit_bracket
    assert high - low == 0.5
    assert len(sweep.rows) == len(grid)


def test_priceout_without_exit():
    sweep = solve.priceout_sweep(M, P, 5.0, [1.0, 2.0, 3.0])
    assert sweep.exit_bracket is None
    assert not sweep.bracket_contains(2.0)


def test_k_max_caps_the_search():
    params = MarketParams(Z=0.001)
    k_star, _ = solve.optimal_uninformed(params, 40)
    assert k_star == 40
