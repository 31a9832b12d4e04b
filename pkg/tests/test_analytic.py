import math

import numpy as np
import pytest

import analytic
from analytic import DomainError
from market_model import MarketParams


def test_accept_any_of_k():
    assert analytic.accept_any_of_k(0.05, 10) == pytest.approx(0.401263, abs=1e-6)
    assert analytic.accept_any_of_k(0.05, 0) == 0.0
    assert analytic.accept_any_of_k(0.05, 10, approximate=True) == pytest.approx(1 - math.exp(-0.5))


def test_profit_at_headline_optimum(headline_params):
    assert analytic.profit_uninformed(headline_params, 32) == pytest.approx(235.761, abs=1e-3)
    assert analytic.profit_uninformed(headline_params, 0) == 0.0


def test_profit_rejects_k_outside_range(headline_params):
    with pytest.raises(ValueError):
        analytic.profit_uninformed(headline_params, headline_params.N + 1)


def test_kopt_uninformed(headline_params):
    k_opt, X_opt = analytic.kopt_uninformed(headline_params)
    assert k_opt == pytest.approx(32.189, abs=1e-3)
    assert X_opt == pytest.approx(239.06, abs=1e-2)


@pytest.mark.parametrize('Z', [25.0, 26.0, 40.0])
def test_vendor_idles_above_mp(headline_params, Z):
    assert analytic.kopt_uninformed(headline_params.with_changes(Z=Z)) == (0.0, 0.0)


def test_zero_cost_caps_at_n(headline_params):
    k_opt, _ = analytic.kopt_uninformed(headline_params.with_changes(Z=0.0))
    assert k_opt == headline_params.N


def test_sequential_sales_decay_geometrically():
    assert analytic.sequential_sales(500, 0.05, 1) == pytest.approx(25.0)
    assert analytic.sequential_sales(500, 0.05, 3) == pytest.approx(25.0 * 0.95 ** 2)
    with pytest.raises(ValueError):
        analytic.sequential_sales(500, 0.05, 0)


def test_kopt_sequential():
    assert analytic.kopt_sequential(500, 0.05, 5.0) == pytest.approx(31.377, abs=1e-3)
    assert analytic.kopt_sequential(100_000, 0.05, 1000.0) == pytest.approx(31.377, abs=1e-3)
    with pytest.raises(ValueError):
        analytic.kopt_sequential(500, 0.05, 30.0)


def test_sequential_profit_gain():
    assert analytic.sequential_profit_gain(500, 2000, 0.05, 5.0) == pytest.approx(2.609, abs=1e-3)


def test_duopoly_profits_symmetric():
    X1, X2 = analytic.duopoly_profits(500, 0.05, 15, 15, 5.0, 5.0)
    assert X1 == pytest.approx(119.2175, abs=1e-3)
    assert X1 == pytest.approx(X2)
    assert analytic.duopoly_profits(500, 0.05, 0, 0, 5.0, 5.0) == (0.0, 0.0)


def test_duopoly_priceout():
    assert analytic.duopoly_priceout(500, 0.05, 5.0) == pytest.approx(12.43, abs=1e-2)
    with pytest.raises(ValueError):
        analytic.duopoly_priceout(500, 0.05, 25.0)


def test_most_probable_max_sale():
    assert analytic.most_probable_max_sale(500, 0.05, 2000) == pytest.approx(48.30, abs=0.02)


def test_informed_gain():
    assert analytic.informed_gain(500, 0.05, 2000) == pytest.approx(0.8145, abs=1e-4)


def test_asymptotic_formulas_flag_their_domain():
    with pytest.raises(DomainError):
        analytic.informed_gain(1, 0.05, 2)
    with pytest.raises(DomainError):
        analytic.most_probable_max_sale(2, 0.05, 2)


def test_extremal_density_integrates_to_one():
    assert analytic.extremal_density_mass(500, 0.05, 2000) == pytest.approx(1.0, abs=1e-5)


def test_exact_max_sale_law():
    pmf = analytic.exact_max_sale_pmf(500, 0.05, 2000)
    assert pmf.shape == (501,)
    assert pmf.sum() == pytest.approx(1.0)
    assert np.all(pmf >= 0.0)
    # the largest of N counts sits well above the single mean Mp
    assert analytic.exact_max_sale_mean(500, 0.05, 2000) > 40.0
    assert analytic.exact_max_sale_mean(500, 0.05, 1) == pytest.approx(25.0)


def test_information_useless_for_small_markets():
    left, right = analytic.informed_useless_condition(2000, 0.05, 10)
    assert left < right


def test_corr_accept_prob():
    assert analytic.corr_accept_prob(100, 2000, 0.05, 0.5) == pytest.approx(0.050476, abs=1e-6)
    # uncorrelated market accepts every variant with probability p
    assert analytic.corr_accept_prob(1500, 2000, 0.05, 0.0) == pytest.approx(0.05)
    assert analytic.corr_accept_prob(1, 2000, 0.05, 1.0) == 1.0
    assert analytic.corr_accept_prob(2000, 2000, 0.05, 1.0) == 0.0


def test_corr_accept_probs_mirror_for_negative_sign():
    positive = analytic.corr_accept_probs(2000, 2000, 0.05, 0.3)
    negative = analytic.corr_accept_probs(5, 2000, 0.05, 0.3, s=-1)
    np.testing.assert_allclose(negative, positive[::-1][:5])


def test_corr_deny_prob():
    exact = analytic.corr_deny_prob(40, 2000, 0.02, 0.2)
    approx = analytic.corr_deny_prob(40, 2000, 0.02, 0.2, approximate=True)
    assert 0.0 < exact < 1.0
    assert approx == pytest.approx(exact, rel=0.03)
    assert analytic.corr_deny_prob(0, 2000, 0.05, 0.2) == 1.0


def test_corr_sales_never_exceed_buyers():
    sale = analytic.corr_sale_probs(100, 2000, 0.05, 0.5)
    assert sale.sum() <= 1.0
    assert sale.sum() == pytest.approx(1.0 - analytic.corr_deny_prob(100, 2000, 0.05, 0.5))


def test_corr_profit_curve_matches_pointwise(headline_params):
    curve = analytic.corr_profit_curve(headline_params, 0.5, 60)
    assert curve[0] == 0.0
    for k in (1, 17, 60):
        assert curve[k] == pytest.approx(analytic.corr_expected_profit(headline_params, 0.5, k))
    mirrored = analytic.corr_profit_curve(headline_params, 0.1, 10, s=-1)
    assert mirrored[10] == pytest.approx(analytic.corr_expected_profit(headline_params, 0.1, 10, s=-1))


def test_uncorrelated_grid_matches_simple_profit():
    params = MarketParams(M=500, N=2000, p=0.05, Z=5.0)
    grid = analytic.corr_expected_profit(params, 0.0, 30)
    simple = params.M * analytic.accept_any_of_k(0.05, 30) * (1.0 - 29 / (2.0 * 1999)) - 30 * params.Z
    assert grid == pytest.approx(simple)


def test_alpha_min():
    assert analytic.alpha_min(2000, 0.05, 0.5) == 1801
    assert analytic.alpha_min(2000, 0.05, 0.1) == 1001
    assert analytic.alpha_min(2000, 0.05, 0.05) == 1
    with pytest.raises(ValueError):
        analytic.alpha_min(2000, 0.05, 0.0)


def test_matching_means():
    mean_b, mean_y, mean_x = analytic.matching_means(1000, 5, 10)
    assert mean_b == pytest.approx(579.32, abs=0.05)
    assert mean_y == pytest.approx(0.0055)
    assert mean_x == pytest.approx(0.34759, abs=1e-5)


def test_matching_density_mass_is_close_to_one():
    assert analytic.matching_b_mass(1000, 5, 10) == pytest.approx(1.0, abs=0.05)


@pytest.mark.parametrize('N, d', [(2, 1), (10, 3), (1000, 10)])
def test_multi_variant_mean(N, d):
    pmf, mean = analytic.multi_variant_b(N, d)
    assert pmf.sum() == pytest.approx(1.0)
    assert mean == pytest.approx((N + 1) / (d + 1))


def test_multi_variant_pair():
    pmf, mean = analytic.multi_variant_b(2, 1)
    np.testing.assert_allclose(pmf, [0.5, 0.5])
    assert mean == 1.5
