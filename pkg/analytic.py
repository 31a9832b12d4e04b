"""
Analytic - Closed-form expectations of the heterogeneous-buyer market

Uninformed, sequential, duopoly and informed vendors in the uncorrelated market,
acceptance/denial/sale probabilities in the correlated (grid) market, and the
averages of the two matching models. All functions are pure.
"""

import logging
import math
from typing import Tuple

import numpy as np
from scipy import integrate, special, stats

from market_model import MarketParams

logger = logging.getLogger(__name__)


class DomainError(ValueError):
    """Asymptotic formula evaluated outside the regime where it holds"""


def accept_any_of_k(p: float, k: int, approximate: bool = False) -> float:
    """Probability that a buyer accepts at least one of k random offers"""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    if approximate:
        return -math.expm1(-p * k)
    return 1.0 - (1.0 - p) ** k


def profit_uninformed(params: MarketParams, k: float) -> float:
    """Expected profit X_U(k) of a vendor offering his k cheapest variants at once"""
    if not 0 <= k <= params.N:
        raise ValueError(f"k must lie in [0, {params.N}], got {k}")
    M, N, p, Z = params.M, params.N, params.p, params.Z
    return M * -math.expm1(-p * k) * (1.0 - (1.0 + k) / (2.0 * (N + 1))) - k * Z


def kopt_uninformed(params: MarketParams) -> Tuple[float, float]:
    """Real-valued optimal k and profit for the uninformed vendor; (0, 0) when idle

    The large-N solution is capped at N; the cap is logged.
    """
    M, p, Z = params.M, params.p, params.Z
    if Z >= M * p:
        return 0.0, 0.0
    if Z == 0:
        logger.warning("Z = 0: optimal k diverges, capping at N = %d", params.N)
        return float(params.N), profit_uninformed(params, params.N)
    k_opt = math.log(M * p / Z) / p
    if k_opt > params.N:
        logger.warning("k_opt = %.1f exceeds N = %d, capping", k_opt, params.N)
        return float(params.N), profit_uninformed(params, params.N)
    return k_opt, M - Z / p * (1.0 + math.log(M * p / Z))


def sequential_sales(M: int, p: float, alpha: int) -> float:
    """Expected sale of the alpha-th variant when variants are offered one after another"""
    if alpha < 1:
        raise ValueError(f"alpha must be at least 1, got {alpha}")
    return M * p * (1.0 - p) ** (alpha - 1)


def kopt_sequential(M: int, p: float, Z: float) -> float:
    """Approximate optimal number of variants under sequential offering"""
    if Z <= 0 or Z > M * p:
        raise ValueError(f"need 0 < Z <= Mp = {M * p}, got Z = {Z}")
    return math.log(Z / (M * p)) / math.log(1.0 - p)


def sequential_profit_gain(M: int, N: int, p: float, Z: float) -> float:
    """Approximate profit increase of sequential over simultaneous offering"""
    if Z <= 0 or Z >= M * p:
        raise ValueError(f"need 0 < Z < Mp = {M * p}, got Z = {Z}")
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    return Z * (1.0 + math.log(M * p / Z)) / (N * p * p)


def duopoly_profits(M: int, p: float, k1: float, k2: float, Z1: float, Z2: float) -> Tuple[float, float]:
    """Expected profits of two vendors offering disjoint sets of k1 and k2 variants"""
    if k1 < 0 or k2 < 0:
        raise ValueError("variant counts must be non-negative")
    total = k1 + k2
    if total == 0:
        return 0.0, 0.0
    market = M * -math.expm1(-p * total)
    return market * k1 / total - k1 * Z1, market * k2 / total - k2 * Z2


def duopoly_priceout(M: int, p: float, Z2: float) -> float:
    """Initial cost Z1* at which vendor 1 leaves the market against a competitor with Z2"""
    if not 0.0 < Z2 < M * p:
        raise ValueError(f"need 0 < Z2 < Mp = {M * p}, got {Z2}")
    mp = M * p
    return mp / math.log(mp / Z2) * (1.0 - Z2 / mp)


def _sale_sigma(M: int, p: float) -> float:
    variance = M * p * (1.0 - p)
    if variance <= 0:
        raise ValueError("sale variance Mp(1-p) must be positive")
    return math.sqrt(variance)


def extremal_density(m, M: int, p: float, N: int):
    """Density of the largest of N normal-approximated acceptor counts"""
    if M < 1 or N < 1:
        raise ValueError("M and N must be positive")
    sigma = _sale_sigma(M, p)
    z = (np.asarray(m, dtype=float) - M * p) / sigma
    log_density = math.log(N) + stats.norm.logpdf(z) - math.log(sigma) + (N - 1) * special.log_ndtr(z)
    density = np.exp(log_density)
    return density if density.ndim else float(density)


def extremal_density_mass(M: int, p: float, N: int) -> float:
    """Total mass of the extremal density (should be one)"""
    sigma = _sale_sigma(M, p)
    center = most_probable_max_sale(M, p, N) if sigma ** 3 * N / math.sqrt(2 * math.pi) > 1 else M * p
    inner = [center - 12 * sigma, center + 12 * sigma]
    mass, _ = integrate.quad(extremal_density, inner[0], inner[1], args=(M, p, N), limit=200,
                             points=[M * p, center], epsabs=1e-12, epsrel=1e-10)
    lower, _ = integrate.quad(extremal_density, -np.inf, inner[0], args=(M, p, N))
    upper, _ = integrate.quad(extremal_density, inner[1], np.inf, args=(M, p, N))
    return mass + lower + upper


def most_probable_max_sale(M: int, p: float, N: int) -> float:
    """Asymptotic mode of the largest acceptor count"""
    sigma = _sale_sigma(M, p)
    argument = sigma ** 3 * N / math.sqrt(2.0 * math.pi)
    if argument <= 1.0:
        raise DomainError(f"sigma^3 N / sqrt(2 pi) = {argument:.3g} <= 1: asymptotic regime not reached")
    return M * p + sigma * math.sqrt(2.0 * math.log(argument))


def informed_gain(M: int, p: float, N: int) -> float:
    """Relative sale growth of a vendor who offers the most accepted variant"""
    argument = p * M * N * N / (2.0 * math.pi)
    if argument <= 1.0:
        raise DomainError(f"pMN^2 / (2 pi) = {argument:.3g} <= 1: asymptotic regime not reached")
    return math.sqrt(math.log(argument) / (M * p))


def informed_useless_condition(M: int, p: float, N: int) -> Tuple[float, float]:
    """Both sides of N^2 << (2 pi / Mp) e^{Mp}; information is useless when the left is much smaller"""
    mp = M * p
    return float(N) ** 2, 2.0 * math.pi / mp * math.exp(mp)


def exact_max_sale_pmf(M: int, p: float, N: int) -> np.ndarray:
    """Exact pmf over m = 0..M of the largest of N iid Binomial(M, p) acceptor counts"""
    support = np.arange(M + 1)
    cdf = stats.binom.cdf(support, M, p)
    upper = np.power(cdf, N)
    lower = np.concatenate(([0.0], upper[:-1]))
    return upper - lower


def exact_max_sale_mean(M: int, p: float, N: int) -> float:
    pmf = exact_max_sale_pmf(M, p, N)
    return float(np.dot(np.arange(M + 1), pmf))


def _check_grid_market(alpha: int, N: int, p: float, t: float):
    if N < 2:
        raise ValueError("the grid market needs N >= 2")
    if not 1 <= alpha <= N:
        raise ValueError(f"alpha must lie in [1, {N}], got {alpha}")
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")


def corr_accept_prob(alpha: int, N: int, p: float, t: float, simplified: bool = False) -> float:
    """Probability that one buyer accepts variant alpha in the positively correlated grid market"""
    _check_grid_market(alpha, N, p, t)
    if t == 1.0:
        return 1.0 if (alpha - 1) / (N - 1) < p else 0.0
    position = alpha / N if simplified else (alpha - 1) / (N - 1)
    value = (p - t * position) / (1.0 - t)
    if value < 0.0 or value > 1.0:
        logger.debug("P_A(%d) = %.4g outside its branch, clamping", alpha, value)
    return min(1.0, max(0.0, value))


def corr_accept_probs(k: int, N: int, p: float, t: float, s: int = 1) -> np.ndarray:
    """Acceptance probabilities of the k cheapest variants; s = -1 mirrors the grid"""
    if s not in (1, -1):
        raise ValueError(f"sign s must be +1 or -1, got {s}")
    alphas = range(1, k + 1) if s == 1 else range(N, N - k, -1)
    return np.array([corr_accept_prob(alpha, N, p, t) for alpha in alphas])


def corr_deny_prob(k: int, N: int, p: float, t: float, approximate: bool = False) -> float:
    """Probability that one buyer refuses all of the k cheapest variants"""
    if not 0 <= k <= N:
        raise ValueError(f"k must lie in [0, {N}], got {k}")
    if k == 0:
        return 1.0
    if approximate and t < 1.0 and p / (1.0 - t) < 1.0:
        return math.exp(-p * k / (1.0 - t) + t * k * k / (2.0 * N * (1.0 - t + p)))
    if approximate:
        logger.debug("p/(1-t) >= 1: using the exact denial product")
    return float(np.prod(1.0 - corr_accept_probs(k, N, p, t)))


def corr_sale_probs(k: int, N: int, p: float, t: float, s: int = 1) -> np.ndarray:
    """Probability that one buyer buys variant alpha, for alpha = 1..k"""
    accept = corr_accept_probs(k, N, p, t, s)
    total = accept.sum()
    if total == 0.0:
        return np.zeros(k)
    return accept / total * (1.0 - float(np.prod(1.0 - accept)))


def corr_expected_profit(params: MarketParams, t: float, k: int, s: int = 1) -> float:
    """Expected profit of the vendor offering his k cheapest variants in the grid market"""
    if not 0 <= k <= params.N:
        raise ValueError(f"k must lie in [0, {params.N}], got {k}")
    if k == 0:
        return 0.0
    sale = corr_sale_probs(k, params.N, params.p, t, s)
    margin = 1.0 - np.arange(k) / (params.N - 1)
    return float(params.M * np.dot(sale, margin) - k * params.Z)


def corr_profit_curve(params: MarketParams, t: float, k_max: int, s: int = 1) -> np.ndarray:
    """corr_expected_profit for k = 0..k_max, computed incrementally"""
    k_max = min(int(k_max), params.N)
    accept = corr_accept_probs(k_max, params.N, params.p, t, s)
    margin = 1.0 - np.arange(k_max) / (params.N - 1)
    accept_sum = np.cumsum(accept)
    weighted = np.cumsum(accept * margin)
    deny = np.cumprod(1.0 - accept)
    with np.errstate(invalid='ignore', divide='ignore'):
        revenue = np.where(accept_sum > 0, weighted / accept_sum * (1.0 - deny), 0.0)
    ks = np.arange(1, k_max + 1)
    curve = params.M * revenue - ks * params.Z
    return np.concatenate(([0.0], curve))


def alpha_min(N: int, p: float, t: float) -> int:
    """Smallest variant index any buyer can accept in the anticorrelated grid market"""
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    if t <= p:
        return 1
    return int(math.ceil(1.0 + (N - 1) * (t - p) / t))


def matching_b_density(b, N: int, M: int, d: int):
    """Approximate probability that buyers must go down to depth b (single-variant matching)"""
    if M < 1 or d < 1:
        raise ValueError("M and d must be positive")
    b = np.asarray(b, dtype=float)
    density = (1.0 - ((b - 1.0) / N) ** M) ** d * M * (d / N) * (b / N) ** (M - 1)
    return density if density.ndim else float(density)


def matching_b_mass(N: int, M: int, d: int) -> float:
    """Sum of matching_b_density over b = 1..N; the form is approximate, so not exactly one"""
    return float(np.sum(matching_b_density(np.arange(1, N + 1), N, M, d)))


def matching_means(N: int, M: int, d: int) -> Tuple[float, float, float]:
    """Large-N means of the buyers' depth b, the vendor's cost y and a buyer's cost x"""
    if M < 1 or d < 1:
        raise ValueError("M and d must be positive")
    g = special.gamma(1.0 / M)
    scale = d ** (-1.0 / M)
    mean_b = N * g / M * scale
    mean_y = (1.0 + d) / (2.0 * N)
    mean_x = (M + 1) * g / (2.0 * M * M) * scale
    return mean_b, mean_y, mean_x


def multi_variant_b(N: int, d: int) -> Tuple[np.ndarray, float]:
    """Exact pmf of a buyer's best rank among d offered variants, and its mean

    pmf[b - 1] is P(b) for b = 1..N.
    """
    if not 1 <= d <= N:
        raise ValueError(f"need 1 <= d <= N, got d={d}, N={N}")
    pmf = np.zeros(N)
    survive = 1.0
    for b in range(1, N - d + 2):
        remaining = N - b + 1
        pmf[b - 1] = survive * d / remaining
        survive *= 1.0 - d / remaining
    mean = float(np.dot(np.arange(1, N + 1), pmf))
    return pmf, mean


def multi_variant_b_closed_form(N: int, d: int) -> float:
    """Closed form with the binomial correction term, kept for comparison with the exact mean"""
    return (N + 1) / (d + 1) - d / special.comb(N, d, exact=False)
