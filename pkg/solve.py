"""
Solve - Integer product-line optimization and the duopoly best-response fixed point
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

import analytic
from market_model import MarketParams

logger = logging.getLogger(__name__)

DEFAULT_K_MAX = MarketParams().N
MAX_SWEEPS = 10_000


def argmax_k(objective: Callable[[int], float], k_max: int) -> Tuple[int, float]:
    """Exhaustive integer scan over 0..k_max; ties go to the smaller k"""
    if k_max < 0:
        raise ValueError(f"k_max must be non-negative, got {k_max}")
    values = np.array([objective(k) for k in range(int(k_max) + 1)], dtype=float)
    if np.isnan(values).any():
        raise ValueError(f"objective is undefined at k = {int(np.flatnonzero(np.isnan(values))[0])}")
    k_star = int(np.argmax(values))
    return k_star, float(values[k_star])


def optimal_uninformed(params: MarketParams, k_max: Optional[int] = None) -> Tuple[int, float]:
    """Integer optimum of the expected uninformed profit"""
    k_max = params.N if k_max is None else k_max
    return argmax_k(lambda k: analytic.profit_uninformed(params, k), k_max)


def optimal_correlated(params: MarketParams, t: float, k_max: Optional[int] = None, s: int = 1) -> Tuple[int, float]:
    """Integer optimum of the expected profit in the correlated market"""
    k_max = params.N if k_max is None else k_max
    curve = analytic.corr_profit_curve(params, t, k_max, s)
    return argmax_k(lambda k: float(curve[k]), k_max)


def _duopoly_payoffs(M: int, p: float, Z: float, other: int, k_max: int) -> np.ndarray:
    """Own expected profit for every own k in 0..k_max against a fixed rival offer"""
    ks = np.arange(k_max + 1, dtype=float)
    total = ks + other
    market = M * -np.expm1(-p * total)
    share = np.divide(ks, total, out=np.zeros_like(ks), where=total > 0)
    return market * share - ks * Z


def best_response(M: int, p: float, Z: float, other: int, k_max: int = DEFAULT_K_MAX) -> Tuple[int, float]:
    """Profit-maximizing own variant count given the rival's count"""
    if k_max < 0:
        raise ValueError(f"k_max must be non-negative, got {k_max}")
    payoffs = _duopoly_payoffs(M, p, Z, other, k_max)
    k_star = int(np.argmax(payoffs))
    return k_star, float(payoffs[k_star])


@dataclass(frozen=True)
class Equilibrium:
    """Outcome of the alternating best-response iteration"""
    k1: int
    k2: int
    X1: float
    X2: float
    converged: bool
    sweeps: int
    cycle: Optional[Tuple[Tuple[int, int], Tuple[int, int]]] = None

    def as_tuple(self) -> Tuple[int, int, float, float]:
        return self.k1, self.k2, self.X1, self.X2

    @property
    def total_profit(self) -> float:
        return self.X1 + self.X2


def duopoly_equilibrium(M: int, p: float, Z1: float, Z2: float, k_max: int = DEFAULT_K_MAX,
                        max_sweeps: int = MAX_SWEEPS) -> Equilibrium:
    """Alternate integer best responses from (1, 1) until neither vendor moves

    A revisited state without a fixed point is reported as a 2-cycle.
    """
    if Z1 <= 0 or Z2 <= 0:
        raise ValueError(f"initial costs must be positive, got Z1={Z1}, Z2={Z2}")
    k1, k2 = 1, 1
    seen = {}
    for sweep in range(1, max_sweeps + 1):
        new_k1, _ = best_response(M, p, Z1, k2, k_max)
        new_k2, _ = best_response(M, p, Z2, new_k1, k_max)
        if (new_k1, new_k2) == (k1, k2):
            X1, X2 = analytic.duopoly_profits(M, p, k1, k2, Z1, Z2)
            logger.debug("Best responses settled at (%d, %d) after %d sweeps", k1, k2, sweep)
            return Equilibrium(k1, k2, X1, X2, converged=True, sweeps=sweep)
        if (new_k1, new_k2) in seen:
            logger.warning("Best responses cycle between %s and %s", (k1, k2), (new_k1, new_k2))
            X1, X2 = analytic.duopoly_profits(M, p, new_k1, new_k2, Z1, Z2)
            return Equilibrium(new_k1, new_k2, X1, X2, converged=False, sweeps=sweep,
                               cycle=((k1, k2), (new_k1, new_k2)))
        seen[(k1, k2)] = sweep
        k1, k2 = new_k1, new_k2

    logger.warning("No fixed point after %d sweeps at Z1=%s, Z2=%s", max_sweeps, Z1, Z2)
    X1, X2 = analytic.duopoly_profits(M, p, k1, k2, Z1, Z2)
    return Equilibrium(k1, k2, X1, X2, converged=False, sweeps=max_sweeps)


def verify_equilibrium(M: int, p: float, Z1: float, Z2: float, k1: int, k2: int,
                       k_max: int = DEFAULT_K_MAX) -> bool:
    """Neither vendor gains by any unilateral change of k (full scans in both coordinates)"""
    X1, X2 = analytic.duopoly_profits(M, p, k1, k2, Z1, Z2)
    best_1 = _duopoly_payoffs(M, p, Z1, k2, k_max).max()
    best_2 = _duopoly_payoffs(M, p, Z2, k1, k_max).max()
    return X1 >= best_1 - 1e-9 * max(1.0, abs(best_1)) and X2 >= best_2 - 1e-9 * max(1.0, abs(best_2))


def monopoly_optimum(M: int, p: float, Z: float, k_max: int = DEFAULT_K_MAX) -> Tuple[int, float]:
    """Optimum of a single vendor facing the duopoly market alone"""
    return argmax_k(lambda k: analytic.duopoly_profits(M, p, k, 0, Z, Z)[0], k_max)


@dataclass(frozen=True)
class PriceoutSweep:
    Z2: float
    rows: List[Tuple[float, Equilibrium]]
    exit_bracket: Optional[Tuple[float, float]]
    analytic_threshold: float

    def bracket_contains(self, value: float, tolerance: float = 0.0) -> bool:
        if self.exit_bracket is None:
            return False
        low, high = self.exit_bracket
        return low - tolerance <= value <= high + tolerance


def priceout_sweep(M: int, p: float, Z2: float, Z1_grid: Sequence[float],
                   k_max: int = DEFAULT_K_MAX) -> PriceoutSweep:
    """Equilibria along an increasing Z1 grid and the interval where vendor 1 exits"""
    grid = sorted(float(z) for z in Z1_grid)
    rows = [(Z1, duopoly_equilibrium(M, p, Z1, Z2, k_max)) for Z1 in grid]
    bracket = None
    for (low, before), (high, after) in zip(rows, rows[1:]):
        if before.k1 > 0 and after.k1 == 0:
            bracket = (low, high)
            break
    try:
        threshold = analytic.duopoly_priceout(M, p, Z2)
    except ValueError:
        threshold = math.nan
    return PriceoutSweep(Z2=Z2, rows=rows, exit_bracket=bracket, analytic_threshold=threshold)
