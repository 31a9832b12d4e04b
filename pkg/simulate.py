"""
Simulate - Monte Carlo engines for the market scenarios and the matching models

Every realization draws from its own generator derived from (master_seed, index),
so summaries are identical whatever the number of worker threads.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

import analytic
from correlation import SCHEME_B, SCHEME_C, draw_scheme
from market_model import (AcceptanceFunction, MarketParams, draw_uncorrelated, realization_rng,
                          sorted_distinct)
from solve import argmax_k

logger = logging.getLogger(__name__)

DEFAULT_REALIZATIONS = 1000
THREADS_ENV = 'HETMARKET_THREADS'
SEQUENTIAL_CHUNK = 64
INFORMED_CHUNK = 256


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo mean with its standard error (scalars or per-index arrays)"""
    mean: object
    se: object

    @classmethod
    def from_samples(cls, values) -> 'Estimate':
        values = np.asarray(values, dtype=float)
        count = values.shape[0]
        if count < 2:
            raise ValueError("a standard error needs at least two realizations")
        mean = values.mean(axis=0)
        se = values.std(axis=0, ddof=1) / np.sqrt(count)
        if mean.ndim == 0:
            return cls(float(mean), float(se))
        return cls(mean, se)


@dataclass
class RunSummary:
    """Per-scenario Monte Carlo output"""
    scenario: str
    params: Dict[str, object]
    realizations: int
    master_seed: int
    quantities: Dict[str, Estimate] = field(default_factory=dict)
    profiles: Dict[str, Estimate] = field(default_factory=dict)
    samples: Dict[str, np.ndarray] = field(default_factory=dict)

    def mean(self, name: str):
        return self._lookup(name).mean

    def se(self, name: str):
        return self._lookup(name).se

    def _lookup(self, name: str) -> Estimate:
        if name in self.quantities:
            return self.quantities[name]
        if name in self.profiles:
            return self.profiles[name]
        raise KeyError(f"{self.scenario} run has no quantity '{name}'")


def worker_count(requested: Optional[int] = None) -> int:
    """Threads to use: explicit request, else HETMARKET_THREADS, else all cores (0 = auto)"""
    if requested is None:
        raw = os.environ.get(THREADS_ENV, '0')
        try:
            requested = int(raw)
        except ValueError:
            logger.warning("Ignoring non-integer %s=%r", THREADS_ENV, raw)
            requested = 0
    if requested <= 0:
        return os.cpu_count() or 1
    return requested


def run_realizations(task: Callable[[np.random.Generator], dict], R: int, master_seed: int,
                     workers: Optional[int] = None) -> List[dict]:
    """Run task once per realization and return the results in realization order"""
    if R < 2:
        raise ValueError(f"need at least two realizations, got {R}")
    workers = min(worker_count(workers), R)

    def one(index: int) -> dict:
        return task(realization_rng(master_seed, index))

    if workers == 1:
        return [one(index) for index in range(R)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(R)))


def _collect(results: List[dict]) -> Dict[str, Estimate]:
    return {name: Estimate.from_samples([result[name] for result in results]) for name in results[0]}


def prefix_choices(x: np.ndarray, f: AcceptanceFunction, rng: np.random.Generator) -> np.ndarray:
    """Variant each buyer buys when offered the first k columns at once, for every k

    Entry [i, k-1] is the column buyer i picks among the accepted ones within the first k,
    or -1 when none is accepted. Acceptance is drawn once per (buyer, variant); the pick is
    uniform among accepted variants through independent random keys, and a prefix maximum
    of the keys makes the picks for all k consistent with one another.
    """
    accepted = f.accepts(x, rng.random(x.shape))
    keys = np.where(accepted, rng.random(x.shape), -1.0)
    running = np.maximum.accumulate(keys, axis=1)
    columns = np.broadcast_to(np.arange(x.shape[1]), x.shape)
    leader = np.where(accepted & (keys == running), columns, -1)
    return np.maximum.accumulate(leader, axis=1)


def _revenue_by_k(choices: np.ndarray, y: np.ndarray) -> np.ndarray:
    k_max = choices.shape[1]
    margin = 1.0 - y[:k_max]
    gain = np.where(choices >= 0, margin[np.clip(choices, 0, None)], 0.0)
    return gain.sum(axis=0)


def _sales(choices_at_k: np.ndarray, k: int) -> np.ndarray:
    return np.bincount(choices_at_k[choices_at_k >= 0], minlength=k)[:k]


def _check_k(k: int, N: int):
    if not 0 <= k <= N:
        raise ValueError(f"k must lie in [0, {N}], got {k}")


def _default_acceptance(params: MarketParams, acceptance: Optional[AcceptanceFunction]) -> AcceptanceFunction:
    return acceptance or AcceptanceFunction.linear(params.p)


def _fixed_k_task(params: MarketParams, k: int, draw: Callable[[np.random.Generator], tuple],
                  f: AcceptanceFunction) -> Callable[[np.random.Generator], dict]:
    def task(rng: np.random.Generator) -> dict:
        if k == 0:
            return {'profit': 0.0, 'total_sale': 0.0, 'coverage': 0.0, 'sale_per_variant': np.zeros(0)}
        x, y = draw(rng)
        last = prefix_choices(x, f, rng)[:, k - 1]
        sales = _sales(last, k)
        total = int(sales.sum())
        return {
            'profit': float(np.dot(sales, 1.0 - y[:k]) - k * params.Z),
            'total_sale': float(total),
            'coverage': total / params.M,
            'sale_per_variant': sales.astype(float),
        }
    return task


def _scan_task(params: MarketParams, k_max: int, draw: Callable[[np.random.Generator], tuple],
               f: AcceptanceFunction) -> Callable[[np.random.Generator], dict]:
    def task(rng: np.random.Generator) -> dict:
        x, y = draw(rng)
        revenue = _revenue_by_k(prefix_choices(x, f, rng), y)
        ks = np.arange(1, k_max + 1)
        return {'profit': np.concatenate(([0.0], revenue - ks * params.Z))}
    return task


def _split_fixed(results: List[dict]):
    quantities = _collect([{name: r[name] for name in ('profit', 'total_sale', 'coverage')} for r in results])
    profiles = _collect([{'sale_per_variant': r['sale_per_variant']} for r in results])
    return quantities, profiles


def _scan_summary(scenario: str, extras: dict, params: MarketParams, k_max: int, R: int, seed: int,
                  results: List[dict]) -> RunSummary:
    curve = _collect(results)['profit']
    k_star, value = argmax_k(lambda k: float(curve.mean[k]), k_max)
    summary = RunSummary(scenario, {**params.as_dict(), **extras, 'k_max': k_max}, R, seed)
    summary.profiles['profit'] = curve
    summary.quantities['k_opt'] = Estimate(float(k_star), 0.0)
    summary.quantities['X_opt'] = Estimate(value, float(curve.se[k_star]))
    return summary


def _uncorrelated_draw(params: MarketParams, columns: int):
    def draw(rng: np.random.Generator):
        market = draw_uncorrelated(params, rng, columns)
        return market.x, market.y
    return draw


def sim_uninformed(params: MarketParams, k: int, R: int = DEFAULT_REALIZATIONS, seed: int = 0,
                   acceptance: Optional[AcceptanceFunction] = None, workers: Optional[int] = None) -> RunSummary:
    """Vendor offers his k cheapest variants at once in the uncorrelated market"""
    _check_k(k, params.N)
    f = _default_acceptance(params, acceptance)
    task = _fixed_k_task(params, k, _uncorrelated_draw(params, k), f)
    quantities, profiles = _split_fixed(run_realizations(task, R, seed, workers))
    summary = RunSummary('uninformed', {**params.as_dict(), 'k': k, 'acceptance': f.kind}, R, seed)
    summary.quantities.update(quantities)
    summary.profiles.update(profiles)
    return summary


def scan_uninformed(params: MarketParams, k_max: int, R: int = DEFAULT_REALIZATIONS, seed: int = 0,
                    acceptance: Optional[AcceptanceFunction] = None, workers: Optional[int] = None) -> RunSummary:
    """Mean simulated profit for every k <= k_max (common random numbers) and its argmax"""
    _check_k(k_max, params.N)
    f = _default_acceptance(params, acceptance)
    task = _scan_task(params, k_max, _uncorrelated_draw(params, k_max), f)
    return _scan_summary('uninformed_scan', {'acceptance': f.kind}, params, k_max, R, seed,
                         run_realizations(task, R, seed, workers))


@dataclass(frozen=True)
class Stopping:
    """When a sequentially offering vendor stops: after a fixed k, or at the first unprofitable variant"""
    k: Optional[int] = None

    @classmethod
    def fixed_k(cls, k: int) -> 'Stopping':
        if k < 0:
            raise ValueError(f"k must be non-negative, got {k}")
        return cls(k)

    @classmethod
    def greedy(cls) -> 'Stopping':
        return cls(None)

    @property
    def is_greedy(self) -> bool:
        return self.k is None


def first_acceptances(M: int, horizon: int, f: AcceptanceFunction, rng: np.random.Generator,
                      stop: Optional[Callable[[np.ndarray, int], bool]] = None) -> np.ndarray:
    """Buyers per variant whose first accepted offer, in vendor order, is that variant

    Waiting buyers are exchangeable under iid costs, so each chunk of columns draws costs
    for the buyers still waiting only. stop(sales, filled) may end the walk early.
    """
    sales = np.zeros(horizon)
    waiting = M
    for start in range(0, horizon, SEQUENTIAL_CHUNK):
        if waiting == 0:
            break
        width = min(SEQUENTIAL_CHUNK, horizon - start)
        x = rng.random((waiting, width))
        accepted = f.accepts(x, rng.random(x.shape))
        served = accepted.any(axis=1)
        sales[start:start + width] = np.bincount(accepted[served].argmax(axis=1), minlength=width)
        waiting -= int(served.sum())
        if stop is not None and stop(sales, start + width):
            break
    return sales


def acceptor_counts(M: int, N: int, f: AcceptanceFunction, rng: np.random.Generator) -> np.ndarray:
    """Prospective acceptors of every variant over the full M x N cost matrix, by column chunks"""
    counts = np.empty(N)
    for start in range(0, N, INFORMED_CHUNK):
        width = min(INFORMED_CHUNK, N - start)
        x = rng.random((M, width))
        counts[start:start + width] = f.accepts(x, rng.random(x.shape)).sum(axis=0)
    return counts


def sim_sequential(params: MarketParams, stopping: Stopping, R: int = DEFAULT_REALIZATIONS, seed: int = 0,
                   acceptance: Optional[AcceptanceFunction] = None, workers: Optional[int] = None) -> RunSummary:
    """Variants offered one at a time in ascending vendor cost; refused buyers move on

    Every buyer decides on sampled costs and buys the first variant she accepts.
    The greedy rule keeps variant alpha only while n'_alpha (1 - y_alpha) >= Z.
    """
    f = _default_acceptance(params, acceptance)
    horizon = params.N if stopping.is_greedy else stopping.k
    _check_k(horizon, params.N)

    def task(rng: np.random.Generator) -> dict:
        y = sorted_distinct(rng.random(params.N), rng)
        margin = 1.0 - y[:horizon]
        stop = None
        if stopping.is_greedy:
            def stop(sales: np.ndarray, filled: int) -> bool:
                return bool(np.any(sales[:filled] * margin[:filled] < params.Z))
        sales = first_acceptances(params.M, horizon, f, rng, stop)
        if stopping.is_greedy:
            failing = np.flatnonzero(sales * margin < params.Z)
            k = int(failing[0]) if failing.size else horizon
        else:
            k = horizon
        result = {
            'k': float(k),
            'profit': float(np.dot(sales[:k], margin[:k]) - k * params.Z),
            'total_sale': float(sales[:k].sum()),
        }
        if not stopping.is_greedy:
            result['sale_per_variant'] = sales
        return result

    results = run_realizations(task, R, seed, workers)
    scalars = [{name: r[name] for name in ('k', 'profit', 'total_sale')} for r in results]
    label = 'greedy' if stopping.is_greedy else f'fixed_k={stopping.k}'
    summary = RunSummary('sequential', {**params.as_dict(), 'stopping': label, 'acceptance': f.kind}, R, seed)
    summary.quantities.update(_collect(scalars))
    if not stopping.is_greedy and horizon > 0:
        summary.profiles['sale_per_variant'] = Estimate.from_samples([r['sale_per_variant'] for r in results])
    return summary


def sim_duopoly(params: MarketParams, Z1: float, Z2: float, k1: int, k2: int, R: int = DEFAULT_REALIZATIONS,
                seed: int = 0, acceptance: Optional[AcceptanceFunction] = None,
                workers: Optional[int] = None) -> RunSummary:
    """Vendor 1 offers the k1 cheapest variants, vendor 2 the next k2; buyers see both at once"""
    if k1 < 0 or k2 < 0:
        raise ValueError("variant counts must be non-negative")
    if k1 + k2 > params.N:
        raise ValueError(f"k1 + k2 = {k1 + k2} exceeds N = {params.N}: offers would overlap")
    f = _default_acceptance(params, acceptance)
    k = k1 + k2
    draw = _uncorrelated_draw(params, k)

    def task(rng: np.random.Generator) -> dict:
        if k == 0:
            return {'profit_1': 0.0, 'profit_2': 0.0, 'sale_1': 0.0, 'sale_2': 0.0, 'share_1': 0.0}
        x, y = draw(rng)
        sales = _sales(prefix_choices(x, f, rng)[:, k - 1], k)
        margin = sales * (1.0 - y[:k])
        sale_1, sale_2 = float(sales[:k1].sum()), float(sales[k1:].sum())
        total = sale_1 + sale_2
        return {
            'profit_1': float(margin[:k1].sum() - k1 * Z1),
            'profit_2': float(margin[k1:].sum() - k2 * Z2),
            'sale_1': sale_1,
            'sale_2': sale_2,
            'share_1': sale_1 / total if total else k1 / k,
        }

    summary = RunSummary('duopoly', {**params.as_dict(), 'Z1': Z1, 'Z2': Z2, 'k1': k1, 'k2': k2}, R, seed)
    summary.quantities.update(_collect(run_realizations(task, R, seed, workers)))
    return summary


def sim_informed_max(params: MarketParams, R: int = DEFAULT_REALIZATIONS, seed: int = 0,
                     acceptance: Optional[AcceptanceFunction] = None, workers: Optional[int] = None) -> RunSummary:
    """Largest number of prospective acceptors over all N variants

    Every buyer decides on every variant; delta is measured against the mean sale M q.
    """
    f = _default_acceptance(params, acceptance)
    mean_sale = params.M * f.mean_acceptance()

    def task(rng: np.random.Generator) -> dict:
        m = float(acceptor_counts(params.M, params.N, f, rng).max())
        return {'m': m, 'delta': (m - mean_sale) / mean_sale if mean_sale else np.nan}

    results = run_realizations(task, R, seed, workers)
    maxima = np.array([r['m'] for r in results])
    values, counts = np.unique(maxima, return_counts=True)
    summary = RunSummary('informed', {**params.as_dict(), 'acceptance': f.kind}, R, seed)
    summary.quantities.update(_collect(results))
    summary.quantities['mode'] = Estimate(float(values[np.argmax(counts)]), 0.0)
    summary.samples['m'] = maxima
    return summary


def _correlated_draw(params: MarketParams, scheme: str, t: float, s: int, columns: int):
    if scheme not in (SCHEME_B, SCHEME_C):
        raise ValueError(f"correlated market simulations use scheme B or C, got '{scheme}'")

    def draw(rng: np.random.Generator):
        ensemble = draw_scheme(scheme, params.M, params.N, t, s, rng, columns=columns)
        return ensemble.x, ensemble.y
    return draw


def sim_correlated(params: MarketParams, scheme: str, t: float, s: int, k: int, R: int = DEFAULT_REALIZATIONS,
                   seed: int = 0, acceptance: Optional[AcceptanceFunction] = None,
                   workers: Optional[int] = None) -> RunSummary:
    """Uninformed vendor in a correlated market, step acceptance at p unless told otherwise"""
    _check_k(k, params.N)
    f = acceptance or AcceptanceFunction.step(params.p)
    task = _fixed_k_task(params, k, _correlated_draw(params, scheme, t, s, k), f)
    quantities, profiles = _split_fixed(run_realizations(task, R, seed, workers))
    summary = RunSummary('correlated', {**params.as_dict(), 'scheme': scheme, 't': t, 's': s, 'k': k}, R, seed)
    summary.quantities.update(quantities)
    summary.profiles.update(profiles)
    return summary


def scan_correlated(params: MarketParams, scheme: str, t: float, s: int, k_max: int,
                    R: int = DEFAULT_REALIZATIONS, seed: int = 0, acceptance: Optional[AcceptanceFunction] = None,
                    workers: Optional[int] = None) -> RunSummary:
    """Simulated profit curve, k_opt and X_opt in a correlated market"""
    _check_k(k_max, params.N)
    f = acceptance or AcceptanceFunction.step(params.p)
    task = _scan_task(params, k_max, _correlated_draw(params, scheme, t, s, k_max), f)
    return _scan_summary('correlated_scan', {'scheme': scheme, 't': t, 's': s, 'acceptance': f.kind}, params,
                         k_max, R, seed, run_realizations(task, R, seed, workers))


def _offered_ranks(N: int, M: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Ranks (1 = best) of the vendor's d top variants in each of M uniform buyer lists

    The ranks are d draws without replacement from 1..N. Short offers use rejection of
    rows with repeats; long offers shuffle whole lists.
    """
    if d * d > N:
        lists = rng.permuted(np.tile(np.arange(1, N + 1), (M, 1)), axis=1)
        return lists[:, :d]
    ranks = rng.integers(1, N + 1, size=(M, d))
    repeated = (np.diff(np.sort(ranks, axis=1), axis=1) == 0).any(axis=1)
    while repeated.any():
        ranks[repeated] = rng.integers(1, N + 1, size=(int(repeated.sum()), d))
        repeated = (np.diff(np.sort(ranks, axis=1), axis=1) == 0).any(axis=1)
    return ranks


def sim_matching(N: int, M: int, d: int, R: int = DEFAULT_REALIZATIONS, seed: int = 0,
                 workers: Optional[int] = None) -> RunSummary:
    """Vendor picks, among his d top variants, the one whose worst buyer rank is smallest"""
    if not 1 <= d <= N:
        raise ValueError(f"need 1 <= d <= N, got d={d}, N={N}")
    if M < 1:
        raise ValueError(f"M must be positive, got {M}")

    def task(rng: np.random.Generator) -> dict:
        ranks = _offered_ranks(N, M, d, rng)
        worst = ranks.max(axis=0)
        b = int(worst.min())
        chosen = int(rng.choice(np.flatnonzero(worst == b)))
        return {
            'b': float(b),
            'vendor_rank': float(chosen + 1),
            'x': float(ranks[:, chosen].mean() / N),
            'y': (chosen + 1) / N,
        }

    summary = RunSummary('matching', {'N': N, 'M': M, 'd': d}, R, seed)
    summary.quantities.update(_collect(run_realizations(task, R, seed, workers)))
    return summary


def sim_multi_variant(N: int, d: int, R: int = DEFAULT_REALIZATIONS, seed: int = 0, M: int = 1,
                      workers: Optional[int] = None) -> RunSummary:
    """Each buyer takes her best-ranked variant among the d offered"""
    if not 1 <= d <= N:
        raise ValueError(f"need 1 <= d <= N, got d={d}, N={N}")

    def task(rng: np.random.Generator) -> dict:
        best = _offered_ranks(N, M, d, rng).min(axis=1)
        return {
            'b': float(best.mean()),
            'x': float(best.mean() / N),
            'pmf': np.bincount(best - 1, minlength=N) / M,
        }

    results = run_realizations(task, R, seed, workers)
    summary = RunSummary('multi_variant', {'N': N, 'M': M, 'd': d}, R, seed)
    summary.quantities.update(_collect([{'b': r['b'], 'x': r['x']} for r in results]))
    summary.profiles['pmf'] = Estimate.from_samples([r['pmf'] for r in results])
    return summary


def analytic_sequential_profile(params: MarketParams, k: int) -> np.ndarray:
    """Expected per-variant sequential sales, for comparison with sim_sequential"""
    return np.array([analytic.sequential_sales(params.M, params.p, alpha) for alpha in range(1, k + 1)])
