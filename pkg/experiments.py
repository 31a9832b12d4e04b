"""
Experiments - One data table per study of the market model

Each experiment takes an ExperimentConfig and returns a report_system.Table whose rows
pair the analytic value of a quantity with its simulated mean and standard error.
"""

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Dict, List, Optional

import numpy as np

import analytic
import correlation
import simulate
import solve
from market_model import AcceptanceFunction, MarketParams
from report_system import Table

if TYPE_CHECKING:
    from hetmarket import ExperimentConfig

logger = logging.getLogger(__name__)

Progress = Optional[Callable[[str, int, int, str], None]]

SEQUENTIAL_SIZES = (1_000, 10_000, 100_000)
INFORMED_SIZES = (100, 200, 500, 1_000, 2_000, 5_000, 10_000)
BOUND_LENGTHS = (20, 2_000)
EXHAUSTIVE_TAUS = {4: (-1.0, -1.0 / 3.0, 0.0, 1.0 / 3.0, 2.0 / 3.0), 5: (0.2,)}
MULTI_VARIANT_SIZES = (1, 10, 100)
GAUSSIAN_K_MAX = 400


def _notify(progress: Progress, done: int, total: int, message: str):
    if progress:
        progress('running', done, total, message)


def _integers(values) -> List[int]:
    return [int(round(v)) for v in values]


@dataclass(frozen=True)
class UninformedOptimum:
    """Analytic and simulated optimum of the uninformed vendor at one initial cost"""
    Z: float
    k_formula: float
    X_formula: float
    k_exact: int
    X_exact: float
    k_simulated: int
    X_simulated: float
    X_se: float


def uninformed_k_max(params: MarketParams, Z: float) -> int:
    """Scan length comfortably beyond the optimum at initial cost Z"""
    k_opt, _ = analytic.kopt_uninformed(params.with_changes(Z=Z))
    return int(min(params.N, max(20, math.ceil(2.0 * k_opt) + 10)))


def uninformed_optima(params: MarketParams, Z_values, R: int, seed: int,
                      acceptance: Optional[AcceptanceFunction] = None, k_max: Optional[int] = None,
                      workers: Optional[int] = None) -> List[UninformedOptimum]:
    """Optima for several initial costs from a single revenue scan

    Profit is revenue minus kZ, so one scan at Z = 0 serves every Z with common random numbers.
    """
    Z_values = [float(Z) for Z in Z_values]
    k_max = k_max or uninformed_k_max(params, min(Z_values))
    revenue = simulate.scan_uninformed(params.with_changes(Z=0.0), k_max, R, seed, acceptance, workers)
    curve = revenue.profiles['profit']
    ks = np.arange(k_max + 1)
    optima = []
    for Z in Z_values:
        profit = curve.mean - ks * Z
        k_sim, X_sim = solve.argmax_k(lambda k: float(profit[k]), k_max)
        market = params.with_changes(Z=Z)
        k_formula, X_formula = analytic.kopt_uninformed(market)
        k_exact, X_exact = solve.optimal_uninformed(market, k_max)
        optima.append(UninformedOptimum(Z, k_formula, X_formula, k_exact, X_exact, k_sim, X_sim,
                                        float(curve.se[k_sim])))
    return optima


def profit_curve(config: 'ExperimentConfig', progress: Progress = None) -> Table:
    """Expected and simulated profit against the number of offered variants"""
    params = config.params()
    k_opt, _ = analytic.kopt_uninformed(params)
    k_max = config.k_max or int(min(params.N, max(40, 3 * math.ceil(k_opt) + 10)))
    var, values = config.sweep_grid('k', range(k_max + 1))
    ks = _integers(values)
    _notify(progress, 0, 1, f"scanning k up to {max(ks)}")
    summary = simulate.scan_uninformed(params, max(ks), config.realizations, config.seed,
                                       config.acceptance_function())
    curve = summary.profiles['profit']
    table = Table('profit_curve', var, notes={
        'Z': params.Z,
        'k_opt (formula)': round(k_opt, 3),
        'k_opt (simulated)': int(summary.mean('k_opt')),
    })
    for k in ks:
        table.add('profit', k, analytic.profit_uninformed(params, k), mean=curve.mean[k], se=curve.se[k],
                  R=summary.realizations, seed=summary.master_seed)
    _notify(progress, 1, 1, "profit curve done")
    return table


def uninformed(config: 'ExperimentConfig', progress: Progress = None) -> Table:
    """Optimal number of variants and optimal profit against the initial cost"""
    params = config.params()
    var, Z_values = config.sweep_grid('Z', np.arange(0.5, 30.0 + 1e-9, 0.5))
    _notify(progress, 0, 1, f"scanning revenue for {len(Z_values)} initial costs")
    optima = uninformed_optima(params, Z_values, config.realizations, config.seed,
                               config.acceptance_function(), config.k_max)
    table = Table('uninformed', var, notes={'idle above Z': params.M * params.p})
    for opt in optima:
        table.add('k_opt', opt.Z, opt.k_formula, mean=opt.k_simulated, R=config.realizations, seed=config.seed)
        table.add('X_opt', opt.Z, opt.X_formula, mean=opt.X_simulated, se=opt.X_se,
                  R=config.realizations, seed=config.seed)
    _notify(progress, 1, 1, "uninformed optima done")
    return table


def sequential(config: 'ExperimentConfig', progress: Progress = None) -> Table:
    """Greedy stopping point of sequential offering against Z/M for several market sizes"""
    params = config.params()
    var, q_values = config.sweep_grid('q', np.arange(0.0025, 0.045 + 1e-9, 0.0025))
    table = Table('sequential', var, notes={'market sizes': ', '.join(str(M) for M in SEQUENTIAL_SIZES)})
    total = len(q_values) * len(SEQUENTIAL_SIZES)
    done = 0
    for q in q_values:
        for M in SEQUENTIAL_SIZES:
            market = params.with_changes(M=M, Z=q * M)
            summary = simulate.sim_sequential(market, simulate.Stopping.greedy(), config.realizations,
                                              config.seed, config.acceptance_function())
            table.add(f'k_stop_M{M}', q, analytic.kopt_sequential(M, params.p, q * M), summary=summary, name='k')
            done += 1
            _notify(progress, done, total, f"q={q:g}, M={M}")
    return table


def duopoly(config: 'ExperimentConfig', progress: Progress = None) -> Table:
    """Equilibrium variant counts and profits of two vendors against vendor 1's initial cost"""
    params = config.params()
    k_max = config.k_max or params.N
    var, Z1_values = config.sweep_grid('Z1', np.arange(1.0, 20.0 + 1e-9, 0.5))
    sweep = solve.priceout_sweep(params.M, params.p, config.Z2, Z1_values, k_max)
    table = Table('duopoly', var, notes={
        'Z2': config.Z2,
        'price-out Z1* (formula)': round(sweep.analytic_threshold, 4),
        'exit bracket': sweep.exit_bracket,
    })
    for index, (Z1, eq) in enumerate(sweep.rows):
        table.add('k1', Z1, eq.k1)
        table.add('k2', Z1, eq.k2)
        if 0 < eq.k1 + eq.k2 <= params.N:
            summary = simulate.sim_duopoly(params, Z1, config.Z2, eq.k1, eq.k2, config.realizations, config.seed,
                                           config.acceptance_function())
            table.add('X1', Z1, eq.X1, summary=summary, name='profit_1')
            table.add('X2', Z1, eq.X2, summary=summary, name='profit_2')
            table.add('share_1', Z1, eq.k1 / (eq.k1 + eq.k2), summary=summary)
        else:
            table.add('X1', Z1, eq.X1)
            table.add('X2', Z1, eq.X2)
        _notify(progress, index + 1, len(sweep.rows), f"Z1={Z1:g}: k1={eq.k1}, k2={eq.k2}")
    return table


def _maybe(formula: Callable[[], float]) -> Optional[float]:
    try:
        return formula()
    except analytic.DomainError as e:
        logger.debug("Skipping asymptotic value: %s", e)
        return None


def informed(config: 'ExperimentConfig', progress: Progress = None) -> Table:
    """Relative sale growth of the informed vendor against the number of buyers"""
    params = config.params()
    var, M_values = config.sweep_grid('M', INFORMED_SIZES)
    table = Table('informed', var, notes={'N': params.N, 'p': params.p})
    for index, M in enumerate(_integers(M_values)):
        market = params.with_changes(M=M)
        summary = simulate.sim_informed_max(market, config.realizations, config.seed, config.acceptance_function())
        table.add('delta', M, _maybe(lambda: analytic.informed_gain(M, params.p, params.N)), summary=summary)
        table.add('m', M, analytic.exact_max_sale_mean(M, params.p, params.N), summary=summary)
        table.add('m_mode', M, _maybe(lambda: analytic.most_probable_max_sale(M, params.p, params.N)),
                  summary=summary, name='mode')
        _notify(progress, index + 1, len(M_values), f"M={M}")
    return table


def tau_samples(scheme: str, N: int, t: float, s: int, pairs: int, seed: int,
                workers: Optional[int] = None) -> simulate.RunSummary:
    """Kendall tau between two buyer lists and between a buyer and the vendor, over many draws"""
    def task(rng: np.random.Generator) -> dict:
        ensemble = correlation.draw_scheme(scheme, 2, N, t, s, rng)
        return {
            'tau_xx': correlation.kendall_tau(ensemble.x[0], ensemble.x[1]),
            'tau_xy': correlation.kendall_tau(ensemble.x[0], ensemble.y),
        }

    results = simulate.run_realizations(task, pairs, seed, workers)
    summary = simulate.RunSummary('tau', {'scheme': scheme, 'N': N, 't': t, 's': s}, pairs, seed)
    for name in ('tau_xx', 'tau_xy'):
        values = np.array([r[name] for r in results])
        summary.quantities[name] = simulate.Estimate.from_samples(values)
        summary.samples[name] = values
    return summary


def tau(config: 'ExperimentConfig', progress: Progress = None) -> Table:
    """Sample against expected Kendall tau as the binding parameter grows"""
    var, t_values = config.sweep_grid('t', np.arange(0.0, 0.9 + 1e-9, 0.1))
    table = Table(f'tau_{config.scheme}', var, notes={'scheme': config.scheme, 's': config.s, 'N': config.N})
    for index, t in enumerate(t_values):
        summary = tau_samples(config.scheme, config.N, t, config.s, config.tau_pairs, config.seed)
        for which in ('xx', 'xy'):
            table.add(f'tau_{which}', t, correlation.expected_tau(config.scheme, t, config.s, which), summary=summary)
        _notify(progress, index + 1, len(t_values), f"t={t:g}")
    return table


def bound(config: 'ExperimentConfig', progress: Progress = None) -> Table:
    """Upper bound on equicorrelated lists against tau0, with exhaustive counts for short lists"""
    var, tau_values = config.sweep_grid('tau0', np.linspace(-1.0, 1.0, 41))
    table = Table('bound', var)
    for N in BOUND_LENGTHS:
        for tau0 in tau_values:
            table.add(f'M_m_N{N}', tau0, correlation.max_equicorrelated(tau0, N))
    for N, taus in EXHAUSTIVE_TAUS.items():
        for tau0 in taus:
            found = len(correlation.largest_equicorrelated_set(N, tau0))
            table.add(f'exhaustive_N{N}', tau0, correlation.max_equicorrelated(tau0, N), mean=found)
    _notify(progress, 1, 1, "bounds done")
    return table


def _correlated_sweep(config: 'ExperimentConfig', scheme: str, name: str, progress: Progress) -> Table:
    params = config.params()
    var, st_values = config.sweep_grid('st', np.arange(-1.0, 1.0 + 1e-9, 0.1))
    table = Table(name, var, notes={'scheme': scheme, 'Z': params.Z})
    for index, st in enumerate(st_values):
        s = 1 if st >= 0 else -1
        t = min(1.0, abs(st))
        if scheme == correlation.SCHEME_B:
            k_opt, X_opt = solve.optimal_correlated(params, t, params.N, s)
            k_max = config.k_max or int(min(params.N, max(40, 2 * k_opt + 20)))
        else:
            k_opt, X_opt = None, None
            k_max = config.k_max or min(params.N, GAUSSIAN_K_MAX)
        summary = simulate.scan_correlated(params, scheme, t, s, k_max, config.realizations, config.seed)
        table.add('k_opt', st, k_opt, mean=summary.mean('k_opt'), R=summary.realizations, seed=summary.master_seed)
        table.add('X_opt', st, X_opt, summary=summary)
        _notify(progress, index + 1, len(st_values), f"st={st:g}")
    return table


def correlated(config: 'ExperimentConfig', progress: Progress = None) -> Table:
    """Optimum of the uninformed vendor in the grid market against s*t"""
    return _correlated_sweep(config, correlation.SCHEME_B, 'correlated', progress)


def gaussian(config: 'ExperimentConfig', progress: Progress = None) -> Table:
    """Simulated optimum in the Gaussian market against s*t (no closed form)"""
    return _correlated_sweep(config, correlation.SCHEME_C, 'gaussian', progress)


def matching(config: 'ExperimentConfig', progress: Progress = None) -> Table:
    """Matching by walking down the lists: depth, buyer cost and vendor cost against d"""
    N, M = config.matching_N, config.matching_M
    var, d_values = config.sweep_grid('d', range(1, 21))
    table = Table('matching', var, notes={'N': N, 'M': M})
    for index, d in enumerate(_integers(d_values)):
        summary = simulate.sim_matching(N, M, d, config.realizations, config.seed)
        mean_b, mean_y, mean_x = analytic.matching_means(N, M, d)
        table.add('b', d, mean_b, summary=summary)
        table.add('x', d, mean_x, summary=summary)
        table.add('y', d, mean_y, summary=summary)
        table.add('vendor_rank', d, (1 + d) / 2.0, summary=summary)
        _notify(progress, index + 1, len(d_values), f"d={d}")
    return table


def multi_variant(config: 'ExperimentConfig', progress: Progress = None) -> Table:
    """Best rank among d simultaneously offered variants, for several market sizes"""
    N = config.matching_N
    var, d_values = config.sweep_grid('d', range(1, 21))
    table = Table('multi_variant', var, notes={'N': N})
    for index, d in enumerate(_integers(d_values)):
        _, mean_b = analytic.multi_variant_b(N, d)
        for M in MULTI_VARIANT_SIZES:
            summary = simulate.sim_multi_variant(N, d, config.realizations, config.seed, M=M)
            table.add(f'b_M{M}', d, mean_b, summary=summary, name='b')
            table.add(f'x_M{M}', d, mean_b / N, summary=summary, name='x')
        _notify(progress, index + 1, len(d_values), f"d={d}")
    return table


EXPERIMENTS: Dict[str, Callable[..., Table]] = {
    'profit_curve': profit_curve,
    'uninformed': uninformed,
    'sequential': sequential,
    'duopoly': duopoly,
    'informed': informed,
    'tau': tau,
    'bound': bound,
    'correlated': correlated,
    'gaussian': gaussian,
    'matching': matching,
    'multi_variant': multi_variant,
}
