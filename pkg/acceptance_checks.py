"""
Acceptance Checks - Analytic against simulated results with explicit tolerances

Every suite returns CheckResult lines. A criterion passes when its deviation stays within
tolerance * tolerance_scale; a scale of zero fails every criterion.
"""

import contextlib
import logging
import os
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Callable, Dict, List, Optional

import numpy as np
from scipy import stats

import analytic
import correlation
import experiments
import simulate
import solve
from market_model import realization_rng
from report_system import ReportSystem, format_number

if TYPE_CHECKING:
    from hetmarket import ExperimentConfig

logger = logging.getLogger(__name__)

PASS, FAIL, WARN = 'PASS', 'FAIL', 'WARN'
MIN_POWERED_REALIZATIONS = 100

UNINFORMED_COSTS = (1.0, 2.0, 5.0, 10.0, 15.0, 20.0)
IDLE_COST_RATIOS = (1.04, 1.2, 1.6)
SEQUENTIAL_PROFILE_K = 30
GREEDY_MARKET = 100_000
GREEDY_COST_RATIO = 0.01
DUOPOLY_Z2 = 5.0
DUOPOLY_GRID = np.arange(1.0, 20.0 + 1e-9, 0.5)
CHI_SQUARE_N = 100
CHI_SQUARE_SAMPLES = 10_000
CHI_SQUARE_ALPHA = 0.05
TAU_BINDINGS = (0.0, 0.25, 0.5, 0.75)
TRIANGLE_TRIPLES = 1_000
TRIANGLE_LENGTH = 20
BOUND_CASES_N4 = (-1.0, -1.0 / 3.0, 0.0, 0.5)
CORRELATED_BINDINGS = (0.25, 0.5, 0.75)
ANTI_BINDING = 0.1
MATCHING_CASE = (1000, 5, 10)
MULTI_VARIANT_MARKETS = (1, 10, 100)


@dataclass(frozen=True)
class CheckResult:
    criterion: int
    name: str
    status: str
    measured: object
    target: object
    tolerance: object
    detail: str = ''

    @property
    def passed(self) -> bool:
        return self.status != FAIL

    def describe(self) -> str:
        line = (f"{self.status:4s} [{self.criterion}] {self.name}: measured={format_number(self.measured)} "
                f"target={format_number(self.target)} tolerance={format_number(self.tolerance)}")
        if self.detail:
            line += f" ({self.detail})"
        return line


class Judge:
    """Collects the verdicts of one suite"""

    def __init__(self, config: 'ExperimentConfig', criterion: int):
        self.scale = config.tolerance_scale
        self.criterion = criterion
        self.results: List[CheckResult] = []
        if config.realizations < MIN_POWERED_REALIZATIONS:
            self.results.append(CheckResult(criterion, 'statistical power', WARN, config.realizations,
                                            MIN_POWERED_REALIZATIONS, None,
                                            'few realizations; tolerances built on SE widen with it'))

    def within(self, name: str, measured: float, target: float, tolerance: float, detail: str = '') -> bool:
        allowed = tolerance * self.scale
        passed = self.scale > 0 and abs(float(measured) - float(target)) <= allowed
        self.results.append(CheckResult(self.criterion, name, PASS if passed else FAIL, measured, target,
                                        allowed, detail))
        return passed

    def holds(self, name: str, condition: bool, measured, target, detail: str = '') -> bool:
        passed = self.scale > 0 and bool(condition)
        self.results.append(CheckResult(self.criterion, name, PASS if passed else FAIL, measured, target,
                                        None, detail))
        return passed


def check_uninformed(config: 'ExperimentConfig') -> List[CheckResult]:
    """Simulated optimum of the uninformed vendor against the closed-form optimum"""
    judge = Judge(config, 1)
    optima = experiments.uninformed_optima(config.params(), UNINFORMED_COSTS, config.realizations, config.seed,
                                           config.acceptance_function())
    for opt in optima:
        judge.within(f"k_opt at Z={opt.Z:g}", opt.k_simulated, opt.k_exact, 2,
                     f"closed form {opt.k_formula:.2f}")
        judge.within(f"X_opt at Z={opt.Z:g}", opt.X_simulated, opt.X_formula,
                     0.05 * abs(opt.X_formula) + 3.0 * opt.X_se, "5% plus 3 SE")
    return judge.results


def check_idle(config: 'ExperimentConfig') -> List[CheckResult]:
    """Above Z = Mp the vendor stays idle, analytically and in simulation"""
    judge = Judge(config, 2)
    params = config.params()
    costs = [ratio * params.M * params.p for ratio in IDLE_COST_RATIOS]
    optima = experiments.uninformed_optima(params, costs, config.realizations, config.seed,
                                           config.acceptance_function(), k_max=20)
    for opt in optima:
        judge.holds(f"idle at Z={opt.Z:g}", opt.k_simulated == 0 and opt.X_simulated == 0.0 and opt.k_formula == 0,
                    opt.k_simulated, 0, f"simulated X_opt {opt.X_simulated:.4g}")
    return judge.results


def check_sequential(config: 'ExperimentConfig') -> List[CheckResult]:
    """Sequential sale profile, total sale and the greedy stopping point"""
    judge = Judge(config, 3)
    params = config.params()
    f = config.acceptance_function()
    summary = simulate.sim_sequential(params, simulate.Stopping.fixed_k(SEQUENTIAL_PROFILE_K), config.realizations,
                                      config.seed, f)
    profile = summary.profiles['sale_per_variant']
    expected = simulate.analytic_sequential_profile(params, SEQUENTIAL_PROFILE_K)
    z = np.abs(profile.mean - expected) / profile.se
    worst = int(np.argmax(z))
    judge.within(f"sale of variants 1..{SEQUENTIAL_PROFILE_K}, largest |z|", float(z[worst]), 0.0, 4.0,
                 f"at alpha={worst + 1}")
    total = params.M * (1.0 - (1.0 - params.p) ** SEQUENTIAL_PROFILE_K)
    judge.within("total sale equals the simultaneous offer", summary.mean('total_sale'), total,
                 4.0 * summary.se('total_sale'))

    market = params.with_changes(M=GREEDY_MARKET, Z=GREEDY_COST_RATIO * GREEDY_MARKET)
    greedy = simulate.sim_sequential(market, simulate.Stopping.greedy(), config.realizations, config.seed, f)
    judge.within(f"greedy stopping k at M={GREEDY_MARKET}", greedy.mean('k'),
                 analytic.kopt_sequential(market.M, market.p, market.Z), 2.0)
    return judge.results


def check_duopoly(config: 'ExperimentConfig') -> List[CheckResult]:
    """Price-out of the less efficient vendor and equilibrium properties"""
    judge = Judge(config, 4)
    params = config.params()
    M, p = params.M, params.p
    sweep = solve.priceout_sweep(M, p, DUOPOLY_Z2, DUOPOLY_GRID)
    threshold = sweep.analytic_threshold
    if sweep.exit_bracket is None:
        judge.holds("vendor 1 exits on the Z1 grid", False, None, threshold)
    else:
        low, high = sweep.exit_bracket
        distance = max(0.0, low - threshold, threshold - high)
        judge.within("exit bracket reaches Z1*", distance, 0.0, 1.0, f"bracket [{low:g}, {high:g}]")

    eq = solve.duopoly_equilibrium(M, p, 5.0, 5.0)
    judge.holds("symmetric costs give symmetric offers", eq.k1 == eq.k2 and eq.converged, eq.k1, eq.k2)
    judge.holds("equilibrium is a mutual best response",
                solve.verify_equilibrium(M, p, 5.0, 5.0, eq.k1, eq.k2), eq.X1, eq.X2)

    summary = simulate.sim_duopoly(params, 5.0, 5.0, eq.k1, eq.k2, config.realizations, config.seed,
                                   config.acceptance_function())
    judge.within("vendor 1 share of sales", summary.mean('share_1'), eq.k1 / (eq.k1 + eq.k2),
                 4.0 * summary.se('share_1'))

    worst_gap = -np.inf
    for Z1 in (2.0, 5.0, 8.0):
        for Z2 in (2.0, 5.0, 8.0):
            pair = solve.duopoly_equilibrium(M, p, Z1, Z2)
            _, monopoly = solve.monopoly_optimum(M, p, min(Z1, Z2))
            worst_gap = max(worst_gap, pair.total_profit - monopoly)
    judge.holds("joint profit never beats the cheaper monopolist", worst_gap <= 1e-9, worst_gap, 0.0)

    priced_out = solve.duopoly_equilibrium(M, p, 5.0, 1e9)
    k_mono, _ = solve.monopoly_optimum(M, p, 5.0)
    judge.holds("a priced-out rival leaves the monopoly optimum", priced_out.k1 == k_mono and priced_out.k2 == 0,
                priced_out.k1, k_mono)
    return judge.results


def _merged_bins(expected: np.ndarray, observed: np.ndarray, minimum: float = 5.0):
    """Merge neighbouring cells until every expected count reaches the minimum"""
    exp_bins, obs_bins = [], []
    exp_acc = obs_acc = 0.0
    for e, o in zip(expected, observed):
        exp_acc += e
        obs_acc += o
        if exp_acc >= minimum:
            exp_bins.append(exp_acc)
            obs_bins.append(obs_acc)
            exp_acc = obs_acc = 0.0
    if exp_bins:
        exp_bins[-1] += exp_acc
        obs_bins[-1] += obs_acc
    return np.array(obs_bins), np.array(exp_bins)


def check_informed(config: 'ExperimentConfig') -> List[CheckResult]:
    """Largest acceptor count: mean against the exact law, growth against the formula, histogram fit"""
    judge = Judge(config, 5)
    params = config.params()
    M, p, N = params.M, params.p, params.N
    summary = simulate.sim_informed_max(params, 2 * config.realizations, config.seed)
    judge.within("mean largest sale, exact maximum law", summary.mean('m'), analytic.exact_max_sale_mean(M, p, N),
                 4.0 * summary.se('m'))
    gain = analytic.informed_gain(M, p, N)
    judge.within("relative sale growth delta", summary.mean('delta'), gain, 0.15 * gain,
                 "large-M formula overshoots the simulated mean")

    small = params.with_changes(N=CHI_SQUARE_N)
    histogram = simulate.sim_informed_max(small, CHI_SQUARE_SAMPLES, config.seed)
    maxima = histogram.samples['m'].astype(int)
    observed = np.bincount(maxima, minlength=M + 1)[:M + 1].astype(float)
    expected = analytic.exact_max_sale_pmf(M, p, CHI_SQUARE_N) * maxima.size
    obs_bins, exp_bins = _merged_bins(expected, observed)
    exp_bins *= obs_bins.sum() / exp_bins.sum()
    result = stats.chisquare(obs_bins, exp_bins)
    judge.holds(f"histogram of the largest sale (N={CHI_SQUARE_N}), chi-square p-value",
                result.pvalue >= CHI_SQUARE_ALPHA, float(result.pvalue), CHI_SQUARE_ALPHA,
                f"{obs_bins.size} bins")
    return judge.results


def check_tau(config: 'ExperimentConfig') -> List[CheckResult]:
    """Kendall tau toolkit: exact values, the triangle inequality, expectations and the 1/N variance"""
    judge = Judge(config, 6)
    triple = ([3, 2, 1], [2, 1, 3], [1, 3, 2])
    values = [correlation.kendall_tau_exact(triple[i], triple[j]) for i, j in ((0, 1), (0, 2), (1, 2))]
    judge.holds("three lists with pairwise tau -1/3", all(v == Fraction(-1, 3) for v in values),
                float(values[0]), -1.0 / 3.0)

    rng = realization_rng(config.seed, 0)
    violations = 0
    for index in range(TRIANGLE_TRIPLES):
        scheme = correlation.SCHEMES[index % len(correlation.SCHEMES)]
        ensemble = correlation.draw_scheme(scheme, 3, TRIANGLE_LENGTH, float(rng.random()), int(rng.choice((1, -1))),
                                           rng)
        x = ensemble.x
        t12, t13 = correlation.kendall_tau(x[0], x[1]), correlation.kendall_tau(x[0], x[2])
        t23 = correlation.kendall_tau(x[1], x[2])
        low, high = correlation.tau_triangle_bounds(t12, t13)
        if t23 < low - 1e-12 or t23 > high + 1e-12:
            violations += 1
    judge.holds(f"triangle inequality over {TRIANGLE_TRIPLES} triples", violations == 0, violations, 0)

    for scheme in correlation.SCHEMES:
        for t in TAU_BINDINGS:
            for s in (1, -1):
                summary = experiments.tau_samples(scheme, config.N, t, s, config.tau_pairs, config.seed)
                if s == 1:
                    judge.within(f"<tau_xx> scheme {scheme}, t={t:g}", summary.mean('tau_xx'),
                                 correlation.expected_tau(scheme, t), 3.0 * summary.se('tau_xx'))
                judge.within(f"<tau_xy> scheme {scheme}, t={t:g}, s={s:+d}", summary.mean('tau_xy'),
                             correlation.expected_tau(scheme, t, s, 'xy'), 3.0 * summary.se('tau_xy'))

    half = experiments.tau_samples(correlation.SCHEME_C, config.N // 2, 0.5, 1, 2 * config.tau_pairs, config.seed)
    full = experiments.tau_samples(correlation.SCHEME_C, config.N, 0.5, 1, 2 * config.tau_pairs, config.seed)
    ratio = np.var(half.samples['tau_xx'], ddof=1) / np.var(full.samples['tau_xx'], ddof=1)
    judge.within(f"tau variance ratio N={config.N // 2} to N={config.N}", ratio, 2.0, 0.5)
    return judge.results


def check_bound(config: 'ExperimentConfig') -> List[CheckResult]:
    """Exhaustive equicorrelated sets never exceed the bound"""
    judge = Judge(config, 7)
    for tau0 in BOUND_CASES_N4:
        found = len(correlation.largest_equicorrelated_set(4, tau0))
        limit = correlation.max_equicorrelated(tau0, 4)
        judge.holds(f"N=4, tau0={tau0:.4g}: exhaustive set within bound", found <= limit, found, limit)
    limit = correlation.max_equicorrelated(0.2, 5)
    judge.holds("N=5, tau0=0.2 bound", limit == 6, limit, 6)
    found = len(correlation.largest_equicorrelated_set(5, 0.2))
    judge.holds("N=5, tau0=0.2: exhaustive set within bound", found <= limit, found, limit)
    return judge.results


def check_correlated(config: 'ExperimentConfig') -> List[CheckResult]:
    """Grid market: simulated optimum, the anticorrelated dead zone and perfect correlation"""
    judge = Judge(config, 8)
    params = config.params()
    for t in CORRELATED_BINDINGS:
        k_opt, X_opt = solve.optimal_correlated(params, t)
        summary = simulate.scan_correlated(params, correlation.SCHEME_B, t, 1,
                                           min(params.N, 2 * k_opt + 20), config.realizations, config.seed)
        judge.within(f"k_opt at t={t:g}", summary.mean('k_opt'), k_opt, 3)
        judge.within(f"X_opt at t={t:g}", summary.mean('X_opt'), X_opt, 0.07 * abs(X_opt))

    first_sold = analytic.alpha_min(params.N, params.p, ANTI_BINDING)
    runs = min(config.realizations, MIN_POWERED_REALIZATIONS)
    anti = simulate.sim_correlated(params, correlation.SCHEME_B, ANTI_BINDING, -1, params.N, runs, config.seed)
    dead = float(np.sum(anti.profiles['sale_per_variant'].mean[:first_sold - 1]))
    judge.holds(f"no sales below alpha_min={first_sold} at s=-1, t={ANTI_BINDING:g}", dead == 0.0, dead, 0.0)

    perfect = simulate.scan_correlated(params, correlation.SCHEME_B, 1.0, 1, 10, config.realizations, config.seed)
    single = simulate.sim_correlated(params, correlation.SCHEME_B, 1.0, 1, 1, config.realizations, config.seed)
    judge.holds("s*t=1: one variant sells to every buyer",
                perfect.mean('k_opt') == 1 and single.mean('coverage') == 1.0,
                perfect.mean('k_opt'), 1, f"coverage {single.mean('coverage'):.4g}")
    return judge.results


def check_matching(config: 'ExperimentConfig') -> List[CheckResult]:
    """Walk-down matching and the multi-variant offer"""
    judge = Judge(config, 9)
    N, M, d = MATCHING_CASE
    summary = simulate.sim_matching(N, M, d, config.realizations, config.seed)
    mean_b, _, mean_x = analytic.matching_means(N, M, d)
    judge.within("mean depth b", summary.mean('b'), mean_b, 0.10 * mean_b)
    judge.within("mean buyer cost x", summary.mean('x'), mean_x, 0.10 * mean_x)
    rank = (1 + d) / 2.0
    judge.within("mean vendor rank", summary.mean('vendor_rank'), rank, 0.02 * rank + 3.0 * summary.se('vendor_rank'),
                 "2% plus 3 SE")

    pair = simulate.sim_multi_variant(2, 1, config.realizations, config.seed)
    judge.within("N=2, d=1 mean best rank", pair.mean('b'), 1.5, 4.0 * pair.se('b'))

    runs = [simulate.sim_multi_variant(N, d, config.realizations, config.seed, M=size)
            for size in MULTI_VARIANT_MARKETS]
    worst = 0.0
    for i in range(len(runs)):
        for j in range(i + 1, len(runs)):
            gap = abs(runs[i].mean('x') - runs[j].mean('x'))
            worst = max(worst, gap / np.hypot(runs[i].se('x'), runs[j].se('x')))
    judge.within("buyer cost independent of M (largest gap in SE)", worst, 0.0, 3.0,
                 f"1/(d+1) = {1.0 / (d + 1):.4g}")
    return judge.results


@contextlib.contextmanager
def _threads(count: int):
    previous = os.environ.get(simulate.THREADS_ENV)
    os.environ[simulate.THREADS_ENV] = str(count)
    try:
        yield
    finally:
        if previous is None:
            os.environ.pop(simulate.THREADS_ENV, None)
        else:
            os.environ[simulate.THREADS_ENV] = previous


def check_determinism(config: 'ExperimentConfig') -> List[CheckResult]:
    """The same seed gives byte-identical CSV on one and on eight threads"""
    judge = Judge(config, 10)
    small = config.replace(M=100, N=200, Z=1.0, k_max=30, sweep=None, realizations=min(config.realizations, 50))
    contents = []
    for count in (1, 8):
        with _threads(count), tempfile.TemporaryDirectory() as out:
            reporter = ReportSystem({'out': out, 'console': False})
            for name in ('profit_curve', 'matching'):
                trial = small.replace(matching_N=200, matching_M=3)
                path = reporter.publish(experiments.EXPERIMENTS[name](trial))
                with open(path, 'rb') as f:
                    contents.append((count, name, f.read()))
    single = [data for count, _, data in contents if count == 1]
    many = [data for count, _, data in contents if count == 8]
    judge.holds("CSV identical on 1 and 8 threads", single == many, sum(len(d) for d in single),
                sum(len(d) for d in many))
    return judge.results


SUITES: Dict[str, Callable[['ExperimentConfig'], List[CheckResult]]] = {
    'uninformed': check_uninformed,
    'idle': check_idle,
    'sequential': check_sequential,
    'duopoly': check_duopoly,
    'informed': check_informed,
    'tau': check_tau,
    'bound': check_bound,
    'correlated': check_correlated,
    'matching': check_matching,
    'determinism': check_determinism,
}

SUITE_FOR_EXPERIMENT = {
    'profit_curve': 'idle',
    'uninformed': 'uninformed',
    'sequential': 'sequential',
    'duopoly': 'duopoly',
    'informed': 'informed',
    'tau': 'tau',
    'bound': 'bound',
    'correlated': 'correlated',
    'matching': 'matching',
    'multi_variant': 'matching',
}


def suite_names(name: str) -> List[str]:
    if name == 'all':
        return list(SUITES)
    if name not in SUITES:
        raise ValueError(f"Unknown check suite '{name}', expected one of {sorted(SUITES)} or 'all'")
    return [name]
