"""
Correlation - Rank correlation estimators and generators of correlated cost lists

Kendall's tau and Pearson's r^2, the tau triangle inequality, the upper bound on the
size of an equicorrelated set of lists, three schemes producing buyer/vendor cost
lists with a tunable binding parameter t, and the closed forms for their expected tau.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import special, stats

logger = logging.getLogger(__name__)

SCHEME_A = 'A'
SCHEME_B = 'B'
SCHEME_C = 'C'
SCHEMES = (SCHEME_A, SCHEME_B, SCHEME_C)

# above this many entries in the concordance matrix the variance estimator subsamples variants
MAX_CONCORDANCE_ENTRIES = 4_000_000


@dataclass(frozen=True)
class ListEnsemble:
    """M buyer cost lists (rows of x) and one vendor cost list y, all of length N"""
    x: np.ndarray
    y: np.ndarray
    scheme: str
    t: float
    s: int

    @property
    def M(self) -> int:
        return self.x.shape[0]

    @property
    def N(self) -> int:
        return self.y.shape[0]


@dataclass(frozen=True)
class TauEstimate:
    """Kendall's tau of one list pair with the estimated variance of tau at that correlation"""
    tau: float
    variance: float
    n_pairs: int


def _validate_pair(xs, ys) -> Tuple[np.ndarray, np.ndarray]:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or ys.ndim != 1:
        raise ValueError("lists must be one-dimensional")
    if xs.shape != ys.shape:
        raise ValueError(f"length mismatch: {xs.shape[0]} vs {ys.shape[0]}")
    if xs.shape[0] < 2:
        raise ValueError("need at least two entries per list")
    return xs, ys


def _check_ties(values: np.ndarray, name: str):
    if np.unique(values).shape[0] != values.shape[0]:
        raise ValueError(f"tie detected in {name}")


def concordance_matrix(xs, ys) -> np.ndarray:
    """sigma[a, b] = sgn[(x_a - x_b)(y_a - y_b)] as int8, zero on the diagonal"""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    sx = np.sign(xs[:, None] - xs[None, :]).astype(np.int8)
    sy = np.sign(ys[:, None] - ys[None, :]).astype(np.int8)
    return sx * sy


def concordance_counts(xs, ys) -> Tuple[int, int]:
    """Number of concordant and discordant pairs a < b"""
    xs, ys = _validate_pair(xs, ys)
    upper = np.triu(concordance_matrix(xs, ys), k=1)
    return int(np.sum(upper == 1)), int(np.sum(upper == -1))


def kendall_tau(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Kendall's tau of two tie-free lists of equal length"""
    xs, ys = _validate_pair(xs, ys)
    _check_ties(xs, 'first list')
    _check_ties(ys, 'second list')
    # without ties scipy's tau-b coincides with the plain pair-counting tau
    tau, _ = stats.kendalltau(xs, ys)
    return float(np.clip(tau, -1.0, 1.0))


def kendall_tau_exact(xs: Sequence[float], ys: Sequence[float]) -> Fraction:
    """Kendall's tau as an exact fraction from integer pair counts"""
    xs, ys = _validate_pair(xs, ys)
    _check_ties(xs, 'first list')
    _check_ties(ys, 'second list')
    concordant, discordant = concordance_counts(xs, ys)
    n = xs.shape[0]
    return Fraction(concordant - discordant, n * (n - 1) // 2)


def pearson_r2(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Squared Pearson correlation coefficient"""
    xs, ys = _validate_pair(xs, ys)
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("Pearson's coefficient is undefined for a zero-variance list")
    return float(min(1.0, np.dot(dx, dy) ** 2 / (sxx * syy)))


def tau_triangle_bounds(tau12: float, tau13: float) -> Tuple[float, float]:
    """Admissible range of tau23 given tau12 and tau13"""
    if abs(tau12) > 1 or abs(tau13) > 1:
        raise ValueError("tau values must lie in [-1, 1]")
    return abs(tau12 + tau13) - 1.0, 1.0 - abs(tau12 - tau13)


def max_equicorrelated(tau0: float, N: int, doubled_log: bool = True) -> Optional[int]:
    """Upper bound on the number of lists of length N with pairwise tau equal to tau0

    Returns None when tau0 == 1 (any number of identical lists). doubled_log=False
    uses a single log2 factor, kept for comparison; the default doubled factor
    reproduces the six-list construction at N=5, tau0=0.2.
    """
    if not -1.0 <= tau0 <= 1.0:
        raise ValueError(f"tau0 must lie in [-1, 1], got {tau0}")
    if N < 2:
        raise ValueError(f"N must be at least 2, got {N}")
    if tau0 == 1.0:
        return None
    w = (1.0 - tau0) * N * (N - 1) / 4.0
    factor = 2.0 if doubled_log else 1.0
    bound = 2.0 + factor * math.log2(w)
    if tau0 < 0:
        bound = min(bound, 2.0 * math.log2((1.0 - tau0) / -tau0))
    # list counts are integral; the epsilon absorbs rounding at exact powers of two
    return max(1, int(math.floor(bound + 1e-9)))


def _inversions(perm: Sequence[int]) -> int:
    return sum(1 for a, b in itertools.combinations(perm, 2) if a > b)


def largest_equicorrelated_set(N: int, tau0: float, limit: int = 7) -> List[Tuple[int, ...]]:
    """Exhaustive search for the largest set of permutations of length N with pairwise tau0

    Tau is invariant under relabelling the variants, so the identity can be fixed as one
    member and the search runs over its neighbours only.
    """
    if N > limit:
        raise ValueError(f"exhaustive search is limited to N <= {limit}")
    total = N * (N - 1) // 2
    target = Fraction(tau0).limit_denominator(10_000)
    discordant = (1 - target) * total / 2
    identity = tuple(range(N))
    if discordant.denominator != 1:
        return [identity]
    discordant = int(discordant)

    perms = list(itertools.permutations(range(N)))
    position = {perm: {v: i for i, v in enumerate(perm)} for perm in perms}

    def distance(a, b) -> int:
        # discordant pairs between a and b = inversions of b read in the order of a
        where = position[b]
        return _inversions([where[v] for v in a])

    candidates = [perm for perm in perms if perm != identity and distance(identity, perm) == discordant]
    adjacency = {a: {b for b in candidates if b != a and distance(a, b) == discordant} for a in candidates}

    best: List[Tuple[int, ...]] = []

    def expand(clique, pool):
        nonlocal best
        if len(clique) > len(best):
            best = list(clique)
        if len(clique) + len(pool) <= len(best):
            return
        for member in sorted(pool):
            pool = pool - {member}
            expand(clique + [member], pool & adjacency[member])

    expand([], set(candidates))
    return [identity] + best


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF))


def _check_binding(t: float, s: int):
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"binding parameter t must lie in [0, 1], got {t}")
    if s not in (1, -1):
        raise ValueError(f"sign s must be +1 or -1, got {s}")


def draw_scheme(scheme: str, M: int, N: int, t: float, s: int, rng: np.random.Generator,
                columns: Optional[int] = None) -> ListEnsemble:
    """Correlated costs with variants renumbered by ascending vendor cost

    Only the `columns` cheapest variants get buyer costs; vendor costs are always drawn
    for all N variants so that the ordering is the one of the full market.
    """
    _check_binding(t, s)
    columns = N if columns is None else int(columns)
    if scheme == SCHEME_A:
        b = rng.random(N)
        c = rng.random(N)
        y = (1.0 - t) * b + s * t * c + 0.5 * t * (1 - s)
        order = np.argsort(y, kind='stable')
        y = y[order]
        shared = c[order][:columns]
        x = (1.0 - t) * rng.random((M, columns)) + t * shared
    elif scheme == SCHEME_B:
        grid = np.arange(N) / (N - 1) if N > 1 else np.zeros(1)
        y = grid
        noise = rng.random((M, columns))
        x = 0.5 + s * t * (grid[:columns] - 0.5) + (1.0 - t) * (noise - 0.5)
    elif scheme == SCHEME_C:
        b = rng.standard_normal(N)
        c = rng.standard_normal(N)
        raw_y = math.sqrt(1.0 - t) * b + s * math.sqrt(t) * c
        order = np.argsort(raw_y, kind='stable')
        shared = c[order][:columns]
        raw_x = math.sqrt(1.0 - t) * rng.standard_normal((M, columns)) + math.sqrt(t) * shared
        # the normal CDF maps the normal costs monotonically onto (0, 1)
        y = special.ndtr(raw_y[order])
        x = special.ndtr(raw_x)
    else:
        raise ValueError(f"Unknown scheme '{scheme}', expected one of {SCHEMES}")
    return ListEnsemble(x=np.clip(x, 0.0, 1.0), y=np.clip(y, 0.0, 1.0), scheme=scheme, t=float(t), s=int(s))


def generate_scheme_A(M: int, N: int, t: float, s: int, seed) -> ListEnsemble:
    """Uniform noise plus a shared uniform component, weighted by t"""
    return draw_scheme(SCHEME_A, M, N, t, s, _rng(seed))


def generate_scheme_B(M: int, N: int, t: float, s: int, seed) -> ListEnsemble:
    """Vendor costs on a regular grid, buyer costs tied to the grid by t"""
    if N < 2:
        raise ValueError("scheme B needs N >= 2")
    return draw_scheme(SCHEME_B, M, N, t, s, _rng(seed))


def generate_scheme_C(M: int, N: int, t: float, s: int, seed) -> ListEnsemble:
    """Gaussian mixture of noise and shared component, mapped to (0, 1) by the normal CDF"""
    return draw_scheme(SCHEME_C, M, N, t, s, _rng(seed))


def generate(scheme: str, M: int, N: int, t: float, s: int, seed) -> ListEnsemble:
    generators = {SCHEME_A: generate_scheme_A, SCHEME_B: generate_scheme_B, SCHEME_C: generate_scheme_C}
    if scheme not in generators:
        raise ValueError(f"Unknown scheme '{scheme}', expected one of {SCHEMES}")
    return generators[scheme](M, N, t, s, seed)


def _uniform_mixture_tau(u: float) -> float:
    if u <= 1.0:
        return u * u * (10.0 - 6.0 * u + u * u) / 15.0
    return (15.0 - 14.0 / u + 4.0 / (u * u)) / 15.0


def _grid_tau(u: float) -> float:
    if u <= 1.0:
        return (4.0 * u - u * u) / 6.0
    return (6.0 - 4.0 / u + 1.0 / (u * u)) / 6.0


def expected_tau(scheme: str, t: float, s: int = 1, which: str = 'xx') -> float:
    """Closed-form expected tau between two buyer lists (xx) or a buyer and the vendor (xy)"""
    _check_binding(t, s)
    if which not in ('xx', 'xy'):
        raise ValueError(f"which must be 'xx' or 'xy', got '{which}'")
    sign = s if which == 'xy' else 1
    if scheme == SCHEME_C:
        return sign * 2.0 / math.pi * math.asin(t)
    if scheme not in (SCHEME_A, SCHEME_B):
        raise ValueError(f"Unknown scheme '{scheme}', expected one of {SCHEMES}")
    if t == 1.0:
        return float(sign)
    u = t / (1.0 - t)
    if scheme == SCHEME_B and which == 'xy':
        return sign * _grid_tau(u)
    return sign * _uniform_mixture_tau(u)


def scheme_b_marginal_cdf(x, t: float):
    """CDF of a scheme-B buyer cost pooled over variants (large-N limit)

    The cost is 1/2 plus the sum of two centred uniforms of widths t and 1 - t, so the
    marginal is trapezoidal on [0, 1]; it is uniform only at t = 0 and t = 1.
    """
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    lo, hi = min(t, 1.0 - t), max(t, 1.0 - t)
    if lo == 0.0:
        return x if x.ndim else float(x)
    cdf = np.where(
        x <= lo,
        x * x / (2.0 * lo * hi),
        np.where(x <= hi, (x - lo / 2.0) / hi, 1.0 - (1.0 - x) ** 2 / (2.0 * lo * hi)),
    )
    return cdf if cdf.ndim else float(cdf)


def tau_variance_estimate(xs: Sequence[float], ys: Sequence[float], rng: Optional[np.random.Generator] = None,
                          max_entries: int = MAX_CONCORDANCE_ENTRIES) -> float:
    """Large-N variance of tau from concordance products of one list pair

    Uses 4/N (<sigma_ag sigma_gb> - <sigma_ab>^2), where the triple average runs over
    all ordered triples of distinct variants sharing the middle index. Lists longer than
    sqrt(max_entries) are estimated on a random subset of variants; the averages are
    unbiased under that subsampling and the 4/N prefactor keeps the full N.
    """
    xs, ys = _validate_pair(xs, ys)
    n_full = xs.shape[0]
    if n_full < 3:
        raise ValueError("need at least three entries per list")
    n = n_full
    if n * n > max_entries:
        n = int(math.isqrt(max_entries))
        chooser = rng or np.random.default_rng(0)
        keep = np.sort(chooser.choice(n_full, size=n, replace=False))
        logger.debug("Subsampling %d of %d variants for the tau variance", n, n_full)
        xs, ys = xs[keep], ys[keep]
    sigma = concordance_matrix(xs, ys).astype(np.int64)
    mean_pair = sigma.sum() / (n * (n - 1))
    row = sigma.sum(axis=1)
    squares = np.sum(sigma * sigma, axis=1)
    mean_triple = float(np.sum(row * row - squares)) / (n * (n - 1) * (n - 2))
    return 4.0 / n_full * (mean_triple - mean_pair * mean_pair)


def tau_estimate(xs: Sequence[float], ys: Sequence[float], rng: Optional[np.random.Generator] = None) -> TauEstimate:
    tau = kendall_tau(xs, ys)
    n = len(xs)
    variance = max(0.0, tau_variance_estimate(xs, ys, rng=rng))
    return TauEstimate(tau=tau, variance=variance, n_pairs=n * (n - 1) // 2)
