"""
Market Model - Domain types, cost sampling, buyer decisions and the vendor profit identity
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

PRICE = 1.0  # every variant sells for one monetary unit

LINEAR = 'linear'
STEP = 'step'
CONSTANT = 'constant'
ACCEPTANCE_KINDS = (LINEAR, STEP, CONSTANT)


@dataclass(frozen=True)
class MarketParams:
    """Scalar model parameters: M buyers, N variants, acceptance scale p, initial cost Z"""
    M: int = 500
    N: int = 2000
    p: float = 0.05
    Z: float = 5.0
    price: float = field(default=PRICE, init=False)

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"M must be a positive integer, got {self.M}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if not 0.0 < self.p < 0.5:
            raise ValueError(f"p must lie in (0, 0.5), got {self.p}")
        if self.Z < 0:
            raise ValueError(f"Z must be non-negative, got {self.Z}")
        object.__setattr__(self, 'M', int(self.M))
        object.__setattr__(self, 'N', int(self.N))

    def with_changes(self, **changes) -> 'MarketParams':
        """Copy with some fields replaced (used by parameter sweeps)"""
        values = {'M': self.M, 'N': self.N, 'p': self.p, 'Z': self.Z}
        values.update(changes)
        return MarketParams(**values)

    def as_dict(self) -> dict:
        return {'M': self.M, 'N': self.N, 'p': self.p, 'Z': self.Z, 'price': self.price}


@dataclass(frozen=True)
class AcceptanceFunction:
    """Buyer decision rule f(x): probability to accept a variant of cost x"""
    kind: str = LINEAR
    parameter: float = 0.05

    def __post_init__(self):
        if self.kind not in ACCEPTANCE_KINDS:
            raise ValueError(f"Unknown acceptance function '{self.kind}', expected one of {ACCEPTANCE_KINDS}")
        if self.kind == CONSTANT:
            if not 0.0 <= self.parameter <= 1.0:
                raise ValueError(f"Constant acceptance needs 0 <= c <= 1, got {self.parameter}")
        elif self.parameter <= 0:
            raise ValueError(f"{self.kind} acceptance needs p > 0, got {self.parameter}")

    @classmethod
    def linear(cls, p: float) -> 'AcceptanceFunction':
        return cls(LINEAR, p)

    @classmethod
    def step(cls, p: float) -> 'AcceptanceFunction':
        return cls(STEP, p)

    @classmethod
    def constant(cls, c: float) -> 'AcceptanceFunction':
        return cls(CONSTANT, c)

    def __call__(self, x):
        """Evaluate f on a scalar or an array of costs"""
        x = np.asarray(x, dtype=float)
        if self.kind == LINEAR:
            values = np.clip(1.0 - x / (2.0 * self.parameter), 0.0, 1.0)
        elif self.kind == STEP:
            # knot is measure-zero: accept strictly below p
            values = (x < self.parameter).astype(float)
        else:
            values = np.full(x.shape, float(self.parameter))
        return values if values.ndim else float(values)

    def accepts(self, x, u):
        """Vectorized decision: True where u < f(x)"""
        if self.kind == STEP:
            return np.asarray(x) < self.parameter
        return np.asarray(u) < self(x)

    def mean_acceptance(self) -> float:
        """Acceptance probability of a random offer when costs are uniform on [0, 1]"""
        if self.kind == CONSTANT:
            return float(self.parameter)
        p = self.parameter
        if self.kind == LINEAR:
            # the ramp reaches zero at 2p; beyond x = 1 it is cut off
            return float(p if p <= 0.5 else 1.0 - 1.0 / (4.0 * p))
        return float(min(p, 1.0))


@dataclass(frozen=True)
class CostMatrix:
    """Sampled market state: buyer costs x (M x columns) and ascending vendor costs y (N)"""
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        y = np.array(self.y, dtype=float)
        if x.ndim != 2 or y.ndim != 1:
            raise ValueError("x must be 2-D and y 1-D")
        if x.shape[1] > y.shape[0]:
            raise ValueError(f"x has {x.shape[1]} columns but only {y.shape[0]} vendor costs")
        if np.any(np.diff(y) <= 0):
            raise ValueError("vendor costs must be strictly ascending")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, 'x', x)
        object.__setattr__(self, 'y', y)

    @property
    def M(self) -> int:
        return self.x.shape[0]

    @property
    def N(self) -> int:
        return self.y.shape[0]


@dataclass(frozen=True)
class SaleOutcome:
    """Items sold per offered variant and the resulting profit"""
    counts: np.ndarray
    k: int
    profit: float

    @property
    def total_sale(self) -> int:
        return int(np.sum(self.counts))


def realization_rng(master_seed: int, realization: int) -> np.random.Generator:
    """Independent generator for one realization, derived from the master seed by counter"""
    sequence = np.random.SeedSequence(int(master_seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(realization),))
    return np.random.default_rng(sequence)


def sorted_distinct(values: np.ndarray, rng: np.random.Generator, draw=None) -> np.ndarray:
    """Sort ascending, redrawing any entry that collides with a neighbour"""
    draw = draw or (lambda size: rng.random(size))
    values = np.sort(np.asarray(values, dtype=float))
    collisions = np.flatnonzero(np.diff(values) <= 0)
    while collisions.size:
        logger.debug("Redrawing %d tied vendor costs", collisions.size)
        values[collisions + 1] = draw(collisions.size)
        values = np.sort(values)
        collisions = np.flatnonzero(np.diff(values) <= 0)
    return values


def sample_uncorrelated(params: MarketParams, seed: int, columns: Optional[int] = None) -> CostMatrix:
    """Draw iid uniform buyer and vendor costs; vendor costs are renumbered in ascending order

    Buyer costs are iid, so sampling only the first `columns` variants gives the same
    distribution for those variants as sampling all N.
    """
    columns = params.N if columns is None else int(columns)
    if not 0 <= columns <= params.N:
        raise ValueError(f"columns must lie in [0, {params.N}], got {columns}")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF))
    return draw_uncorrelated(params, rng, columns)


def draw_uncorrelated(params: MarketParams, rng: np.random.Generator, columns: int) -> CostMatrix:
    y = sorted_distinct(rng.random(params.N), rng)
    x = rng.random((params.M, columns))
    return CostMatrix(x=x, y=y)


def accept(f: AcceptanceFunction, x: float, u: float) -> bool:
    """Single buyer decision on one offered variant"""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"cost must lie in [0, 1], got {x}")
    if not 0.0 <= u < 1.0:
        raise ValueError(f"uniform draw must lie in [0, 1), got {u}")
    return bool(f.accepts(x, u))


def profit(counts: Sequence[float], y: Sequence[float], k: int, Z: float) -> float:
    """Vendor profit: sum of n_alpha (1 - y_alpha) over the k offered variants minus kZ"""
    counts = np.asarray(counts, dtype=float)
    if k == 0:
        if counts.size:
            raise ValueError("an idle vendor (k=0) cannot have sales")
        return 0.0
    if counts.shape != (k,):
        raise ValueError(f"expected {k} sale counts, got shape {counts.shape}")
    y = np.asarray(y, dtype=float)
    if y.shape[0] < k:
        raise ValueError(f"need at least {k} vendor costs, got {y.shape[0]}")
    return float(np.dot(counts, PRICE - y[:k]) - k * Z)


def sale_outcome(counts: Sequence[int], y: Sequence[float], Z: float, M: Optional[int] = None) -> SaleOutcome:
    """Bundle sale counts with their profit, checking that no buyer bought twice"""
    counts = np.asarray(counts, dtype=np.int64)
    if np.any(counts < 0):
        raise ValueError("sale counts must be non-negative")
    if M is not None and counts.sum() > M:
        raise ValueError(f"{counts.sum()} items sold to only {M} buyers")
    k = counts.shape[0]
    return SaleOutcome(counts=counts, k=k, profit=profit(counts, y, k, Z))
