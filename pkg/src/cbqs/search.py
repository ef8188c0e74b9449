"""Stochastic simulation of the Grover search schedules with oracle-call accounting.

A measurement after ``j`` Grover iterates returns a good state with probability
``sin^2((2j + 1) asin(sqrt(a)))``, where ``a`` is the good-state mass of the
prepared distribution.  Given the outcome, the measured sample is drawn from
the sampler's distribution conditioned on good (or bad).  ``a`` is either
computed exactly from the enumerated decision tree, or estimated from
``n_est`` samples.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .problem import ProblemInstance, eval_objective, violation
from .sampler import (DEFAULT_EXACT_CAP, BiasProfile, Sample, SamplerConfig, sample, sample_batch,
                      samples_from_batch, support_tree, supports_batch)

log = logging.getLogger(__name__)

EXACT = "exact"
EMPIRICAL = "empirical"


@dataclass(frozen=True)
class SearchConfig:
    d: float = 1.2
    M: int = 1200
    amplitude_mode: str = EXACT
    n_est: int = 1000
    seed: int | None = None
    retarget: bool = True
    # add one call per round for the initial preparation
    count_initial_prep: bool = False
    sampler: SamplerConfig = SamplerConfig()
    exact_cap: int = DEFAULT_EXACT_CAP
    batch_size: int = 512

    def __post_init__(self):
        if not 1.0 < self.d < 2.0:
            raise ValueError(f"schedule base d must lie in (1, 2), got {self.d}")
        if self.M < 0:
            raise ValueError("budget M must be non-negative")
        if self.n_est < 1:
            raise ValueError("n_est must be at least 1")
        if self.amplitude_mode not in (EXACT, EMPIRICAL):
            raise ValueError(f"unknown amplitude mode {self.amplitude_mode!r}")


# --------------------------------------------------------------------------
# predicates
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ObjectiveAbove:
    """Feasible with objective strictly above ``threshold`` (``None``: any feasible)."""

    threshold: int | None = None

    def __call__(self, s: Sample) -> bool:
        return s.violation == 0 and (self.threshold is None or s.objective > self.threshold)

    def mask(self, objective: np.ndarray, viol: np.ndarray) -> np.ndarray:
        ok = viol == 0
        if self.threshold is not None:
            ok &= objective > self.threshold
        return np.asarray(ok, dtype=bool)


@dataclass(frozen=True)
class ViolationAbove:
    threshold: int

    def __call__(self, s: Sample) -> bool:
        return s.violation > self.threshold

    def mask(self, objective: np.ndarray, viol: np.ndarray) -> np.ndarray:
        return np.asarray(viol > self.threshold, dtype=bool)


Predicate = Callable[[Sample], bool]


# --------------------------------------------------------------------------
# schedule
# --------------------------------------------------------------------------

def success_probability(a: float, j: int) -> float:
    return math.sin((2 * j + 1) * math.asin(math.sqrt(a))) ** 2


def schedule_round(l: int, d: float, rng: np.random.Generator) -> int:
    """Iteration count ``j`` for round ``l`` (1-based)."""
    m = math.ceil(d ** l)
    return int(rng.integers(1, m + 1))


def simulate_schedule(a: float, d: float, budget: float, rng: np.random.Generator,
                      extra_per_round: int = 0) -> tuple[int, bool, int]:
    """Run the schedule until a good measurement or ``m_tot >= budget``.

    Returns ``(m_tot, success, rounds)``.
    """
    m_tot, l = 0, 0
    while True:
        l += 1
        j = schedule_round(l, d, rng)
        m_tot += 2 * j + 1 + extra_per_round
        if rng.random() < success_probability(a, j):
            return m_tot, True, l
        if m_tot >= budget:
            return m_tot, False, l


# --------------------------------------------------------------------------
# prepared distributions
# --------------------------------------------------------------------------

class _ExactDistribution:
    def __init__(self, instance: ProblemInstance, bias: BiasProfile, config: SearchConfig):
        self.tree = support_tree(instance, config.sampler, config.exact_cap)
        self.bias = bias
        self.probs = self.tree.probabilities(bias)

    def mask(self, predicate: Predicate) -> np.ndarray:
        if hasattr(predicate, "mask"):
            return predicate.mask(self.tree.objective, self.tree.violation)
        return np.array([predicate(self.tree.leaf_sample(i, self.bias)) for i in range(self.tree.size)],
                        dtype=bool)

    def amplitude(self, mask: np.ndarray) -> float:
        return float(min(1.0, self.probs[mask].sum()))

    def draw(self, mask: np.ndarray, rng: np.random.Generator) -> Sample | None:
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            return None
        w = self.probs[idx]
        i = idx[rng.choice(idx.size, p=w / w.sum())] if idx.size > 1 else idx[0]
        return self.tree.leaf_sample(int(i), self.bias)


class _EmpiricalDistribution:
    """Estimates ``a`` from ``n_est`` fresh samples; conditional draws by rejection."""

    def __init__(self, instance: ProblemInstance, bias: BiasProfile, config: SearchConfig,
                 rng: np.random.Generator):
        self.instance, self.bias, self.config, self.rng = instance, bias, config, rng
        self.batched = supports_batch(instance)
        self.pool = self._draw(config.n_est)

    def _draw(self, size: int) -> list[Sample]:
        if self.batched:
            out: list[Sample] = []
            while len(out) < size:
                chunk = min(self.config.batch_size, size - len(out))
                out.extend(samples_from_batch(sample_batch(self.instance, self.bias, self.rng, chunk)))
            return out
        return [sample(self.instance, self.bias, self.rng, self.config.sampler) for _ in range(size)]

    def mask(self, predicate: Predicate) -> np.ndarray:
        return np.array([bool(predicate(s)) for s in self.pool], dtype=bool)

    def amplitude(self, mask: np.ndarray) -> float:
        count = int(mask.sum())
        if count == 0:
            return 1.0 / (4 * self.config.n_est)
        return count / self.config.n_est

    def draw_matching(self, predicate: Predicate, want: bool, pool_mask: np.ndarray,
                      rng: np.random.Generator) -> Sample | None:
        tries = 10 * self.config.n_est
        while tries > 0:
            chunk = min(self.config.batch_size, tries)
            for s in self._draw(chunk):
                if bool(predicate(s)) is want:
                    return s
            tries -= chunk
        # fall back to the estimation pool
        idx = np.flatnonzero(pool_mask == want)
        if idx.size:
            return self.pool[int(idx[rng.integers(idx.size)])]
        return None


def _prepare(instance, bias, config, rng):
    if config.amplitude_mode == EXACT:
        return _ExactDistribution(instance, bias, config)
    return _EmpiricalDistribution(instance, bias, config, rng)


def amplitude(instance: ProblemInstance, bias: BiasProfile, predicate: Predicate, config: SearchConfig,
              rng: np.random.Generator | None = None) -> float:
    """Good-state mass of the prepared distribution."""
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    dist = _prepare(instance, bias, config, rng)
    return dist.amplitude(dist.mask(predicate))


# --------------------------------------------------------------------------
# QSearch and variants
# --------------------------------------------------------------------------

@dataclass
class QSearchResult:
    sample: Sample
    m_tot: int
    success: bool
    round_costs: list[int]


def _qsearch(instance: ProblemInstance, bias: BiasProfile, predicate: Predicate, config: SearchConfig,
             rng: np.random.Generator, require_feasible: bool) -> QSearchResult:
    dist = _prepare(instance, bias, config, rng)
    mask = dist.mask(predicate)
    a = dist.amplitude(mask)
    extra = 1 if config.count_initial_prep else 0
    m_tot, l, costs = 0, 0, []
    while True:
        l += 1
        j = schedule_round(l, config.d, rng)
        cost = 2 * j + 1 + extra
        m_tot += cost
        costs.append(cost)
        good = rng.random() < success_probability(a, j)
        if isinstance(dist, _ExactDistribution):
            s = dist.draw(mask if good else ~mask, rng) or dist.draw(~mask if good else mask, rng)
        else:
            s = (dist.draw_matching(predicate, good, mask, rng)
                 or dist.draw_matching(predicate, not good, mask, rng))
        if s is None:
            raise RuntimeError("prepared distribution produced no sample")
        stop = bool(predicate(s)) and (s.feasible if require_feasible else True)
        if stop or m_tot >= config.M:
            return QSearchResult(s, m_tot, stop, costs)


def qsearch(instance: ProblemInstance, bias: BiasProfile, predicate: Predicate, config: SearchConfig,
            rng: np.random.Generator) -> tuple[Sample, int, bool]:
    """Exponential search until a good, feasible measurement or the budget runs out."""
    r = _qsearch(instance, bias, predicate, config, rng, require_feasible=True)
    return r.sample, r.m_tot, r.success


def qsearch_violation(instance: ProblemInstance, bias: BiasProfile, T: int, config: SearchConfig,
                      rng: np.random.Generator) -> tuple[Sample, int, int]:
    """Search for a measurement whose total violation exceeds ``T``."""
    r = _qsearch(instance, bias, ViolationAbove(T), config, rng, require_feasible=False)
    return r.sample, r.sample.violation, r.m_tot


# --------------------------------------------------------------------------
# maximum finding
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Incumbent:
    m_tot: int
    value: int
    x: tuple[int, ...]
    stage: int
    feasible: bool


@dataclass
class SearchTrace:
    m_tot: int = 0
    incumbents: list[Incumbent] = field(default_factory=list)
    stage_marks: list[int] = field(default_factory=list)
    round_costs: list[int] = field(default_factory=list)
    qsearch_calls: int = 0

    @property
    def found_feasible(self) -> bool:
        return any(inc.feasible for inc in self.incumbents)

    @property
    def best(self) -> Incumbent | None:
        return self.incumbents[-1] if self.incumbents else None

    def calls_to_reach(self, value: int) -> int | None:
        """``m_tot`` when a feasible incumbent first reached ``value``."""
        for inc in self.incumbents:
            if inc.feasible and inc.value >= value:
                return inc.m_tot
        return None

    def _spend(self, r: QSearchResult):
        self.m_tot += r.m_tot
        self.round_costs.extend(r.round_costs)
        self.qsearch_calls += 1


def _rng(config: SearchConfig, rng):
    return rng if rng is not None else np.random.default_rng(config.seed)


def _maximize(instance, config, rng, trace: SearchTrace, bias: BiasProfile, T: int | None) -> SearchTrace:
    while True:
        r = _qsearch(instance, bias, ObjectiveAbove(T), config, rng, require_feasible=True)
        trace._spend(r)
        if not r.success:
            return trace
        T = r.sample.objective
        trace.incumbents.append(Incumbent(trace.m_tot, T, r.sample.x, 2, True))
        if config.retarget:
            bias = BiasProfile.toward(r.sample.x)


def qmaxsearch(instance: ProblemInstance, config: SearchConfig,
               rng: np.random.Generator | None = None) -> SearchTrace:
    """Repeated QSearch with a rising objective threshold.

    The first call accepts any feasible measurement.  An empty trace means no
    feasible sample was ever measured.
    """
    rng = _rng(config, rng)
    trace = SearchTrace()
    if config.M == 0:
        return trace
    return _maximize(instance, config, rng, trace, BiasProfile.zeros(instance.n), None)


def qmaxsearch_two_stage(instance: ProblemInstance, config: SearchConfig,
                         rng: np.random.Generator | None = None) -> SearchTrace:
    """Search on total violation until a feasible sample appears, then on the objective."""
    rng = _rng(config, rng)
    trace = SearchTrace()
    x0 = (0,) * instance.n
    bias = BiasProfile.zeros(instance.n)
    T = violation(instance, x0)
    if T == 0:
        trace.incumbents.append(Incumbent(0, eval_objective(instance, x0), x0, 2, True))
        trace.stage_marks.append(0)
        if config.M == 0:
            return trace
        return _maximize(instance, config, rng, trace, bias, eval_objective(instance, x0))
    trace.incumbents.append(Incumbent(0, T, x0, 1, False))
    if config.M == 0:
        return trace
    while True:
        r = _qsearch(instance, bias, ViolationAbove(T), config, rng, require_feasible=False)
        trace._spend(r)
        V = r.sample.violation
        if V <= T:
            log.debug("stage 1 exhausted its budget at violation %s", T)
            return trace
        if config.retarget:
            bias = BiasProfile.toward(r.sample.x)
        if V == 0:
            trace.stage_marks.append(trace.m_tot)
            T2 = r.sample.objective
            trace.incumbents.append(Incumbent(trace.m_tot, T2, r.sample.x, 2, True))
            return _maximize(instance, config, rng, trace, bias, T2)
        T = V
        trace.incumbents.append(Incumbent(trace.m_tot, V, r.sample.x, 1, False))
