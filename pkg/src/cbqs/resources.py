"""Cycle-count model mapping oracle calls to estimated quantum runtime.

All depth formulas count quantum cycles (layers of parallel gates).  The
per-iteration total is a modelling choice, isolated in
:func:`cycles_per_grover_iteration`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problem import ProblemInstance

GATE_TIME_NS = 6.5


def _ceil_log2(v: int) -> int:
    return (v - 1).bit_length()


def _floor_log2(v: int) -> int:
    return v.bit_length() - 1


def ca_cycles(t: int, kappa: int) -> int:
    """Depth of ``t`` consecutive QFT additions on a ``kappa``-qubit register."""
    if t < 0 or kappa < 2:
        raise ValueError("ca_cycles needs t >= 0 and kappa >= 2")
    return t * (2 * _ceil_log2(kappa) + 3)


def ca2_cycles(kappa: int) -> int:
    """Depth of the carry-lookahead adder used for the uncontrolled comparison."""
    if kappa < 4:
        raise ValueError(f"carry-lookahead depth needs kappa >= 4, got {kappa}")
    # floor(log2(a / 3)) == floor(log2(a // 3)) for a >= 3
    return (_floor_log2(kappa) + _floor_log2(kappa - 1) + _floor_log2(kappa // 3)
            + _floor_log2((kappa - 1) // 3) + 14)


def constraint_check_cycles(n: int, kappa: int) -> int:
    if n == 0:
        return 0
    return 2 * n * (ca2_cycles(kappa) + 4 * kappa + 1) + 2 * n * ca_cycles(n, kappa)


def objective_cycles(n: int, kappa: int) -> int:
    return ca_cycles(n * (n + 1) // 2, kappa)


def cycles_per_grover_iteration(n: int, kappa: int) -> int:
    """Model: one preparation and one un-preparation, plus the threshold comparison."""
    prep = constraint_check_cycles(n, kappa) + objective_cycles(n, kappa)
    return 2 * prep + ca2_cycles(kappa)


def derive_kappa(instance: ProblemInstance, minimum: int = 4) -> int:
    """Register width with two's-complement headroom for every ``c_k + P_k``.

    Clamped below at 4 so the carry-lookahead depth is defined.
    """
    top = max((abs(v) for v in instance.initial_capacities()), default=0)
    return max(minimum, 2, top.bit_length() + 1)


@dataclass(frozen=True)
class ResourceModel:
    n: int
    kappa: int
    gate_time_ns: float = GATE_TIME_NS

    def __post_init__(self):
        if self.kappa < 2:
            raise ValueError("kappa must be at least 2")
        if self.gate_time_ns <= 0:
            raise ValueError("gate time must be positive")

    @classmethod
    def for_instance(cls, instance: ProblemInstance, gate_time_ns: float = GATE_TIME_NS) -> ResourceModel:
        return cls(instance.n, derive_kappa(instance), gate_time_ns)

    @property
    def cycles_per_grover_iteration(self) -> int:
        return cycles_per_grover_iteration(self.n, self.kappa)

    def summary(self) -> dict:
        return {"n": self.n, "kappa": self.kappa, "gate_time_ns": self.gate_time_ns,
                "cycles_per_grover_iteration": self.cycles_per_grover_iteration,
                "constraint_check_cycles": constraint_check_cycles(self.n, self.kappa),
                "objective_cycles": objective_cycles(self.n, self.kappa),
                "ca2_cycles": ca2_cycles(self.kappa), "model": True}


def runtime_seconds(oracle_calls: float, model: ResourceModel | int, gate_time_ns: float = GATE_TIME_NS) -> float:
    """Seconds for ``oracle_calls`` Grover iterations.

    ``model`` may be a :class:`ResourceModel` or a raw cycles-per-iteration count.
    """
    if oracle_calls < 0:
        raise ValueError("oracle_calls must be non-negative")
    if isinstance(model, ResourceModel):
        cycles, gate_time_ns = model.cycles_per_grover_iteration, model.gate_time_ns
    else:
        cycles = int(model)
    return oracle_calls * cycles * gate_time_ns * 1e-9


def qbnb_oracle_calls(n: int, tree_nodes: float) -> float:
    """Query count of quantum branch-and-bound with unit constant and no accuracy factor."""
    if n < 1 or tree_nodes < 2:
        raise ValueError("qbnb_oracle_calls needs n >= 1 and T >= 2")
    return math.sqrt(n * tree_nodes) * n * math.log2(n * math.log2(tree_nodes)) ** 2


def budget_M(n: int) -> int:
    """``(n/4)^2 + 1200`` with the square rounded half-up."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return (n * n + 8) // 16 + 1200


def grover_baseline_calls(n: int, good_count: int, trials: int, rng: np.random.Generator,
                          d: float = 1.2, budget: float = math.inf) -> float:
    """Mean oracle calls of the exponential-search schedule on an unbiased uniform state."""
    if good_count <= 0 or good_count > 2 ** n:
        raise ValueError(f"good_count must lie in 1..2^n, got {good_count}")
    from .search import simulate_schedule

    a = good_count / 2 ** n
    total = 0
    for _ in range(trials):
        total += simulate_schedule(a, d, budget, rng)[0]
    return total / trials
