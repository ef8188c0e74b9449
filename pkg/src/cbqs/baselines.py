"""Classical reference solvers: exhaustive enumeration and simulated annealing."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dense import evaluate_batch
from .problem import Polynomial, ProblemInstance, eval_polynomial, eval_product_part

BRUTE_FORCE_CAP = 24
_CHUNK_BITS = 16


def _rows(start: int, stop: int, n: int) -> np.ndarray:
    # x_1 is the most significant bit, so row order is lexicographic order
    r = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((r[:, None] >> shifts) & 1).astype(np.int8)


@dataclass(frozen=True)
class Enumeration:
    optimum: int | None
    argmax: tuple[int, ...] | None
    optimal_count: int
    feasible_count: int


def enumerate_instance(instance: ProblemInstance, cap: int = BRUTE_FORCE_CAP) -> Enumeration:
    n = instance.n
    if n > cap:
        raise ValueError(f"brute force refused: n={n} exceeds cap {cap}")
    best, best_row, count, feasible = None, None, 0, 0
    total = 1 << n
    step = 1 << _CHUNK_BITS
    for start in range(0, total, step):
        X = _rows(start, min(total, start + step), n)
        obj, caps = evaluate_batch(instance, X)
        ok = np.ones(X.shape[0], dtype=bool) if instance.m == 0 else (caps >= 0).all(axis=1)
        feasible += int(ok.sum())
        if not ok.any():
            continue
        vals = obj[ok]
        top = vals.max()
        hits = np.flatnonzero(ok)[vals == top]
        if best is None or top > best:
            best, best_row, count = int(top), tuple(int(b) for b in X[hits[0]]), int(hits.size)
        elif top == best:
            count += int(hits.size)
    return Enumeration(best, best_row, count, feasible)


def brute_force(instance: ProblemInstance, cap: int = BRUTE_FORCE_CAP) -> tuple[tuple[int, ...], int] | None:
    """Lexicographically smallest maximizer among feasible assignments, or ``None`` if infeasible."""
    e = enumerate_instance(instance, cap)
    if e.argmax is None:
        return None
    return e.argmax, e.optimum


# --------------------------------------------------------------------------
# simulated annealing
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SAConfig:
    steps: int = 100_000
    t_max: float = 25_000.0
    t_min: float = 2.5
    penalty_weight: float = 10.0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if not self.t_max > self.t_min > 0:
            raise ValueError("need t_max > t_min > 0")
        if self.penalty_weight <= 0:
            raise ValueError("penalty_weight must be positive")


@dataclass
class SAResult:
    x: tuple[int, ...]
    objective: int
    feasible: bool
    wall_time: float
    # (seconds, step, objective) whenever the best feasible point improves
    timeline: list[tuple[float, int, int]] = field(default_factory=list)


class _Incremental:
    """Tracks one polynomial's value under single-bit flips."""

    def __init__(self, poly: Polynomial):
        self.by_var: list[list[tuple[int, tuple[int, ...]]]] = [[] for _ in range(poly.n)]
        for S, w in poly.terms.items():
            S0 = tuple(j - 1 for j in S)
            for j in S0:
                self.by_var[j].append((w, tuple(o for o in S0 if o != j)))
        self.poly = poly

    def value(self, x: Sequence[int]) -> int:
        return eval_polynomial(self.poly, x)

    def delta(self, x: Sequence[int], i: int) -> int:
        d = 0
        for w, others in self.by_var[i]:
            if all(x[o] for o in others):
                d += w
        return -d if x[i] else d


def simulated_annealing(instance: ProblemInstance, config: SAConfig, rng: np.random.Generator) -> SAResult:
    """Single-flip Metropolis annealing on ``-objective + penalty * |violation|``.

    ``steps`` counts evaluated points including the random start, so
    ``steps=1`` returns the start point.
    """
    t0 = time.perf_counter()
    n = instance.n
    x = [int(b) for b in rng.integers(0, 2, size=n)]
    obj_eval = _Incremental(instance.objective)
    con_eval = [_Incremental(c.poly) for c in instance.constraints]
    caps = [c.cap for c in instance.constraints]
    obj_prod_vars = {j - 1 for p in instance.objective_products for S in p.bases for j in S}
    con_prod_vars = [{j - 1 for p in c.products for S in p.bases for j in S} for c in instance.constraints]

    def full_obj(x):
        return obj_eval.value(x) + eval_product_part(instance.objective_products, x)

    def full_lhs(k, x):
        return con_eval[k].value(x) + eval_product_part(instance.constraints[k].products, x)

    obj = full_obj(x)
    lhs = [full_lhs(k, x) for k in range(instance.m)]

    def energy(obj, lhs):
        viol = sum(min(0, cap - v) for cap, v in zip(caps, lhs))
        return -obj - config.penalty_weight * viol, viol

    E, viol = energy(obj, lhs)
    best_x, best_obj, best_feasible = tuple(x), obj, viol == 0
    best_E = E
    timeline = []
    if best_feasible:
        timeline.append((time.perf_counter() - t0, 0, obj))
    moves = config.steps - 1
    ratio = math.log(config.t_min / config.t_max)
    flips = rng.integers(0, max(n, 1), size=moves) if n else np.zeros(0, dtype=np.int64)
    uniforms = rng.random(moves)
    for s in range(moves):
        if n == 0:
            break
        T = config.t_max * math.exp(ratio * s / max(moves - 1, 1))
        i = int(flips[s])
        if i in obj_prod_vars:
            x[i] ^= 1
            new_obj = full_obj(x)
            x[i] ^= 1
        else:
            new_obj = obj + obj_eval.delta(x, i)
        new_lhs = []
        for k in range(instance.m):
            if i in con_prod_vars[k]:
                x[i] ^= 1
                new_lhs.append(full_lhs(k, x))
                x[i] ^= 1
            else:
                new_lhs.append(lhs[k] + con_eval[k].delta(x, i))
        new_E, new_viol = energy(new_obj, new_lhs)
        dE = new_E - E
        if dE <= 0 or uniforms[s] < math.exp(-dE / T):
            x[i] ^= 1
            obj, lhs, E = new_obj, new_lhs, new_E
            if new_viol == 0 and (not best_feasible or obj > best_obj):
                best_x, best_obj, best_feasible = tuple(x), obj, True
                timeline.append((time.perf_counter() - t0, s + 1, obj))
            elif not best_feasible and E < best_E:
                best_x, best_obj, best_E = tuple(x), obj, E
    return SAResult(best_x, best_obj, best_feasible, time.perf_counter() - t0, timeline)
