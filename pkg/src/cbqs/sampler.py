"""Classical emulation of the constraint-propagating state preparation.

Variables are assigned in index order.  Before assigning ``x_t`` the sampler
computes, per constraint, the weight that each choice would close (``Q+`` for
``x_t = 1``, ``Q-`` for ``x_t = 0``) and checks whether each successor is still
potentially satisfiable.  The four oracle actions then become:

1. both successors viable: draw ``x_t`` from the bias profile,
2. only ``x_t = 1`` viable: set the bit,
3. only ``x_t = 0`` viable: leave the bit at 0 (weights for 0 are consumed),
4. neither viable: leave everything untouched and mark the path dead.

Dead paths keep all later bits at 0.  Capacities and product registers are
exact Python integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .dense import SAFE_BOUND, evaluate_batch
from .problem import (Assignment, ProblemInstance, ProductTerm, check_int128, eval_objective,
                      remaining_capacities, violation_of_caps)

LB_CASES = "paper"
LB_TIGHT = "tight"
CHECK_EXACT = "exact"
CHECK_STRUCTURAL = "structural"

DEFAULT_EXACT_CAP = 24


@dataclass(frozen=True)
class SamplerConfig:
    """``lb_mode``: lower-bound rule for product terms.  ``product_check``:
    ``exact`` uses the assigned values when deciding which bases are still
    open; ``structural`` only looks at whether all members are assigned."""

    lb_mode: str = LB_TIGHT
    product_check: str = CHECK_EXACT

    def __post_init__(self):
        if self.lb_mode not in (LB_CASES, LB_TIGHT):
            raise ValueError(f"unknown lb_mode {self.lb_mode!r}")
        if self.product_check not in (CHECK_EXACT, CHECK_STRUCTURAL):
            raise ValueError(f"unknown product_check {self.product_check!r}")


DEFAULT_CONFIG = SamplerConfig()


# --------------------------------------------------------------------------
# bias
# --------------------------------------------------------------------------

def bias_angles(n: int) -> tuple[float, float]:
    """Rotation angles for target bits 0 and 1."""
    theta0 = 2.0 * math.acos(math.sqrt((n + 4) / (n + 8)))
    theta1 = 2.0 * math.acos(math.sqrt(4 / (n + 8)))
    return theta0, theta1


@dataclass(frozen=True)
class BiasProfile:
    n: int
    target: Assignment
    p_one: tuple[float, ...]

    @classmethod
    def toward(cls, target: Sequence[int], n: int | None = None) -> BiasProfile:
        target = tuple(int(b) for b in target)
        n = len(target) if n is None else n
        if len(target) != n:
            raise ValueError("target length differs from n")
        lo, hi = 4 / (n + 8), (n + 4) / (n + 8)
        return cls(n, target, tuple(hi if b else lo for b in target))

    @classmethod
    def zeros(cls, n: int) -> BiasProfile:
        return cls.toward((0,) * n, n)

    @classmethod
    def uniform(cls, n: int, p: float = 0.5) -> BiasProfile:
        return cls(n, (0,) * n, (p,) * n)

    def __post_init__(self):
        if len(self.p_one) != self.n:
            raise ValueError("p_one length differs from n")
        if not all(0.0 < p < 1.0 for p in self.p_one):
            raise ValueError("bit probabilities must lie strictly between 0 and 1")


# --------------------------------------------------------------------------
# state
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SampleState:
    bits: Assignment
    caps: tuple[int, ...]
    fixed_products: tuple[tuple[int, ...], ...]
    dead: bool = False
    logprob: float = 0.0

    @property
    def t(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class Sample:
    x: Assignment
    caps: tuple[int, ...]
    objective: int
    violation: int
    logprob: float
    dead: bool = False

    @property
    def feasible(self) -> bool:
        return self.violation == 0


# --------------------------------------------------------------------------
# compiled instance
# --------------------------------------------------------------------------

@dataclass
class _ConstraintPlan:
    pos_close: list[list[tuple[int, tuple[int, ...]]]]
    neg_touch: list[list[tuple[int, tuple[int, ...]]]]
    alphas: tuple[int, ...]
    # per term: list of (members 0-based, base, max member)
    bases: list[list[tuple[tuple[int, ...], int, int]]]
    # per variable: (term, base, other members) for bases whose last member it is
    base_close: list[list[tuple[int, int, tuple[int, ...]]]]


@dataclass
class _Plan:
    n: int
    constraints: list[_ConstraintPlan]
    initial_caps: tuple[int, ...]
    initial_products: tuple[tuple[int, ...], ...]
    has_products: bool


def _plan_for(instance: ProblemInstance) -> _Plan:
    cached = instance.__dict__.get("_sampler_plan")
    if cached is not None:
        return cached
    n = instance.n
    plans = []
    for c in instance.constraints:
        pos_close = [[] for _ in range(n)]
        neg_touch = [[] for _ in range(n)]
        for S, w in c.poly.terms.items():
            S0 = tuple(j - 1 for j in S)
            if w >= 0:
                pos_close[S0[-1]].append((w, S0[:-1]))
            else:
                for pos, j in enumerate(S0):
                    neg_touch[j].append((-w, S0[:pos]))
        bases, base_close = [], [[] for _ in range(n)]
        for i, term in enumerate(c.products):
            items = []
            for S, b in term.bases.items():
                S0 = tuple(j - 1 for j in S)
                items.append((S0, b, S0[-1]))
                base_close[S0[-1]].append((i, b, S0[:-1]))
            bases.append(items)
        plans.append(_ConstraintPlan(pos_close, neg_touch, tuple(t.alpha for t in c.products), bases,
                                     base_close))
    plan = _Plan(n, plans, instance.initial_capacities(),
                 tuple((1,) * len(c.products) for c in instance.constraints),
                 any(c.products for c in instance.constraints))
    instance.__dict__["_sampler_plan"] = plan
    return plan


def initial_state(instance: ProblemInstance) -> SampleState:
    plan = _plan_for(instance)
    return SampleState((), plan.initial_caps, plan.initial_products)


# --------------------------------------------------------------------------
# Q+ / Q- and product lower bounds
# --------------------------------------------------------------------------

def _q_plus(cp: _ConstraintPlan, t: int, bits: Sequence[int]) -> int:
    total = 0
    for w, others in cp.pos_close[t]:
        if all(bits[j] for j in others):
            total += w
    return check_int128(total)


def _q_minus(cp: _ConstraintPlan, t: int, bits: Sequence[int]) -> int:
    total = 0
    for w, prefix in cp.neg_touch[t]:
        if all(bits[j] for j in prefix):
            total += w
    return check_int128(total)


def q_plus(instance: ProblemInstance, k: int, t1: int, bits: Sequence[int]) -> int:
    """Weight of non-negative terms of constraint ``k`` closed with value 1 by ``x_{t1} = 1``.

    ``k`` is 0-based, ``t1`` is the 1-based index of the variable being set.
    """
    return _q_plus(_plan_for(instance).constraints[k], t1 - 1, bits)


def q_minus(instance: ProblemInstance, k: int, t1: int, bits: Sequence[int]) -> int:
    """Weight of negative terms of constraint ``k`` closed with value 0 by ``x_{t1} = 0``."""
    return _q_minus(_plan_for(instance).constraints[k], t1 - 1, bits)


def _drop_closest_negative(values: list[int]) -> list[int]:
    neg = max((v for v in values if v < 0))
    out = list(values)
    out.remove(neg)
    return out


def _prod(values) -> int:
    out = 1
    for v in values:
        out *= v
    return out


def lower_bound(alpha: int, remaining: Sequence[int], g: int, mode: str = LB_TIGHT) -> int:
    """Product of a chosen subset of the remaining bases.

    ``paper`` mode follows the six-case rule keyed on the sign of ``g`` and the
    parity of the negative remaining bases.  ``tight`` mode chooses the subset
    that minimises ``alpha * g * product``.
    """
    remaining = list(remaining)
    negatives = sum(1 for b in remaining if b < 0)
    if mode == LB_CASES:
        if negatives == 0:
            return _prod(remaining) if g < 0 else 1
        if negatives % 2 == 0:
            return _prod(remaining)
        return _prod(_drop_closest_negative(remaining))
    if mode != LB_TIGHT:
        raise ValueError(f"unknown lb mode {mode!r}")
    if alpha * g < 0:
        # largest positive product
        if negatives % 2 == 0:
            return _prod(remaining)
        return _prod(_drop_closest_negative(remaining))
    # most negative product, or 1 if none can be negative
    if negatives == 0:
        return 1
    if negatives % 2 == 1:
        return _prod(remaining)
    return _prod(_drop_closest_negative(remaining))


def _is_remaining(S0: tuple[int, ...], last: int, t: int, bits: Sequence[int], check: str) -> bool:
    # bits[0..t] assigned
    if last <= t:
        return False
    if check == CHECK_STRUCTURAL:
        return True
    return all(bits[j] for j in S0 if j <= t)


def product_lb(term: ProductTerm, bits: Sequence[int], g: int, mode: str = LB_TIGHT,
               check: str = CHECK_EXACT) -> int:
    """Lower-bound factor for ``term`` given the partial assignment ``bits``."""
    t = len(bits) - 1
    remaining = []
    for S, b in term.bases.items():
        S0 = tuple(j - 1 for j in S)
        if _is_remaining(S0, S0[-1], t, bits, check):
            remaining.append(b)
    return lower_bound(term.alpha, remaining, g, mode)


def _updated_products(cp: _ConstraintPlan, g: tuple[int, ...], t: int, bit: int,
                      bits: Sequence[int]) -> tuple[int, ...]:
    if not bit or not cp.base_close[t]:
        # closing through a zero contributes pow(b, 0) = 1
        return g
    out = list(g)
    for i, b, others in cp.base_close[t]:
        if all(bits[j] for j in others):
            out[i] *= b
    return tuple(out)


def fixed_product_update(instance: ProblemInstance, state: SampleState, t1: int, bit: int) -> SampleState:
    """Fold bases closed by ``x_{t1} = bit`` into the fixed product registers."""
    plan = _plan_for(instance)
    t = t1 - 1
    fixed = tuple(_updated_products(cp, g, t, bit, state.bits)
                  for cp, g in zip(plan.constraints, state.fixed_products))
    return replace(state, fixed_products=fixed)


def _product_side(cp: _ConstraintPlan, g: tuple[int, ...], t: int, bits: Sequence[int],
                  config: SamplerConfig) -> int:
    """``sum_i alpha_i g_i LB_i`` with ``bits[0..t]`` assigned."""
    total = 0
    for i, alpha in enumerate(cp.alphas):
        remaining = [b for S0, b, last in cp.bases[i] if _is_remaining(S0, last, t, bits, config.product_check)]
        total += alpha * g[i] * lower_bound(alpha, remaining, g[i], config.lb_mode)
    return total


@dataclass(frozen=True)
class BranchInfo:
    b_plus: bool
    b_minus: bool
    q_plus: tuple[int, ...]
    q_minus: tuple[int, ...]
    products_one: tuple[tuple[int, ...], ...]
    products_zero: tuple[tuple[int, ...], ...]


def _branches(plan: _Plan, state: SampleState, t: int, config: SamplerConfig) -> BranchInfo:
    bits = state.bits
    b_plus = b_minus = True
    qp, qm, g1s, g0s = [], [], [], []
    bits1 = bits + (1,)
    bits0 = bits + (0,)
    for cp, cap, g in zip(plan.constraints, state.caps, state.fixed_products):
        p = _q_plus(cp, t, bits)
        q = _q_minus(cp, t, bits)
        qp.append(p)
        qm.append(q)
        if cp.alphas:
            g1 = _updated_products(cp, g, t, 1, bits)
            g1s.append(g1)
            g0s.append(g)
            # mixed constraints compare the product bound against what the
            # polynomial part leaves over
            if b_plus and _product_side(cp, g1, t, bits1, config) > cap - p:
                b_plus = False
            if b_minus and _product_side(cp, g, t, bits0, config) > cap - q:
                b_minus = False
        else:
            g1s.append(g)
            g0s.append(g)
            if p > cap:
                b_plus = False
            if q > cap:
                b_minus = False
    return BranchInfo(b_plus, b_minus, tuple(qp), tuple(qm), tuple(g1s), tuple(g0s))


def branch_flags(instance: ProblemInstance, state: SampleState, t1: int,
                 config: SamplerConfig = DEFAULT_CONFIG) -> tuple[bool, bool]:
    if t1 != state.t + 1:
        raise ValueError(f"t1={t1} but {state.t} bits are assigned")
    info = _branches(_plan_for(instance), state, t1 - 1, config)
    return info.b_plus, info.b_minus


def _assign(state: SampleState, bit: int, info: BranchInfo, logp: float) -> SampleState:
    q = info.q_plus if bit else info.q_minus
    return SampleState(state.bits + (bit,), tuple(c - d for c, d in zip(state.caps, q)),
                       info.products_one if bit else info.products_zero, False, state.logprob + logp)


def _dead_step(state: SampleState) -> SampleState:
    return SampleState(state.bits + (0,), state.caps, state.fixed_products, True, state.logprob)


def step(instance: ProblemInstance, state: SampleState, t1: int, bias: BiasProfile, rng: np.random.Generator,
         config: SamplerConfig = DEFAULT_CONFIG) -> SampleState:
    if t1 != state.t + 1:
        raise ValueError(f"t1={t1} but {state.t} bits are assigned")
    if state.dead:
        return _dead_step(state)
    info = _branches(_plan_for(instance), state, t1 - 1, config)
    if info.b_plus and info.b_minus:
        p = bias.p_one[t1 - 1]
        if rng.random() < p:
            return _assign(state, 1, info, math.log(p))
        return _assign(state, 0, info, math.log1p(-p))
    if info.b_plus:
        return _assign(state, 1, info, 0.0)
    if info.b_minus:
        return _assign(state, 0, info, 0.0)
    return _dead_step(state)


def final_caps(instance: ProblemInstance, state: SampleState) -> tuple[int, ...]:
    """Capacity registers after subtracting the fully fixed product terms."""
    plan = _plan_for(instance)
    out = []
    for cp, cap, g in zip(plan.constraints, state.caps, state.fixed_products):
        out.append(cap - sum(a * gi for a, gi in zip(cp.alphas, g)))
    return tuple(out)


def finish(instance: ProblemInstance, state: SampleState) -> Sample:
    if state.t != instance.n:
        raise ValueError("state is not complete")
    x = state.bits
    # a dead path's registers are stale, so its capacities come from x directly
    caps = remaining_capacities(instance, x) if state.dead else final_caps(instance, state)
    return Sample(x, caps, eval_objective(instance, x), violation_of_caps(caps), state.logprob, state.dead)


def sample(instance: ProblemInstance, bias: BiasProfile, rng: np.random.Generator,
           config: SamplerConfig = DEFAULT_CONFIG) -> Sample:
    state = initial_state(instance)
    for t1 in range(1, instance.n + 1):
        state = step(instance, state, t1, bias, rng, config)
    return finish(instance, state)


# --------------------------------------------------------------------------
# exhaustive expansion
# --------------------------------------------------------------------------

NodeVisitor = Callable[[SampleState, int, BranchInfo, Sequence[SampleState]], None]


def expand_tree(instance: ProblemInstance, config: SamplerConfig = DEFAULT_CONFIG,
                visit: NodeVisitor | None = None,
                cap: int = DEFAULT_EXACT_CAP) -> list[tuple[SampleState, tuple[bool, ...]]]:
    """Every leaf of the decision tree, with the positions where it branched.

    The tree shape does not depend on the bias, only leaf probabilities do.
    ``visit(state, t1, info, children)`` is called at every live inner node.
    """
    if instance.n > cap:
        raise ValueError(f"exhaustive expansion refused: n={instance.n} exceeds cap {cap}")
    plan = _plan_for(instance)
    n = instance.n
    leaves: list[tuple[SampleState, tuple[bool, ...]]] = []

    def walk(state: SampleState, branched: tuple[bool, ...]):
        t = state.t
        if t == n:
            leaves.append((state, branched))
            return
        if state.dead:
            walk(_dead_step(state), branched + (False,))
            return
        info = _branches(plan, state, t, config)
        if info.b_plus and info.b_minus:
            children = (_assign(state, 0, info, 0.0), _assign(state, 1, info, 0.0))
            fork = True
        elif info.b_plus:
            children, fork = (_assign(state, 1, info, 0.0),), False
        elif info.b_minus:
            children, fork = (_assign(state, 0, info, 0.0),), False
        else:
            children, fork = (_dead_step(state),), False
        if visit is not None:
            visit(state, t + 1, info, children)
        for child in children:
            walk(child, branched + (fork,))

    walk(initial_state(instance), ())
    return leaves


@dataclass
class SupportTree:
    """Bias-independent shape of the sampler's decision tree."""

    instance: ProblemInstance
    bits: np.ndarray          # (L, n) int8
    branched: np.ndarray      # (L, n) bool
    dead: np.ndarray          # (L,) bool
    caps: np.ndarray          # (L, m) true remaining capacities
    register_caps: list       # final capacity registers per leaf
    objective: np.ndarray
    violation: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return self.bits.shape[0]

    def logprobs(self, bias: BiasProfile) -> np.ndarray:
        key = ("logp", bias.p_one)
        if key not in self._cache:
            p = np.asarray(bias.p_one, dtype=float)
            log1 = np.log(p) if p.size else p
            log0 = np.log1p(-p) if p.size else p
            terms = np.where(self.bits == 1, log1, log0)
            self._cache.clear()
            self._cache[key] = np.where(self.branched, terms, 0.0).sum(axis=1)
        return self._cache[key]

    def probabilities(self, bias: BiasProfile) -> np.ndarray:
        return np.exp(self.logprobs(bias))

    def assignment(self, i: int) -> Assignment:
        return tuple(int(b) for b in self.bits[i])

    def leaf_sample(self, i: int, bias: BiasProfile) -> Sample:
        return Sample(self.assignment(i), tuple(int(c) for c in self.caps[i]), int(self.objective[i]),
                      int(self.violation[i]), float(self.logprobs(bias)[i]), bool(self.dead[i]))


def support_tree(instance: ProblemInstance, config: SamplerConfig = DEFAULT_CONFIG,
                 cap: int = DEFAULT_EXACT_CAP) -> SupportTree:
    key = ("_support_tree", config)
    cached = instance.__dict__.get(key)
    if cached is not None:
        return cached
    leaves = expand_tree(instance, config, cap=cap)
    n, m = instance.n, instance.m
    bits = np.array([s.bits for s, _ in leaves], dtype=np.int8).reshape(len(leaves), n)
    branched = np.array([b for _, b in leaves], dtype=bool).reshape(len(leaves), n)
    dead = np.array([s.dead for s, _ in leaves], dtype=bool)
    obj, caps = evaluate_batch(instance, bits)
    caps = caps.reshape(len(leaves), m)
    if caps.dtype == object:
        viol = np.array([violation_of_caps(row) for row in caps], dtype=object)
    else:
        viol = np.minimum(caps, 0).sum(axis=1)
    registers = [None if s.dead else final_caps(instance, s) for s, _ in leaves]
    tree = SupportTree(instance, bits, branched, dead, caps, registers, obj, viol)
    instance.__dict__[key] = tree
    return tree


def exact_support(instance: ProblemInstance, bias: BiasProfile, config: SamplerConfig = DEFAULT_CONFIG,
                  cap: int = DEFAULT_EXACT_CAP) -> dict[Assignment, float]:
    tree = support_tree(instance, config, cap)
    probs = tree.probabilities(bias)
    return {tree.assignment(i): float(probs[i]) for i in range(tree.size)}


# --------------------------------------------------------------------------
# vectorized sampling for polynomial-only instances
# --------------------------------------------------------------------------

class _BatchPlan:
    """Dense per-constraint weight tables for the vectorized sampler."""

    def __init__(self, instance: ProblemInstance):
        n, m = instance.n, instance.m
        self.n, self.m = n, m
        self.pos_diag = np.zeros((m, n), dtype=np.int64)
        self.neg_diag = np.zeros((m, n), dtype=np.int64)   # singles plus pairs whose first member is t
        self.pos_pair = np.zeros((n, n, m), dtype=np.int64)  # [i, t, k]: positive pair (i<t)
        self.neg_pair = np.zeros((n, n, m), dtype=np.int64)  # [i, t, k]: negative pair (i<t)
        self.pos_high: list[list[tuple[int, np.ndarray, int]]] = [[] for _ in range(n)]
        self.neg_high: list[list[tuple[int, np.ndarray, int]]] = [[] for _ in range(n)]
        bound = 0
        for k, c in enumerate(instance.constraints):
            bound += abs(c.cap) + sum(abs(w) for w in c.poly.terms.values())
            for S, w in c.poly.terms.items():
                S0 = [j - 1 for j in S]
                if w >= 0:
                    if len(S0) == 1:
                        self.pos_diag[k, S0[0]] += w
                    elif len(S0) == 2:
                        self.pos_pair[S0[0], S0[1], k] += w
                    else:
                        self.pos_high[S0[-1]].append((k, np.asarray(S0[:-1], dtype=np.intp), w))
                else:
                    for pos, j in enumerate(S0):
                        if pos == 0:
                            self.neg_diag[k, j] += -w
                        elif len(S0) == 2:
                            self.neg_pair[S0[0], j, k] += -w
                        else:
                            self.neg_high[j].append((k, np.asarray(S0[:pos], dtype=np.intp), -w))
        self.safe = bound < SAFE_BOUND
        self.initial_caps = np.asarray(instance.initial_capacities(), dtype=np.int64) if self.safe else None


def supports_batch(instance: ProblemInstance) -> bool:
    if instance.has_products:
        return False
    bp = instance.__dict__.get("_batch_plan")
    if bp is None:
        bp = _BatchPlan(instance)
        instance.__dict__["_batch_plan"] = bp
    return bp.safe


def sample_batch(instance: ProblemInstance, bias: BiasProfile, rng: np.random.Generator,
                 size: int) -> dict[str, np.ndarray]:
    """Draw ``size`` independent samples at once.

    Returns arrays ``x`` (size, n), ``caps`` (size, m) register values,
    ``objective``, ``violation``, ``logprob`` and ``dead``.  Same distribution
    as :func:`sample`; only available when :func:`supports_batch` holds.
    """
    if not supports_batch(instance):
        raise ValueError("instance has product terms or coefficients beyond int64 range")
    bp: _BatchPlan = instance.__dict__["_batch_plan"]
    n, m = bp.n, bp.m
    X = np.zeros((size, n), dtype=np.int64)
    caps = np.tile(bp.initial_caps, (size, 1))
    dead = np.zeros(size, dtype=bool)
    logp = np.zeros(size)
    for t in range(n):
        prefix = X[:, :t]
        qp = np.broadcast_to(bp.pos_diag[:, t], (size, m)).copy()
        qm = np.broadcast_to(bp.neg_diag[:, t], (size, m)).copy()
        if t:
            qp += prefix @ bp.pos_pair[:t, t, :]
            qm += prefix @ bp.neg_pair[:t, t, :]
        for k, others, w in bp.pos_high[t]:
            qp[:, k] += w * X[:, others].all(axis=1)
        for k, others, w in bp.neg_high[t]:
            qm[:, k] += w * X[:, others].all(axis=1)
        bplus = (qp <= caps).all(axis=1)
        bminus = (qm <= caps).all(axis=1)
        live = ~dead
        both = live & bplus & bminus
        p = bias.p_one[t]
        draw = rng.random(size) < p
        one = (both & draw) | (live & bplus & ~bminus)
        zero = (both & ~draw) | (live & ~bplus & bminus)
        X[one, t] = 1
        caps[one] -= qp[one]
        caps[zero] -= qm[zero]
        logp[both & draw] += math.log(p)
        logp[both & ~draw] += math.log1p(-p)
        dead |= live & ~bplus & ~bminus
    obj, true_caps = evaluate_batch(instance, X)
    V = np.minimum(true_caps, 0).sum(axis=1)
    reported = np.where(dead[:, None], true_caps, caps)
    return {"x": X.astype(np.int8), "caps": reported, "objective": obj, "violation": V, "logprob": logp,
            "dead": dead}


def samples_from_batch(batch: dict[str, np.ndarray]) -> list[Sample]:
    out = []
    for i in range(batch["x"].shape[0]):
        out.append(Sample(tuple(int(b) for b in batch["x"][i]), tuple(int(c) for c in batch["caps"][i]),
                          int(batch["objective"][i]), int(batch["violation"][i]), float(batch["logprob"][i]),
                          bool(batch["dead"][i])))
    return out
