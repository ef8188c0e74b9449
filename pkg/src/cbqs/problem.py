"""Exact-integer model of pseudo-boolean optimization problems.

An instance has ``n`` binary variables (1-based indices), an objective to be
maximized and ``m`` constraints.  Every function is a multi-linear polynomial
plus an optional sum of product terms::

    sum_S w_S prod_{j in S} x_j  +  sum_i alpha_i prod_S pow(b_{i,S}, prod_{j in S} x_j)

Constraints are stored in ``<=`` form only; ``>=`` constraints are negated at
construction and constant monomials are moved into the cap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

LE = "LE"
GE = "GE"

INT128_MAX = (1 << 127) - 1
INT128_MIN = -(1 << 127)

Assignment = tuple[int, ...]


class IntegerOverflowError(ArithmeticError):
    """A polynomial accumulator left the signed 128-bit range."""


def check_int128(value: int) -> int:
    if value > INT128_MAX or value < INT128_MIN:
        raise IntegerOverflowError(f"value {value} does not fit in a signed 128-bit accumulator")
    return value


def _normalize_terms(terms: Mapping[Iterable[int], int] | Iterable[tuple[Iterable[int], int]], n: int,
                     what: str) -> dict[tuple[int, ...], int]:
    items = terms.items() if isinstance(terms, Mapping) else terms
    out: dict[tuple[int, ...], int] = {}
    for indices, coeff in items:
        key = tuple(sorted(set(int(j) for j in indices)))
        if any(j < 1 or j > n for j in key):
            raise ValueError(f"{what}: index set {list(indices)} outside 1..{n}")
        if not isinstance(coeff, int) or isinstance(coeff, bool):
            raise TypeError(f"{what}: coefficient {coeff!r} is not an integer")
        if coeff == 0:
            raise ValueError(f"{what}: zero coefficient for {list(key)}")
        if key in out:
            raise ValueError(f"{what}: duplicate index set {list(key)}")
        out[key] = coeff
    return out


def as_assignment(bits: Iterable[int], n: int | None = None) -> Assignment:
    x = tuple(int(b) for b in bits)
    if any(b not in (0, 1) for b in x):
        raise ValueError(f"assignment {x} contains non-binary values")
    if n is not None and len(x) != n:
        raise ValueError(f"assignment has length {len(x)}, expected {n}")
    return x


@dataclass(frozen=True)
class Polynomial:
    """Multi-linear polynomial ``sum_S p_S prod_{j in S} x_j`` with integer coefficients."""

    terms: dict[tuple[int, ...], int]
    n: int

    def __init__(self, terms=(), n: int = 0):
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "terms", _normalize_terms(terms, int(n), "polynomial"))

    @property
    def constant(self) -> int:
        return self.terms.get((), 0)

    def without_constant(self) -> Polynomial:
        return Polynomial({S: w for S, w in self.terms.items() if S}, self.n)

    def negated(self) -> Polynomial:
        return Polynomial({S: -w for S, w in self.terms.items()}, self.n)

    def __len__(self) -> int:
        return len(self.terms)

    def __hash__(self) -> int:
        return hash((self.n, tuple(sorted(self.terms.items()))))


@dataclass(frozen=True)
class ProductTerm:
    """``alpha * prod_S pow(base_S, prod_{j in S} x_j)``.

    Bases may be any nonzero integer.  Constant bases (``S = ()``) are rejected
    because they would be closed before the first variable is assigned.
    """

    alpha: int
    bases: dict[tuple[int, ...], int]

    def __init__(self, alpha: int, bases=(), n: int | None = None):
        if alpha not in (-1, 0, 1):
            raise ValueError(f"alpha must be in {{-1, 0, 1}}, got {alpha}")
        limit = n if n is not None else 1 << 62
        bases = _normalize_terms(bases, limit, "product base")
        if () in bases:
            raise ValueError("product base with an empty index set; fold it into the cap or objective")
        object.__setattr__(self, "alpha", int(alpha))
        object.__setattr__(self, "bases", bases)

    def negated(self) -> ProductTerm:
        return ProductTerm(-self.alpha, self.bases)

    def max_index(self) -> int:
        return max((max(S) for S in self.bases), default=0)

    def value(self, x: Sequence[int]) -> int:
        prod = 1
        for S, b in self.bases.items():
            if all(x[j - 1] for j in S):
                prod *= b
        return self.alpha * prod

    def __hash__(self) -> int:
        return hash((self.alpha, tuple(sorted(self.bases.items()))))


@dataclass(frozen=True)
class Constraint:
    """``poly(x) + sum_i products_i(x) <= cap`` after normalization."""

    poly: Polynomial
    products: tuple[ProductTerm, ...]
    cap: int
    sense: str = LE

    def __post_init__(self):
        if self.sense not in (LE, GE):
            raise ValueError(f"unknown constraint sense {self.sense!r}")
        poly, products, cap = self.poly, tuple(self.products), int(self.cap)
        if self.sense == GE:
            poly = poly.negated()
            products = tuple(p.negated() for p in products)
            cap = -cap
        if poly.constant:
            cap -= poly.constant
            poly = poly.without_constant()
        products = tuple(p for p in products if p.alpha != 0 and p.bases)
        for p in products:
            if p.max_index() > poly.n:
                raise ValueError(f"product term references index {p.max_index()} > n={poly.n}")
        object.__setattr__(self, "poly", poly)
        object.__setattr__(self, "products", products)
        object.__setattr__(self, "cap", cap)
        object.__setattr__(self, "sense", LE)

    @property
    def n(self) -> int:
        return self.poly.n


def shift_of(constraint: Constraint) -> int:
    """Sum of the magnitudes of the negative polynomial coefficients."""
    return sum(-w for w in constraint.poly.terms.values() if w < 0)


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    n: int
    objective: Polynomial
    constraints: tuple[Constraint, ...] = ()
    objective_products: tuple[ProductTerm, ...] = ()
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if self.objective.n != self.n:
            raise ValueError("objective variable count differs from instance n")
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "objective_products",
                           tuple(p for p in self.objective_products if p.alpha != 0 and p.bases))
        for k, c in enumerate(self.constraints):
            if c.n != self.n:
                raise ValueError(f"constraint {k} has n={c.n}, instance has n={self.n}")
        for p in self.objective_products:
            if p.max_index() > self.n:
                raise ValueError("objective product references an index beyond n")

    @property
    def m(self) -> int:
        return len(self.constraints)

    @cached_property
    def shifts(self) -> tuple[int, ...]:
        return tuple(shift_of(c) for c in self.constraints)

    @cached_property
    def has_products(self) -> bool:
        return bool(self.objective_products) or any(c.products for c in self.constraints)

    def initial_capacities(self) -> tuple[int, ...]:
        return tuple(c.cap + P for c, P in zip(self.constraints, self.shifts))


def eval_polynomial(poly: Polynomial, x: Sequence[int]) -> int:
    if len(x) != poly.n:
        raise ValueError(f"assignment has length {len(x)}, polynomial has n={poly.n}")
    total = 0
    for S, w in poly.terms.items():
        if all(x[j - 1] for j in S):
            total += w
            check_int128(total)
    return total


def eval_product_part(constraint: Constraint | Sequence[ProductTerm], x: Sequence[int]) -> int:
    products = constraint.products if isinstance(constraint, Constraint) else constraint
    return sum(p.value(x) for p in products)


def eval_objective(instance: ProblemInstance, x: Sequence[int]) -> int:
    return eval_polynomial(instance.objective, x) + eval_product_part(instance.objective_products, x)


def remaining_capacities(instance: ProblemInstance, x: Sequence[int]) -> tuple[int, ...]:
    """Per-constraint ``c_k + P_k - g_k(x)`` with ``g_k`` in shifted form.

    The shifted polynomial value equals ``poly(x) + P_k``, so the result is
    simply ``cap - poly(x) - products(x)``.
    """
    x = as_assignment(x, instance.n)
    out = []
    for c, P in zip(instance.constraints, instance.shifts):
        shifted = check_int128(eval_polynomial(c.poly, x) + P)
        out.append(c.cap + P - shifted - eval_product_part(c, x))
    return tuple(out)


def violation_of_caps(caps: Iterable[int]) -> int:
    return sum(c for c in caps if c < 0)


def violation(instance: ProblemInstance, x: Sequence[int]) -> int:
    return violation_of_caps(remaining_capacities(instance, x))


def is_feasible(instance: ProblemInstance, x: Sequence[int]) -> bool:
    return violation(instance, x) == 0


# --------------------------------------------------------------------------
# JSON instance files
# --------------------------------------------------------------------------

def _terms_from_json(raw, what: str) -> list[tuple[tuple[int, ...], int]]:
    out = []
    for item in raw:
        if not (isinstance(item, (list, tuple)) and len(item) == 2):
            raise ValueError(f"{what}: malformed term {item!r}")
        indices, coeff = item
        out.append((tuple(indices), coeff))
    return out


def _products_from_json(raw, n: int) -> tuple[ProductTerm, ...]:
    return tuple(ProductTerm(p["alpha"], _terms_from_json(p["bases"], "product base"), n=n) for p in raw)


def _terms_to_json(terms: Mapping[tuple[int, ...], int]) -> list:
    return [[list(S), w] for S, w in sorted(terms.items(), key=lambda kv: (len(kv[0]), kv[0]))]


def _products_to_json(products: Sequence[ProductTerm]) -> list:
    return [{"alpha": p.alpha, "bases": _terms_to_json(p.bases)} for p in products]


def instance_from_dict(doc: Mapping) -> ProblemInstance:
    n = int(doc["n"])
    obj = doc.get("objective", {})
    objective = Polynomial(_terms_from_json(obj.get("terms", []), "objective"), n)
    constraints = []
    for k, raw in enumerate(doc.get("constraints", [])):
        poly = Polynomial(_terms_from_json(raw.get("terms", []), f"constraint {k}"), n)
        constraints.append(Constraint(poly, _products_from_json(raw.get("products", []), n),
                                      int(raw["cap"]), raw.get("sense", LE)))
    return ProblemInstance(n, objective, tuple(constraints), _products_from_json(obj.get("products", []), n),
                           name=str(doc.get("id", "")), meta=dict(doc.get("meta", {})))


def instance_to_dict(instance: ProblemInstance) -> dict:
    """Serialize in normalized (LE, constant-folded) form."""
    doc = {"id": instance.name, "n": instance.n, "meta": instance.meta,
           "objective": {"terms": _terms_to_json(instance.objective.terms),
                         "products": _products_to_json(instance.objective_products)},
           "constraints": [{"terms": _terms_to_json(c.poly.terms), "products": _products_to_json(c.products),
                            "cap": c.cap, "sense": c.sense} for c in instance.constraints]}
    return doc


def load_instance(path: str | Path) -> ProblemInstance:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise OSError(f"cannot read instance file {path}: {exc}") from exc
    inst = instance_from_dict(doc)
    if not inst.name:
        object.__setattr__(inst, "name", path.stem)
    return inst


def dump_instance(instance: ProblemInstance, path: str | Path) -> None:
    path = Path(path)
    path.write_text(json.dumps(instance_to_dict(instance), indent=1, sort_keys=True) + "\n")
