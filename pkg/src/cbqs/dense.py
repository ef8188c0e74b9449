"""Vectorized int64 evaluation of polynomials over batches of assignments.

Only used where every partial sum provably fits in int64; callers fall back to
the exact scalar evaluators in :mod:`cbqs.problem` otherwise.
"""

from __future__ import annotations

import numpy as np

from .problem import Polynomial, ProblemInstance, eval_objective, remaining_capacities

SAFE_BOUND = 1 << 62


class DensePoly:
    def __init__(self, poly: Polynomial):
        n = poly.n
        self.n = n
        self.const = 0
        self.lin = np.zeros(n, dtype=np.int64)
        self.upper = np.zeros((n, n), dtype=np.int64)
        self.higher: list[tuple[np.ndarray, int]] = []
        self.safe = sum(abs(w) for w in poly.terms.values()) < SAFE_BOUND
        if not self.safe:
            return
        for S, w in poly.terms.items():
            if len(S) == 0:
                self.const += w
            elif len(S) == 1:
                self.lin[S[0] - 1] += w
            elif len(S) == 2:
                self.upper[S[0] - 1, S[1] - 1] += w
            else:
                self.higher.append((np.asarray(S, dtype=np.intp) - 1, w))
        self.has_pairs = bool(self.upper.any())

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.int64)
        out = np.full(X.shape[0], self.const, dtype=np.int64)
        out += X @ self.lin
        if self.has_pairs:
            out += ((X @ self.upper) * X).sum(axis=1)
        for idx, w in self.higher:
            out += w * X[:, idx].all(axis=1)
        return out


def evaluate_batch(instance: ProblemInstance, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Objective values and remaining capacities for every row of ``X``.

    Returns int64 arrays when exact int64 evaluation is possible, otherwise
    object arrays of Python ints.
    """
    X = np.asarray(X, dtype=np.int64)
    dense = [DensePoly(instance.objective)] + [DensePoly(c.poly) for c in instance.constraints]
    caps_bound = sum(abs(c.cap) for c in instance.constraints)
    if instance.has_products or not all(d.safe for d in dense) or caps_bound >= SAFE_BOUND:
        rows = [tuple(int(b) for b in row) for row in X]
        obj = np.array([eval_objective(instance, x) for x in rows], dtype=object)
        caps = np.array([remaining_capacities(instance, x) for x in rows], dtype=object)
        return obj, caps.reshape(len(rows), instance.m)
    obj = dense[0](X)
    caps = np.empty((X.shape[0], instance.m), dtype=np.int64)
    for k, c in enumerate(instance.constraints):
        caps[:, k] = c.cap - dense[k + 1](X)
    return obj, caps
