import numpy as np
import pytest

from cbqs.baselines import SAConfig, brute_force, enumerate_instance, simulated_annealing
from cbqs.bench import GeneratorParams, generate_instance
from cbqs.problem import Constraint, Polynomial, ProblemInstance, is_feasible
from cbqs.sampler import BiasProfile, exact_support

import oracles


def one_var(cap):
    return ProblemInstance(1, Polynomial({(1,): 1}, 1), (Constraint(Polynomial({(1,): 1 if cap else 2}, 1), (), 1),))


def test_brute_force_examples():
    assert brute_force(one_var(True)) == ((1,), 1)
    assert brute_force(one_var(False)) == ((0,), 0)
    infeasible = ProblemInstance(1, Polynomial({}, 1), (Constraint(Polynomial({}, 1), (), -1),))
    assert brute_force(infeasible) is None
    with pytest.raises(ValueError):
        brute_force(ProblemInstance(30, Polynomial({}, 30)))


def test_brute_force_lexicographic_tie_break():
    # every assignment has objective 0; the smallest is all zeros
    inst = ProblemInstance(3, Polynomial({}, 3), (Constraint(Polynomial({(1,): 1}, 3), (), 5),))
    assert brute_force(inst) == ((0, 0, 0), 0)
    inst = ProblemInstance(3, Polynomial({(1,): 1, (2,): 1, (3,): 1}, 3),
                           (Constraint(Polynomial({(1,): 1, (2,): 1, (3,): 1}, 3), (), 1),))
    assert brute_force(inst) == ((0, 0, 1), 1)


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("products", [False, True])
def test_brute_force_matches_second_enumerator(seed, products):
    inst = oracles.random_instance(600 + seed, 10, with_products=products, density=0.15)
    ref = oracles.naive_optimum(inst)
    e = enumerate_instance(inst)
    if ref is None:
        assert e.argmax is None
        return
    assert (e.optimum, e.argmax, e.optimal_count) == ref


@pytest.mark.parametrize("seed", range(5))
def test_brute_force_agrees_with_support(seed):
    inst = generate_instance(GeneratorParams(10, seed=seed))
    sup = exact_support(inst, BiasProfile.zeros(10))
    best = max(oracles.naive_objective(inst, x) for x in sup if is_feasible(inst, x))
    assert brute_force(inst)[1] == best


def test_sa_config_validation():
    for bad in (dict(steps=0), dict(t_max=1.0, t_min=2.0), dict(t_min=0.0), dict(penalty_weight=0)):
        with pytest.raises(ValueError):
            SAConfig(**bad)


def test_sa_unconstrained_all_ones():
    inst = ProblemInstance(8, Polynomial({(i,): 1 for i in range(1, 9)}, 8))
    r = simulated_annealing(inst, SAConfig(steps=20_000, t_max=10, t_min=0.01), np.random.default_rng(0))
    assert r.x == (1,) * 8 and r.objective == 8 and r.feasible


def test_sa_single_step_returns_start():
    inst = generate_instance(GeneratorParams(6, seed=1))
    rng = np.random.default_rng(4)
    start = tuple(int(b) for b in np.random.default_rng(4).integers(0, 2, size=6))
    r = simulated_annealing(inst, SAConfig(steps=1), rng)
    assert r.x == start


def test_sa_feasibility_rate_and_honesty():
    feasible = 0
    for seed in range(100):
        inst = generate_instance(GeneratorParams(8 + seed % 5, seed=seed))
        r = simulated_annealing(inst, SAConfig(steps=2000), np.random.default_rng(seed))
        if r.feasible:
            assert is_feasible(inst, r.x)
            assert r.objective == oracles.naive_objective(inst, r.x)
        feasible += r.feasible
    assert feasible >= 90


def test_sa_handles_products():
    inst = oracles.random_instance(3, 6, with_products=True)
    r = simulated_annealing(inst, SAConfig(steps=3000), np.random.default_rng(0))
    assert r.feasible == is_feasible(inst, r.x)
    assert r.objective == oracles.naive_objective(inst, r.x)
