import math

import numpy as np
import pytest

from cbqs.bench import GeneratorParams, generate_instance
from cbqs.problem import Constraint, Polynomial, ProblemInstance, eval_objective, is_feasible, violation
from cbqs.sampler import BiasProfile
from cbqs.search import (EMPIRICAL, ObjectiveAbove, SearchConfig, ViolationAbove, amplitude, qmaxsearch,
                         qmaxsearch_two_stage, qsearch, qsearch_violation, simulate_schedule,
                         success_probability)

import oracles


class Always:
    def __call__(self, s):
        return True


class Never:
    def __call__(self, s):
        return False


class Is:
    def __init__(self, x):
        self.x = tuple(x)

    def __call__(self, s):
        return s.x == self.x


FREE2 = ProblemInstance(2, Polynomial({}, 2))


def test_config_validation():
    for bad in (dict(d=1.0), dict(d=2.0), dict(M=-1), dict(n_est=0), dict(amplitude_mode="x")):
        with pytest.raises(ValueError):
            SearchConfig(**bad)


def test_amplitude_examples():
    cfg = SearchConfig()
    bias = BiasProfile.uniform(2)
    assert amplitude(FREE2, bias, Always(), cfg) == 1.0
    assert amplitude(FREE2, bias, Never(), cfg) == 0.0
    assert math.isclose(amplitude(FREE2, bias, Is((1, 1)), cfg), 0.25)


def test_qsearch_certain_success():
    cfg = SearchConfig(M=100)
    rng = np.random.default_rng(0)
    for _ in range(50):
        s, m_tot, ok = qsearch(FREE2, BiasProfile.uniform(2), Always(), cfg, rng)
        assert ok and m_tot in (3, 5)


def test_qsearch_budget_exit():
    cfg = SearchConfig(M=100)
    s, m_tot, ok = qsearch(FREE2, BiasProfile.uniform(2), Never(), cfg, np.random.default_rng(1))
    assert not ok and m_tot >= 100


def test_conditional_draw_satisfies_predicate():
    inst = generate_instance(GeneratorParams(8, seed=2))
    rng = np.random.default_rng(5)
    pred = ObjectiveAbove(None)
    for _ in range(30):
        s, _, ok = qsearch(inst, BiasProfile.zeros(8), pred, SearchConfig(M=2000), rng)
        if ok:
            assert s.feasible and is_feasible(inst, s.x)


def test_success_probability_law():
    assert math.isclose(success_probability(1.0, 3), 1.0)
    assert math.isclose(success_probability(0.25, 1), 1.0)
    assert success_probability(0.0, 4) == 0.0


def test_schedule_expectation_factor_two():
    a = 1 / 1024
    rng = np.random.default_rng(11)
    mean = np.mean([simulate_schedule(a, 1.2, math.inf, rng)[0] for _ in range(3000)])
    ref = oracles.expected_schedule_calls(a, 1.2)
    assert ref / 2 < mean < ref * 2
    # the series itself is close in relative terms
    assert abs(mean - ref) / ref < 0.1


def test_qsearch_violation_examples():
    # x = 0 violates the GE constraint, x = (1, 1) does not
    inst = ProblemInstance(2, Polynomial({(1,): 1}, 2),
                           (Constraint(Polynomial({(1,): 2, (2,): 3}, 2), (), 4, "GE"),))
    rng = np.random.default_rng(0)
    cfg = SearchConfig(M=500)
    T0 = violation(inst, (0, 0))
    assert T0 < 0
    s, V, m_tot = qsearch_violation(inst, BiasProfile.zeros(2), -10 ** 9, cfg, rng)
    assert V == s.violation and m_tot >= 3
    s, V, _ = qsearch_violation(inst, BiasProfile.zeros(2), T0, cfg, rng)
    assert V > T0


def test_qmaxsearch_single_variable():
    inst = ProblemInstance(1, Polynomial({(1,): 1}, 1), (Constraint(Polynomial({(1,): 1}, 1), (), 1),))
    tr = qmaxsearch(inst, SearchConfig(M=200), np.random.default_rng(0))
    assert tr.best.value == 1


def test_qmaxsearch_zero_budget():
    tr = qmaxsearch(FREE2, SearchConfig(M=0))
    assert not tr.incumbents and tr.m_tot == 0 and not tr.found_feasible


def test_two_stage_skips_stage_one_when_zero_feasible():
    inst = generate_instance(GeneratorParams(6, seed=0))
    free = ProblemInstance(6, inst.objective, inst.constraints[:1])
    tr = qmaxsearch_two_stage(free, SearchConfig(M=500), np.random.default_rng(0))
    assert all(inc.stage == 2 for inc in tr.incumbents)
    assert tr.stage_marks == [0]


def test_two_stage_enters_stage_one_on_benchmark():
    inst = generate_instance(GeneratorParams(8, seed=3))
    assert violation(inst, (0,) * 8) < 0
    tr = qmaxsearch_two_stage(inst, SearchConfig(M=2000), np.random.default_rng(0))
    assert tr.incumbents[0].stage == 1


@pytest.mark.parametrize("seed", range(5))
def test_trace_invariants(seed):
    inst = generate_instance(GeneratorParams(9, seed=seed))
    tr = qmaxsearch_two_stage(inst, SearchConfig(M=1500), np.random.default_rng(seed))
    assert tr.m_tot == sum(tr.round_costs)
    ms = [inc.m_tot for inc in tr.incumbents]
    assert ms == sorted(ms)
    stages = [inc.stage for inc in tr.incumbents]
    assert stages == sorted(stages)
    for stage in (1, 2):
        vals = [inc.value for inc in tr.incumbents if inc.stage == stage]
        assert all(b > a for a, b in zip(vals, vals[1:]))
    for inc in tr.incumbents:
        if inc.stage == 2:
            assert is_feasible(inst, inc.x) and eval_objective(inst, inc.x) == inc.value


def test_m_tot_counts_initial_prep_when_asked():
    cfg = SearchConfig(M=50, count_initial_prep=True)
    _, m_tot, _ = qsearch(FREE2, BiasProfile.uniform(2), Always(), cfg, np.random.default_rng(0))
    assert m_tot in (4, 6)


def test_two_stage_optimum_on_crafted_instance():
    inst = generate_instance(GeneratorParams(8, seed=9))
    opt = oracles.naive_optimum(inst)[0]
    hits = 0
    for seed in range(100):
        tr = qmaxsearch_two_stage(inst, SearchConfig(M=4000), np.random.default_rng(seed))
        hits += tr.found_feasible and tr.best.value == opt
    assert hits >= 90


def test_empirical_amplitude_close_to_exact():
    bad = 0
    for i in range(50):
        inst = generate_instance(GeneratorParams(8 + i % 5, seed=500 + i))
        bias = BiasProfile.zeros(inst.n)
        pred = ObjectiveAbove(None)
        exact = amplitude(inst, bias, pred, SearchConfig())
        est = amplitude(inst, bias, pred, SearchConfig(amplitude_mode=EMPIRICAL, n_est=10_000),
                        np.random.default_rng(i))
        se = math.sqrt(max(exact * (1 - exact), 1e-12) / 10_000)
        bad += abs(est - exact) > 5 * se + 1 / 40_000
    assert bad == 0


def test_empirical_mode_search_runs():
    inst = generate_instance(GeneratorParams(8, seed=1))
    cfg = SearchConfig(M=3000, amplitude_mode=EMPIRICAL, n_est=500)
    tr = qmaxsearch_two_stage(inst, cfg, np.random.default_rng(2))
    assert tr.m_tot == sum(tr.round_costs)
    for inc in tr.incumbents:
        if inc.feasible:
            assert is_feasible(inst, inc.x)


def test_violation_predicate():
    p = ViolationAbove(-3)
    assert list(p.mask(np.array([0, 0, 0]), np.array([-5, -3, 0]))) == [False, False, True]
