"""Benchmark instances, experiment orchestration and report emission.

Benchmark instances maximize a quadratic objective under one quadratic
``<=`` constraint and one quadratic ``>=`` constraint.  Caps are derived from a
random witness assignment so every instance is feasible by construction.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .baselines import SAConfig, enumerate_instance, simulated_annealing
from .problem import GE, LE, Constraint, Polynomial, ProblemInstance, eval_polynomial, is_feasible
from .resources import ResourceModel, budget_M, grover_baseline_calls, qbnb_oracle_calls, runtime_seconds
from .sampler import SamplerConfig
from .search import SearchConfig, qmaxsearch_two_stage

log = logging.getLogger(__name__)

METHODS = ("cbqs", "grover", "sa", "brute", "qbnb")
AXES = ("oracle_calls", "seconds")
CSV_COLUMNS = ("instance_id", "n", "method", "axis", "step_cost", "value", "feasible")


# --------------------------------------------------------------------------
# instance generation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GeneratorParams:
    n: int
    seed: int = 0
    coeff_lo: int = 1
    coeff_hi: int = 100
    density: float = 1.0
    # caps as fractions of the all-ones constraint values, relaxed to the
    # witness value where needed
    tightness: tuple[float, float] = (0.5, 0.5)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.coeff_lo < 1 or self.coeff_hi < self.coeff_lo:
            raise ValueError("need 1 <= coeff_lo <= coeff_hi")
        if not 0.0 < self.density <= 1.0:
            raise ValueError("density must lie in (0, 1]")
        if not all(0.0 < t < 1.0 for t in self.tightness):
            raise ValueError("tightness values must lie in (0, 1)")


def _quadratic(rng: np.random.Generator, params: GeneratorParams) -> Polynomial:
    n = params.n
    terms = {}
    for i in range(1, n + 1):
        for j in range(i, n + 1):
            keep = params.density >= 1.0 or rng.random() < params.density
            w = int(rng.integers(params.coeff_lo, params.coeff_hi + 1))
            if keep:
                terms[(i,) if i == j else (i, j)] = w
    return Polynomial(terms, n)


def generate_instance(params: GeneratorParams, instance_id: str | None = None) -> ProblemInstance:
    rng = np.random.default_rng([params.seed, params.n])
    objective = _quadratic(rng, params)
    w1 = _quadratic(rng, params)
    w2 = _quadratic(rng, params)
    witness = tuple(int(b) for b in rng.integers(0, 2, size=params.n))
    v1, v2 = eval_polynomial(w1, witness), eval_polynomial(w2, witness)
    ones = (1,) * params.n
    tau1, tau2 = params.tightness
    c1 = max(v1, int(tau1 * eval_polynomial(w1, ones)))
    c2 = min(v2, int(tau2 * eval_polynomial(w2, ones)))
    name = instance_id or f"n{params.n}_s{params.seed}"
    meta = {"generator": asdict(params) | {"tightness": list(params.tightness)}, "witness": list(witness)}
    inst = ProblemInstance(params.n, objective, (Constraint(w1, (), c1, LE), Constraint(w2, (), c2, GE)),
                           name=name, meta=meta)
    assert is_feasible(inst, witness)
    return inst


# --------------------------------------------------------------------------
# records
# --------------------------------------------------------------------------

@dataclass
class TimelinePoint:
    value: int | None
    feasible: bool
    oracle_calls: int | float | None = None
    seconds: float | None = None


@dataclass
class RunRecord:
    instance_id: str
    n: int
    method: str
    seed: int
    axis: str
    timeline: list[TimelinePoint] = field(default_factory=list)
    final_value: int | None = None
    feasible: bool = False
    resources: dict = field(default_factory=dict)
    error: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: Mapping) -> RunRecord:
        doc = dict(doc)
        doc["timeline"] = [TimelinePoint(**p) for p in doc.get("timeline", [])]
        return cls(**doc)


@dataclass(frozen=True)
class RunConfig:
    seeds: tuple[int, ...] = (0,)
    d: float = 1.2
    M: int | None = None          # None: budget_M(n) per instance
    amplitude_mode: str = "exact"
    n_est: int = 1000
    sa: SAConfig = SAConfig()
    sampler: SamplerConfig = SamplerConfig()
    grover_trials: int = 100
    brute_cap: int = 20
    qbnb_nodes: Mapping[str, float] = field(default_factory=dict)
    gate_time_ns: float = 6.5
    workers: int = 1


def _cell_rng(seed: int, instance_index: int, method: str) -> np.random.Generator:
    return np.random.default_rng([seed, instance_index, METHODS.index(method)])


def _run_cbqs(inst, cfg: RunConfig, rng, rec: RunRecord):
    M = cfg.M if cfg.M is not None else budget_M(inst.n)
    sc = SearchConfig(d=cfg.d, M=M, amplitude_mode=cfg.amplitude_mode, n_est=cfg.n_est, sampler=cfg.sampler)
    trace = qmaxsearch_two_stage(inst, sc, rng)
    model = ResourceModel.for_instance(inst, cfg.gate_time_ns)
    for inc in trace.incumbents:
        rec.timeline.append(TimelinePoint(inc.value, inc.feasible, inc.m_tot, runtime_seconds(inc.m_tot, model)))
    best = trace.best
    rec.feasible = trace.found_feasible
    rec.final_value = best.value if best is not None else None
    rec.resources = model.summary() | {"M": M, "m_tot": trace.m_tot, "qsearch_calls": trace.qsearch_calls,
                                       "stage_marks": list(trace.stage_marks), "estimated_seconds": True,
                                       "total_seconds": runtime_seconds(trace.m_tot, model)}


def _run_grover(inst, cfg: RunConfig, rng, rec: RunRecord):
    e = enumerate_instance(inst, cfg.brute_cap)
    if e.optimum is None:
        raise ValueError("instance is infeasible; no good states for the Grover baseline")
    calls = grover_baseline_calls(inst.n, e.optimal_count, cfg.grover_trials, rng, d=cfg.d)
    model = ResourceModel.for_instance(inst, cfg.gate_time_ns)
    rec.timeline.append(TimelinePoint(e.optimum, True, calls, runtime_seconds(calls, model)))
    rec.final_value, rec.feasible = e.optimum, True
    rec.resources = {"good_count": e.optimal_count, "trials": cfg.grover_trials, "estimated_seconds": True}


def _run_sa(inst, cfg: RunConfig, rng, rec: RunRecord):
    res = simulated_annealing(inst, cfg.sa, rng)
    for sec, _step, value in res.timeline:
        rec.timeline.append(TimelinePoint(value, True, None, sec))
    if not res.feasible:
        rec.timeline.append(TimelinePoint(res.objective, False, None, res.wall_time))
    rec.final_value, rec.feasible = res.objective, res.feasible
    rec.resources = {"steps": cfg.sa.steps, "wall_time": res.wall_time}


def _run_brute(inst, cfg: RunConfig, rng, rec: RunRecord):
    t0 = time.perf_counter()
    e = enumerate_instance(inst, cfg.brute_cap)
    wall = time.perf_counter() - t0
    rec.timeline.append(TimelinePoint(e.optimum, e.optimum is not None, None, wall))
    rec.final_value, rec.feasible = e.optimum, e.optimum is not None
    rec.resources = {"wall_time": wall, "optimal_count": e.optimal_count, "feasible_count": e.feasible_count}


def _run_qbnb(inst, cfg: RunConfig, rng, rec: RunRecord):
    if inst.name not in cfg.qbnb_nodes:
        raise ValueError(f"no branch-and-bound node count supplied for instance {inst.name!r}")
    T = float(cfg.qbnb_nodes[inst.name])
    calls = qbnb_oracle_calls(inst.n, T)
    value = None
    if inst.n <= cfg.brute_cap:
        value = enumerate_instance(inst, cfg.brute_cap).optimum
    rec.timeline.append(TimelinePoint(value, value is not None, calls, None))
    rec.final_value, rec.feasible = value, value is not None
    rec.resources = {"tree_nodes": T}


_RUNNERS = {"cbqs": (_run_cbqs, "oracle_calls"), "grover": (_run_grover, "oracle_calls"),
            "sa": (_run_sa, "seconds"), "brute": (_run_brute, "seconds"), "qbnb": (_run_qbnb, "oracle_calls")}


def _run_cell(args) -> RunRecord:
    index, inst, method, seed, cfg = args
    runner, axis = _RUNNERS[method]
    rec = RunRecord(inst.name, inst.n, method, seed, axis)
    try:
        runner(inst, cfg, _cell_rng(seed, index, method), rec)
    except Exception as exc:  # recorded per cell, never aborts the batch
        log.warning("%s on %s (seed %d) failed: %s", method, inst.name, seed, exc)
        rec.timeline, rec.final_value, rec.feasible = [], None, False
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


def run_experiment(instances: Sequence[ProblemInstance], methods: Sequence[str],
                   config: RunConfig = RunConfig()) -> list[RunRecord]:
    """One record per (instance, method, seed), in that nesting order."""
    if not methods:
        raise ValueError("methods must be nonempty")
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    cells = [(i, inst, m, seed, config) for i, inst in enumerate(instances) for m in methods
             for seed in config.seeds]
    if config.workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            return list(pool.map(_run_cell, cells))
    return [_run_cell(c) for c in cells]


def mean_calls_to_optimum(instance: ProblemInstance, optimum: int, seeds: Iterable[int],
                          config: SearchConfig) -> tuple[float, int]:
    """Mean oracle calls until the two-stage search first holds ``optimum``.

    A run that never gets there still contributes its full ``m_tot`` (the cost
    of a restart), so the mean is total calls over successful runs.  Returns
    ``(mean, hits)``.
    """
    total = hits = 0
    for s in seeds:
        tr = qmaxsearch_two_stage(instance, config, np.random.default_rng(s))
        c = tr.calls_to_reach(optimum)
        if c is None:
            total += tr.m_tot
        else:
            total, hits = total + c, hits + 1
    return (total / hits if hits else float("inf")), hits


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------

def records_to_json(records: Iterable[RunRecord]) -> str:
    return json.dumps([r.to_dict() for r in records], indent=1, sort_keys=True) + "\n"


def records_from_json(text: str) -> list[RunRecord]:
    return [RunRecord.from_dict(d) for d in json.loads(text)]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    return repr(v) if isinstance(v, float) else str(v)


def report_rows(records: Iterable[RunRecord], axis: str | None = None) -> list[dict]:
    """One row per timeline point, on each record's own axis unless ``axis`` is given."""
    rows = []
    for r in records:
        ax = axis or r.axis
        for p in r.timeline:
            cost = getattr(p, ax)
            if cost is None:
                continue
            rows.append({"instance_id": r.instance_id, "n": r.n, "method": r.method, "axis": ax,
                         "step_cost": cost, "value": p.value, "feasible": p.feasible})
    return rows


def _csv(rows: Sequence[Mapping], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def fig1_rows(records: Iterable[RunRecord]) -> list[dict]:
    """Mean oracle calls to reach each run's final value, per (n, method)."""
    groups: dict[tuple[int, str], list[RunRecord]] = {}
    for r in records:
        if r.axis != "oracle_calls" or r.error:
            continue
        groups.setdefault((r.n, r.method), []).append(r)
    rows = []
    for (n, method), recs in sorted(groups.items()):
        calls = []
        for r in recs:
            hit = next((p.oracle_calls for p in r.timeline if p.feasible and p.value == r.final_value), None)
            if hit is not None:
                calls.append(hit)
        rows.append({"n": n, "method": method, "runs": len(recs), "reached": len(calls),
                     "mean_oracle_calls": float(np.mean(calls)) if calls else None,
                     "feasible_rate": sum(r.feasible for r in recs) / len(recs)})
    return rows


FIG1_COLUMNS = ("n", "method", "runs", "reached", "mean_oracle_calls", "feasible_rate")


def render_report(records: Sequence[RunRecord], fmt: str = "csv", pivot: str = "incumbents",
                  axis: str | None = None) -> str:
    if pivot == "incumbents":
        rows, columns = report_rows(records, axis), CSV_COLUMNS
    elif pivot == "fig1":
        rows, columns = fig1_rows(records), FIG1_COLUMNS
    else:
        raise ValueError(f"unknown pivot {pivot!r}")
    if fmt == "csv":
        return _csv(rows, columns)
    if fmt == "json":
        return json.dumps(rows, indent=1, sort_keys=True) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def emit_report(records: Sequence[RunRecord], path: str | Path, fmt: str = "csv",
                axis: str | None = None) -> Path:
    """Write the incumbent table (``csv``) or the full records (``json``) to ``path``."""
    path = Path(path)
    if fmt == "csv":
        text = render_report(records, "csv", "incumbents", axis)
    elif fmt == "json":
        text = records_to_json(records)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path
