"""Command line interface: ``generate``, ``run`` and ``report``.

Errors are written to stderr as a single JSON object and the process exits
with status 1.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .baselines import SAConfig
from .bench import (METHODS, GeneratorParams, RunConfig, generate_instance, records_from_json,
                    records_to_json, render_report, run_experiment)
from .problem import dump_instance, load_instance
from .sampler import SamplerConfig


def parse_seeds(text: str) -> tuple[int, ...]:
    """``"3"``, ``"0,4,7"`` or a half-open range ``"0:10"``."""
    text = text.strip()
    if ":" in text:
        lo, hi = text.split(":", 1)
        return tuple(range(int(lo), int(hi)))
    return tuple(int(s) for s in text.split(",") if s.strip())


def load_qbnb_nodes(path: str | Path) -> dict[str, float]:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".csv":
        return {row["instance_id"]: float(row["nodes"]) for row in csv.DictReader(text.splitlines())}
    return {str(k): float(v) for k, v in json.loads(text).items()}


def _generate(args) -> None:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for n in args.n:
        for i in range(args.count):
            params = GeneratorParams(n, args.seed + i, args.coeff_lo, args.coeff_hi, args.density,
                                     tuple(args.tightness))
            inst = generate_instance(params)
            dump_instance(inst, out / f"{inst.name}.json")


def _run(args) -> None:
    folder = Path(args.instances)
    files = sorted(folder.glob("*.json")) if folder.is_dir() else [folder]
    if not files:
        raise FileNotFoundError(f"no instance files in {folder}")
    instances = [load_instance(f) for f in files]
    cfg = RunConfig(seeds=parse_seeds(args.seeds), d=args.d, M=args.M, amplitude_mode=args.amplitude,
                    n_est=args.n_est, sa=SAConfig(steps=args.sa_steps),
                    sampler=SamplerConfig(lb_mode=args.lb_mode),
                    qbnb_nodes=load_qbnb_nodes(args.qbnb_nodes) if args.qbnb_nodes else {},
                    workers=args.workers)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    records = run_experiment(instances, methods, cfg)
    Path(args.out).write_text(records_to_json(records))


def _report(args) -> None:
    records = records_from_json(Path(getattr(args, "in")).read_text())
    text = render_report(records, args.format, args.pivot, args.axis)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cbqs", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write benchmark instance files")
    g.add_argument("--n", type=int, nargs="+", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int, default=10)
    g.add_argument("--out", required=True)
    g.add_argument("--coeff-lo", type=int, default=1)
    g.add_argument("--coeff-hi", type=int, default=100)
    g.add_argument("--density", type=float, default=1.0)
    g.add_argument("--tightness", type=float, nargs=2, default=(0.5, 0.5))
    g.set_defaults(func=_generate)

    r = sub.add_parser("run", help="run methods on a directory of instances")
    r.add_argument("--instances", required=True)
    r.add_argument("--methods", default="cbqs", help=f"comma list from {','.join(METHODS)}")
    r.add_argument("--d", type=float, default=1.2)
    r.add_argument("--M", type=int, default=None, help="oracle-call budget per search (default (n/4)^2+1200)")
    r.add_argument("--amplitude", choices=("exact", "empirical"), default="exact")
    r.add_argument("--n-est", type=int, default=1000)
    r.add_argument("--seeds", default="0")
    r.add_argument("--qbnb-nodes", default=None, help="JSON or CSV mapping instance_id to tree node count")
    r.add_argument("--sa-steps", type=int, default=100_000)
    r.add_argument("--lb-mode", choices=("tight", "paper"), default="tight")
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--out", required=True)
    r.set_defaults(func=_run)

    rep = sub.add_parser("report", help="tabulate a run file")
    rep.add_argument("--in", required=True)
    rep.add_argument("--format", choices=("csv", "json"), default="csv")
    rep.add_argument("--pivot", choices=("fig1", "incumbents"), default="incumbents")
    rep.add_argument("--axis", choices=("oracle_calls", "seconds"), default=None)
    rep.add_argument("--out", default=None)
    rep.set_defaults(func=_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except Exception as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc), "command": args.command}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
