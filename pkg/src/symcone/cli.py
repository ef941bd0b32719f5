"""Command line front end: ``symcone gen | solve | bench``.

Exit codes of ``solve``: 0 primal feasible, 1 dual feasible, 2 no epsilon-feasible
solution, 3 basic procedure error, time limit or any other failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

from . import instance_io
from .instances import GenSpec, generate, m_from_nu
from .main_algorithm import (
    BasicProcedureError,
    DualFeasible,
    MAConfig,
    NoEpsFeasible,
    PrimalFeasible,
    TimeLimit,
    solve,
)

THREADS_ENV = "SYMCONE_THREADS"
STRONG_RESIDUAL_TOL = 1e-5

EXIT_CODES = {PrimalFeasible: 0, DualFeasible: 1, NoEpsFeasible: 2, BasicProcedureError: 3, TimeLimit: 3}
#: output letters as used in the weak-instance tables: A primal, B dual, C no epsilon-feasible solution
LETTERS = {"PrimalFeasible": "A", "DualFeasible": "B", "NoEpsFeasible": "C"}


@dataclass
class ReportRow:
    instance: str
    family: str
    group: str
    criterion: str
    bp: str
    status: str
    correct: Optional[bool]
    main_iters: int
    bp_iters_total: int
    time_s: float
    residual: Optional[float]
    lambda_min: Optional[float]
    log10_rate: float
    message: str = ""

    @property
    def letter(self) -> str:
        return LETTERS.get(self.status, "-")


FIELDS = list(ReportRow.__dataclass_fields__)


def judge(family: str, status: str, residual: Optional[float]) -> Optional[bool]:
    """Correct-output rule: strong needs a primal point with residual <= 1e-5, infeasible needs a dual certificate."""
    if family == "strong":
        return status == "PrimalFeasible" and residual is not None and residual <= STRONG_RESIDUAL_TOL
    if family == "infeasible":
        return status == "DualFeasible"
    return None


def _group(inst: instance_io.InstanceFile) -> str:
    p = inst.params
    if "tau" in p:
        return f"tau={p['tau']}"
    if "alpha" in p:
        return f"alpha={p['alpha']:g}"
    return "-"


def solve_file(path: str, cfg: MAConfig) -> ReportRow:
    name = Path(path).name
    try:
        inst = instance_io.read(path)
    except (OSError, ValueError) as exc:
        return ReportRow(name, "unknown", "-", cfg.criterion.value, cfg.bp_scheme.value, "Error", None,
                         0, 0, 0.0, None, None, 0.0, str(exc))
    try:
        res = solve(inst.operator(), cfg)
    except Exception as exc:  # a failed solve is recorded, never fatal for a batch
        return ReportRow(name, inst.family, _group(inst), cfg.criterion.value, cfg.bp_scheme.value, "Error",
                         judge(inst.family, "Error", None), 0, 0, 0.0, None, None, 0.0, repr(exc))
    st = res.status
    residual = getattr(st, "residual", None)
    lam = getattr(st, "lambda_min", None)
    return ReportRow(
        name,
        inst.family,
        _group(inst),
        cfg.criterion.value,
        cfg.bp_scheme.value,
        res.kind,
        judge(inst.family, res.kind, residual),
        res.metrics.main_iters,
        res.metrics.bp_iters_total,
        res.metrics.wall_time,
        residual,
        lam,
        res.metrics.cumulative_log10_rate,
    )


def _row_json(row: ReportRow) -> str:
    return json.dumps(asdict(row))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(rows, out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(FIELDS)
    for row in rows:
        w.writerow([_fmt(getattr(row, f)) for f in FIELDS])


def summarize(rows) -> list[dict]:
    """CO-ratio ``|N2| / |N1|`` per (family, group, criterion, bp).

    ``N1`` are the runs that finished within the time limit without error,
    ``N2`` the correct outputs among them; weak instances only list letters.
    """
    key = lambda r: (r.family, r.group, r.criterion, r.bp)
    out = []
    for k, grp in itertools.groupby(sorted(rows, key=key), key=key):
        grp = list(grp)
        n1 = [r for r in grp if r.status not in ("TimeLimit", "Error")]
        entry = dict(zip(("family", "group", "criterion", "bp"), k))
        entry["runs"] = len(grp)
        entry["finished"] = len(n1)
        if k[0] in ("strong", "infeasible"):
            entry["correct"] = sum(1 for r in n1 if r.correct)
            entry["co_ratio"] = f"{entry['correct']}/{len(n1)}"
        else:
            entry["outputs"] = "".join(r.letter for r in grp)
        times = [r.time_s for r in n1]
        entry["mean_time_s"] = sum(times) / len(times) if times else math.nan
        out.append(entry)
    return out


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args) -> int:
    if (args.m is None) == (args.nu is None):
        print("gen: give exactly one of --m or --nu", file=sys.stderr)
        return 3
    m = args.m if args.m is not None else m_from_nu(args.n, args.nu)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        seed = args.seed + i
        spec = GenSpec(args.family, args.n, m, seed, tau=args.tau, alpha=args.alpha)
        inst = instance_io.from_generated(generate(spec))
        if args.nu is not None:
            inst.params["nu"] = args.nu
        tag = f"tau{args.tau}" if args.family == "strong" else (f"alpha{args.alpha:g}" if args.alpha else "weak")
        path = out / f"{args.family}_n{args.n}_m{m}_{tag}_s{seed}.inst"
        instance_io.write(inst, path)
        print(path)
    return 0


def _config(args, criterion=None, bp=None) -> MAConfig:
    return MAConfig(
        epsilon=args.eps,
        xi=args.xi,
        criterion=criterion or args.criterion,
        bp_scheme=bp or args.bp,
        time_limit=args.time_limit,
    )


def cmd_solve(args) -> int:
    try:
        inst = instance_io.read(args.instance)
    except instance_io.InstanceParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    cfg = _config(args)
    res = solve(inst.operator(), cfg)
    st = res.status
    residual = getattr(st, "residual", None)
    row = ReportRow(
        Path(args.instance).name, inst.family, _group(inst), cfg.criterion.value, cfg.bp_scheme.value,
        res.kind, judge(inst.family, res.kind, residual), res.metrics.main_iters, res.metrics.bp_iters_total,
        res.metrics.wall_time, residual, getattr(st, "lambda_min", None), res.metrics.cumulative_log10_rate,
    )
    print(f"status      {row.status}")
    print(f"main iters  {row.main_iters}")
    print(f"bp iters    {row.bp_iters_total}")
    print(f"time (s)    {row.time_s:.3f}")
    if residual is not None:
        print(f"residual    {residual:.3e}")
        print(f"lambda_min  {row.lambda_min:.3e}")
    if isinstance(st, NoEpsFeasible):
        print(f"block       {st.block}")
    print(f"log10 rate  {row.log10_rate:.4f}")
    print(_row_json(row))
    return EXIT_CODES.get(type(st), 3)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _bench_task(task):
    path, cfg = task
    return solve_file(path, cfg)


def cmd_bench(args) -> int:
    corpus = Path(args.corpus)
    if not corpus.is_dir():
        print(f"error: corpus directory {corpus} not found", file=sys.stderr)
        return 3
    files = sorted(str(p) for p in corpus.glob("*.inst"))
    configs = [_config(args, c, b) for c in args.criterion or ["det"] for b in args.bp or ["mvn"]]
    tasks = [(f, cfg) for f in files for cfg in configs]
    workers = args.workers or default_workers()
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_bench_task, tasks))
    else:
        rows = [_bench_task(t) for t in tasks]

    buf = io.StringIO()
    write_csv(rows, buf)
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    for entry in summarize(rows):
        tail = entry.get("co_ratio") or entry.get("outputs")
        print(
            f"# {entry['family']:<10} {entry['group']:<12} {entry['criterion']:<5} {entry['bp']:<3} "
            f"{tail}  mean {entry['mean_time_s']:.3f}s",
            file=sys.stderr if not args.out else sys.stdout,
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="symcone", description="Symmetric-cone feasibility by projection and rescaling")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate seeded PSD instances")
    g.add_argument("--family", choices=["strong", "weak", "infeasible"], required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int)
    g.add_argument("--nu", type=float)
    g.add_argument("--tau", type=int)
    g.add_argument("--alpha", type=float)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=".")
    g.set_defaults(func=cmd_gen)

    def solver_flags(p, repeat: bool):
        if repeat:
            p.add_argument("--criterion", choices=["det", "trace"], action="append")
            p.add_argument("--bp", choices=["vn", "mvn", "sp"], action="append")
        else:
            p.add_argument("--criterion", choices=["det", "trace"], default="det")
            p.add_argument("--bp", choices=["vn", "mvn", "sp"], default="mvn")
        p.add_argument("--xi", type=float, default=0.25)
        p.add_argument("--eps", type=float, default=1e-12)
        p.add_argument("--time-limit", type=float, default=7200.0)

    s = sub.add_parser("solve", help="solve one instance file")
    s.add_argument("instance")
    solver_flags(s, repeat=False)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="solve a corpus under a matrix of configurations")
    b.add_argument("corpus")
    solver_flags(b, repeat=True)
    b.add_argument("--workers", type=int, default=None, help=f"parallel solves (default ${THREADS_ENV} or 1)")
    b.add_argument("--out", help="CSV path (default: stdout)")
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
