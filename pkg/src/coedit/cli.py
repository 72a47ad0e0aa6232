"""Command-line entry point: scenario runs, puzzle searches, interleaving
studies, benchmarks, fuzzing, and the relay server.

Reports are JSON (default) or CSV (benchmarks) written to --out or stdout.
Exit status: 0 clean, 1 failed assertion/divergence where cleanliness is
expected, 2 usage errors. COEDIT_WORKERS caps worker threads for batch
commands (default 1).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .bench import bench_scaling, bench_tombstone, records_to_csv
from .engines import LOGOOT, OT, SYMMETRIC_ENGINES, WOOT
from .errors import CoEditError
from .fuzz import fuzz_convergence
from .interleave import scenario_interleaving
from .logoot import ALLOCATION_STRATEGIES, BOUNDARY, UNIFORM
from .ot import NAIVE_LEFT, SITE_ORDER
from .scenario import load_script
from .sim import check_convergence, run_scenario
from .sweeps import search_ft_puzzle


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("COEDIT_WORKERS", "1")))
    except ValueError:
        return 1


def _emit(data, out: str | None, as_csv: bool = False) -> None:
    text = data if as_csv else json.dumps(data, indent=2, ensure_ascii=False) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_run(args) -> int:
    try:
        script = load_script(args.scenario)
    except (OSError, ValueError, KeyError, CoEditError) as exc:
        print(f"cannot load scenario: {exc}", file=sys.stderr)
        return 2
    result = run_scenario(script, args.engine, tie_break=args.tie_break, strategy=args.strategy)
    report = check_convergence(result)
    _emit(
        {
            "command": "run",
            "engine": args.engine,
            "seed": script.seed,
            "scenario": str(args.scenario),
            "converged": report.converged,
            "divergence_index": report.divergence_index,
            "texts": {str(k): v for k, v in result.texts.items()},
            "metrics": {str(k): v for k, v in result.metrics.items()},
            "failures": result.failures,
            "trace_len": len(result.trace),
        },
        args.out,
    )
    return 0 if report.converged and not result.failures else 1


def _cmd_search_ft(args) -> int:
    flawed = search_ft_puzzle(args.max_ops, args.doc_len, tie_break=NAIVE_LEFT)
    clean = search_ft_puzzle(args.max_ops, args.doc_len, tie_break=SITE_ORDER)
    _emit(
        {
            "command": "search-ft",
            "space": {"max_ops": args.max_ops, "doc_len": args.doc_len, "alphabet": "ab"},
            "naive_left": {
                "cases": flawed.cases,
                "witnesses": [w.to_dict() for w in flawed.witnesses],
                "elapsed_s": round(flawed.elapsed_s, 3),
            },
            "site_order": {
                "cases": clean.cases,
                "witnesses": [w.to_dict() for w in clean.witnesses],
                "elapsed_s": round(clean.elapsed_s, 3),
            },
        },
        args.out,
    )
    # expected outcome: the flawed tie-break diverges somewhere, the sound one nowhere
    return 0 if flawed.witnesses and not clean.witnesses else 1


def _cmd_interleave(args) -> int:
    reports = []
    runs = [(OT, SITE_ORDER, BOUNDARY), (WOOT, SITE_ORDER, BOUNDARY)]
    runs += [(LOGOOT, SITE_ORDER, s) for s in (BOUNDARY, UNIFORM)]
    for engine, tie, strat in runs:
        r = scenario_interleaving(
            args.word_a, args.word_b, engine, seeds=args.seeds, strategy=strat, tie_break=tie
        )
        reports.append(
            {
                "engine": engine,
                "strategy": r.strategy,
                "runs": r.runs,
                "converged": r.converged,
                "contiguous": r.contiguous,
                "noncontiguous": r.noncontiguous,
                "examples": r.noncontiguous_examples,
            }
        )
    _emit({"command": "interleave", "word_a": args.word_a, "word_b": args.word_b, "reports": reports}, args.out)
    return 0


def _cmd_bench_tombstone(args) -> int:
    records = []
    for engine in args.engines:
        for f in args.fractions:
            records.extend(bench_tombstone(args.insertions, f, engine))
    if args.csv:
        _emit(records_to_csv(records), args.out, as_csv=True)
    else:
        _emit({"command": "bench-tombstone", "records": [r.to_dict() for r in records]}, args.out)
    return 0


def _cmd_bench_scaling(args) -> int:
    records = []
    for engine in args.engines:
        records.extend(bench_scaling(args.sizes, args.c, engine, windows=args.windows))
    if args.csv:
        _emit(records_to_csv(records), args.out, as_csv=True)
    else:
        _emit({"command": "bench-scaling", "records": [r.to_dict() for r in records]}, args.out)
    return 0


def _cmd_fuzz(args) -> int:
    summaries = []
    workers = _workers()

    def one(engine: str):
        return fuzz_convergence(
            engine,
            runs=args.runs,
            ops_per_site=args.ops_per_site,
            num_sites=args.sites,
            seed0=args.seed,
        )

    if workers > 1 and len(args.engines) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, args.engines))
    else:
        results = [one(e) for e in args.engines]
    failed = False
    for engine, s in zip(args.engines, results):
        summaries.append(
            {
                "engine": engine,
                "runs": s.runs,
                "converged": s.converged,
                "divergences": s.divergences,
                "max_concurrency": s.max_concurrency_seen,
                "witnesses": [w.to_dict() for w in s.witnesses],
            }
        )
        # a Logoot divergence is a reproduction (reported, not fatal);
        # OT/WOOT divergences fail the run
        if s.divergences and engine in (OT, WOOT):
            failed = True
    _emit({"command": "fuzz", "seed0": args.seed, "summaries": summaries}, args.out)
    return 1 if failed else 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .relay import create_app

    app = create_app(
        default_engine=args.engine,
        default_mode=args.mode,
        idle_timeout_s=args.idle_timeout,
        log_dir=args.log_dir,
        static_dir=args.static,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coedit", description=__doc__)
    p.add_argument("--version", action="version", version=f"coedit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    engines = list(SYMMETRIC_ENGINES)

    run = sub.add_parser("run", help="run a scenario file through one engine")
    run.add_argument("scenario", help="path to a scenario JSON file")
    run.add_argument("--engine", choices=engines + ["ot-server"], default=OT)
    run.add_argument("--tie-break", choices=[SITE_ORDER, NAIVE_LEFT], default=SITE_ORDER)
    run.add_argument("--strategy", choices=list(ALLOCATION_STRATEGIES), default=BOUNDARY)
    run.add_argument("--out")
    run.set_defaults(fn=_cmd_run)

    ft = sub.add_parser("search-ft", help="exhaustive false-tie divergence search")
    ft.add_argument("--max-ops", type=int, default=3, choices=[1, 2, 3])
    ft.add_argument("--doc-len", type=int, default=3, choices=[0, 1, 2, 3])
    ft.add_argument("--out")
    ft.set_defaults(fn=_cmd_search_ft)

    il = sub.add_parser("interleave", help="concurrent-word interleaving study")
    il.add_argument("--word-a", default="Alice")
    il.add_argument("--word-b", default="Bob")
    il.add_argument("--seeds", type=int, default=100)
    il.add_argument("--out")
    il.set_defaults(fn=_cmd_interleave)

    bt = sub.add_parser("bench-tombstone", help="deletion-overhead benchmark")
    bt.add_argument("--insertions", type=int, default=2000)
    bt.add_argument("--fractions", type=float, nargs="+", default=[0.0, 0.25, 0.5])
    bt.add_argument("--engines", nargs="+", choices=engines, default=[WOOT, LOGOOT])
    bt.add_argument("--csv", action="store_true")
    bt.add_argument("--out")
    bt.set_defaults(fn=_cmd_bench_tombstone)

    bs = sub.add_parser("bench-scaling", help="document-size scaling benchmark")
    bs.add_argument("--sizes", type=int, nargs="+", default=[1000, 10000, 100000])
    bs.add_argument("--c", type=int, default=10, help="concurrency window (<= 10)")
    bs.add_argument("--windows", type=int, default=3)
    bs.add_argument("--engines", nargs="+", choices=engines, default=engines)
    bs.add_argument("--csv", action="store_true")
    bs.add_argument("--out")
    bs.set_defaults(fn=_cmd_bench_scaling)

    fz = sub.add_parser("fuzz", help="randomized convergence fuzzing")
    fz.add_argument("--runs", type=int, default=1000)
    fz.add_argument("--ops-per-site", type=int, default=20)
    fz.add_argument("--sites", type=int, default=3)
    fz.add_argument("--seed", type=int, default=0)
    fz.add_argument("--engines", nargs="+", choices=engines, default=engines)
    fz.add_argument("--out")
    fz.set_defaults(fn=_cmd_fuzz)

    sv = sub.add_parser("serve", help="start the live co-editing relay")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8700)
    sv.add_argument("--engine", choices=engines + ["ot-server"], default=OT)
    sv.add_argument("--mode", choices=["replica-proxy", "transforming-server", "pure-relay"],
                    default="replica-proxy")
    sv.add_argument("--idle-timeout", type=float, default=600.0)
    sv.add_argument("--log-dir", default=None, help="append-only per-session debug logs")
    sv.add_argument("--static", default=None, help="directory with the browser client")
    sv.set_defaults(fn=_cmd_serve)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CoEditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
