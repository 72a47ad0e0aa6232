#!/usr/bin/env python3
"""Run the headline comparisons end to end and print a compact summary:
false-tie search, concurrent-insert interleaving, tombstone overhead, and
cost scaling. Writes JSON reports next to this script unless --out is given.

Usage: python scripts/reproduce_findings.py [--out DIR] [--quick]
"""

import argparse
import json
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from coedit.bench import bench_scaling, bench_tombstone
from coedit.interleave import scenario_interleaving
from coedit.sweeps import search_ft_puzzle


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=None)
    ap.add_argument("--quick", action="store_true", help="smaller spaces, ~15s total")
    args = ap.parse_args()
    out_dir = Path(args.out) if args.out else Path(__file__).parent / "out"
    out_dir.mkdir(parents=True, exist_ok=True)
    report = {}

    t0 = time.time()
    ops, doc = (2, 1) if args.quick else (3, 3)
    flawed = search_ft_puzzle(max_ops=ops, doc_len=doc)
    clean = search_ft_puzzle(max_ops=ops, doc_len=doc, tie_break="site-order")
    report["false_tie"] = {
        "naive_left_witnesses": len(flawed.witnesses),
        "site_order_witnesses": len(clean.witnesses),
        "cases": flawed.cases,
    }
    print(
        f"[false-tie] naive-left: {len(flawed.witnesses)} divergence witnesses over "
        f"{flawed.cases} cases; site-order: {len(clean.witnesses)}"
    )
    if flawed.witnesses:
        w = flawed.witnesses[0]
        print(f"  smallest: doc {w.initial!r}, ops {list(w.intents)} -> texts {dict(w.texts)}")

    seeds = 30 if args.quick else 100
    il = {}
    for engine, strategy in (("ot", "boundary"), ("woot", "boundary"), ("logoot", "boundary"), ("logoot", "uniform")):
        r = scenario_interleaving("Alice", "Bob", engine, seeds=seeds, strategy=strategy)
        key = engine if engine != "logoot" else f"logoot-{strategy}"
        il[key] = {"noncontiguous": r.noncontiguous, "runs": r.runs, "examples": r.noncontiguous_examples[:3]}
        print(f"[interleave] {key}: {r.noncontiguous}/{r.runs} runs interleaved the words")
    report["interleaving"] = il

    n = 500 if args.quick else 2000
    ts = []
    for engine in ("woot", "logoot"):
        for frac in (0.0, 0.5):
            rec = bench_tombstone(n, frac, engine)[0]
            ts.append(rec.to_dict())
            print(
                f"[tombstone] {engine} f={frac}: visible {rec.doc_size}, "
                f"space proxy {rec.space_proxy}, remote probe {rec.remote_time_us:.0f}us "
                f"({rec.work_per_remote_max} max work units)"
            )
    report["tombstone"] = ts

    sizes = [1000, 5000] if args.quick else [1000, 10000, 100000]
    sc = []
    for engine in ("ot", "woot", "logoot"):
        for rec in bench_scaling(sizes, 10, engine, windows=2):
            sc.append(rec.to_dict())
            print(
                f"[scaling] {engine} {rec.workload} C={rec.doc_size}: "
                f"work max {rec.work_per_remote_max}, local {rec.local_time_us:.1f}us, "
                f"remote {rec.remote_time_us:.0f}us"
            )
    report["scaling"] = sc

    out = out_dir / "findings.json"
    out.write_text(json.dumps(report, indent=2))
    print(f"done in {time.time() - t0:.0f}s; full report at {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
