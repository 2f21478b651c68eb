"""Command line entry point: generate, run, sweep, report."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

from qcut.circuit import circuit_to_dict, cut_circuit, cuts_to_json
from qcut.errors import QcutError
from qcut.harness import METHODS, ExperimentConfig, instance_circuit, report, run_cell, run_sweep


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcut", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="emit a clustered random circuit and its cuts as JSON")
    gen.add_argument("--qubits", type=int, required=True)
    gen.add_argument("--fragments", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--instance", type=int, default=0)
    gen.add_argument("--out", type=Path, help="output file (default stdout)")

    run = sub.add_parser("run", help="evaluate a single (Q, F, S, instance, method) cell")
    run.add_argument("--qubits", type=int, required=True)
    run.add_argument("--fragments", type=int, required=True)
    run.add_argument("--shots", type=int, required=True)
    run.add_argument("--method", choices=METHODS, required=True)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--instance", type=int, default=0)

    sweep = sub.add_parser("sweep", help="run a configured sweep into a resumable CSV")
    sweep.add_argument("--config", type=Path, required=True)
    sweep.add_argument("--out", type=Path, required=True)
    sweep.add_argument("--jobs", type=int, default=1)
    sweep.add_argument("--cache-dir", type=Path, help="directory for cached circuit JSON")

    rep = sub.add_parser("report", help="summarize a sweep CSV into per-panel data files")
    rep.add_argument("--in", dest="csv", type=Path, required=True)
    rep.add_argument("--out-dir", type=Path, required=True)
    rep.add_argument("--plots", action="store_true", help="also render SVG charts (needs matplotlib)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "generate":
            circuit, cuts = instance_circuit(args.seed, args.qubits, args.fragments, args.instance)
            graph = cut_circuit(circuit, cuts)
            doc = {
                "circuit": circuit_to_dict(circuit),
                "cuts": cuts_to_json(cuts),
                "num_variants": graph.num_variants,
                "num_cuts": graph.num_cuts,
            }
            text = json.dumps(doc, indent=1)
            if args.out:
                args.out.write_text(text + "\n")
            else:
                print(text)
        elif args.command == "run":
            record = run_cell(args.qubits, args.fragments, args.shots, args.instance, args.method, args.seed)
            print(json.dumps(asdict(record)))
        elif args.command == "sweep":
            config = ExperimentConfig.load(args.config)
            written = run_sweep(config, args.out, jobs=args.jobs, cache_dir=args.cache_dir)
            print(f"wrote {written} rows to {args.out}")
        elif args.command == "report":
            summary = report(args.csv, args.out_dir, plots=args.plots)
            print(f"{len(summary)} summary rows written to {args.out_dir}")
    except (QcutError, ValueError, KeyError, OSError) as exc:
        print(f"qcut: error: {exc}", file=sys.stderr)
        return 2
    return 0
