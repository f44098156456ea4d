"""Command line: run scenario files and write JSON-lines or table reports."""
from __future__ import annotations

import argparse
import sys

from .corpus import write_examples
from .errors import ScenarioError
from .scenario import format_json, format_table, load_scenario, run_scenario, traceability_table


def build_parser():
    p = argparse.ArgumentParser(prog="twistdex", description=__doc__)
    p.add_argument("--scenario", action="append", default=[], metavar="PATH",
                   help="scenario JSON file (repeatable)")
    p.add_argument("--format", choices=["json", "table"], default="json")
    p.add_argument("--tolerance", type=float, default=None,
                   help="relative rank tolerance (default 1e-9)")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--list-checks", action="store_true", help="print the suite traceability table")
    p.add_argument("--emit-examples", metavar="DIR", help="write the example scenario corpus")
    p.add_argument("--output", metavar="PATH", help="write the report here instead of stdout")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.list_checks:
        sys.stdout.write(traceability_table())
        return 0
    if args.emit_examples:
        for path in write_examples(args.emit_examples):
            print(path)
        return 0
    if not args.scenario:
        build_parser().print_usage(sys.stderr)
        return 2
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be non-negative", file=sys.stderr)
        return 2
    chunks, failed = [], False
    for path in args.scenario:
        try:
            data = load_scenario(path)
            records = run_scenario(data, seed=args.seed, rank_tol=args.tolerance)
        except ScenarioError as exc:
            print(f"error: {path}: {exc}", file=sys.stderr)
            return 2
        failed = failed or not all(r["pass"] for r in records[1:])
        chunks.append(format_table(records) if args.format == "table" else format_json(records))
        for r in records[1:]:
            if not r["pass"]:
                print(f"FAIL {data['name']}: {r['check']} {r.get('subject', '')} residual {r['residual']:.3e}",
                      file=sys.stderr)
    text = "".join(chunks)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
