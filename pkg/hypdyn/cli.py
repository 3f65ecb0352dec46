"""Command line interface for the hypdyn lab."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigurationError, HypdynError
from .io_schema import dump_json, load_scenario, save_report, scenario_schema, write_trace_csv
from .registry import REGISTRY, find_entry, reproduce_all, run_entry, summary_rows
from .tasks import run_scenario

logger = logging.getLogger("hypdyn")


def _out_dir(args: argparse.Namespace) -> Path | None:
    if not args.out:
        return None
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_run(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = scenario.copy(update={"seed": args.seed})
    out = _out_dir(args)

    if scenario.task == "reproduce":
        result = run_entry(find_entry(scenario.task_params.example))
        report = result.dict()
        passed = result.passed
        space, traces = None, {}
    else:
        fmap, outcome = run_scenario(scenario)
        report, passed, traces = outcome.report, outcome.passed, outcome.traces
        space = fmap.space

    report_path = (out / "report.json") if out else (Path(scenario.report_path) if scenario.report_path else None)
    if report_path is None:
        print(dump_json(report))
    else:
        save_report(report, report_path)
        print(f"Report saved to {report_path}")

    trace_dir = out or (Path(scenario.trace_dir) if scenario.trace_dir else None)
    if trace_dir is not None and traces:
        trace_dir.mkdir(parents=True, exist_ok=True)
        for name, trace in traces.items():
            write_trace_csv(trace_dir / f"{name}.csv", space, trace.points, trace.horofunctions)
        logger.info("wrote %d traces to %s", len(traces), trace_dir)
    return 0 if passed else 1


def cmd_reproduce(args: argparse.Namespace) -> int:
    results = reproduce_all(args.filter)
    writer = csv.writer(sys.stdout, delimiter="\t", lineterminator="\n")
    writer.writerow(["id", "key", "expected", "computed", "tolerance", "verdict"])
    writer.writerows(summary_rows(results))
    failed = [r.id for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} examples passed")
    if args.out:
        Path(args.out).write_text(dump_json([r.dict() for r in results]))
    if failed:
        print(f"Failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def cmd_list_examples(args: argparse.Namespace) -> int:
    for entry in REGISTRY:
        print(f"{entry.id}\t[{', '.join(entry.tags)}]\t{entry.description}")
    return 0


def cmd_schema(args: argparse.Namespace) -> int:
    print(json.dumps(scenario_schema(), indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hypdyn")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logging")
    sub = parser.add_subparsers(dest="command")

    p_run = sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", default=None, help="directory for report.json and trace CSVs")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.set_defaults(func=cmd_run)

    p_rep = sub.add_parser("reproduce", help="run the registry of worked examples")
    p_rep.add_argument("--filter", default=None, help="substring of an example id, or a tag")
    p_rep.add_argument("--out", default=None, help="write the per-example results as JSON")
    p_rep.set_defaults(func=cmd_reproduce)

    p_list = sub.add_parser("list-examples", help="list registry entries")
    p_list.set_defaults(func=cmd_list_examples)

    p_schema = sub.add_parser("schema", help="print the scenario JSON schema")
    p_schema.set_defaults(func=cmd_schema)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if not hasattr(args, "func"):
        parser.print_help()
        return 1
    try:
        return int(args.func(args))
    except HypdynError as exc:
        print(f"Error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return ConfigurationError.exit_code
    except Exception as exc:  # pragma: no cover - CLI top-level handler
        print(f"Error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
