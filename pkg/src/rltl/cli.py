"""Command-line front end: compile monitors, stream traces, analyze corpora.

Exit codes: 0 ok, 1 usage, 2 formula parse error, 3 state budget exceeded,
4 trace error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys

from .automata import DEFAULT_STATE_BUDGET, AlphabetError, StateBudgetError
from .monitor import (
    MonitorRun,
    TraceError,
    compile_with_report,
    monitor_from_json,
    monitor_to_dot,
    monitor_to_json,
)
from .syntax import CLASSICAL, ROBUST, FormulaError, parse

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_BUDGET = 3
EXIT_TRACE = 4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rltl", description="Robust LTL monitor compiler and runtime")
    sub = parser.add_subparsers(dest="command", required=True)

    p_compile = sub.add_parser("compile", help="compile a formula into a monitor artifact")
    p_compile.add_argument("formula", help="formula text")
    p_compile.add_argument("--flavor", choices=[ROBUST, CLASSICAL], default=ROBUST)
    p_compile.add_argument("--alphabet", help="comma-separated propositions (default: formula atoms)")
    p_compile.add_argument("--budget", type=int, default=DEFAULT_STATE_BUDGET)
    p_compile.add_argument("--format", choices=["text", "json"], default="text",
                           help="report format")
    p_compile.add_argument("--output", help="artifact file (default: artifact on stdout)")
    p_compile.set_defaults(func=cmd_compile)

    p_run = sub.add_parser("run", help="stream a trace through a compiled monitor")
    p_run.add_argument("monitor", help="monitor artifact file")
    p_run.add_argument("trace", nargs="?", default="-", help="trace file, or - for stdin")
    p_run.add_argument("--output", help="verdict stream file (default stdout)")
    p_run.set_defaults(func=cmd_run)

    p_analyze = sub.add_parser("analyze", help="monitorability table over a formula corpus")
    p_analyze.add_argument("corpus", help="file with one formula per line")
    p_analyze.add_argument("--alphabet", help="comma-separated propositions shared by the corpus")
    p_analyze.add_argument("--budget", type=int, default=DEFAULT_STATE_BUDGET)
    p_analyze.add_argument("--format", choices=["csv", "json"], default="csv")
    p_analyze.add_argument("--output", help="table file (default stdout)")
    p_analyze.set_defaults(func=cmd_analyze)

    p_export = sub.add_parser("export", help="export a monitor artifact")
    p_export.add_argument("monitor", help="monitor artifact file")
    p_export.add_argument("--format", choices=["dot", "json"], default="dot")
    p_export.add_argument("--output", help="export file (default stdout)")
    p_export.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "budget", 1) < 1:
            raise _UsageError("--budget must be at least 1")
        return args.func(args)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FormulaError, AlphabetError) as e:
        print(f"formula error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except StateBudgetError as e:
        print(f"budget error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except TraceError as e:
        print(f"trace error: {e}", file=sys.stderr)
        return EXIT_TRACE
    except OSError as e:
        print(f"file error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:  # malformed monitor artifact
        print(f"artifact error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # argparse --help
        return int(e.code or 0)


def _split_alphabet(text):
    if text is None:
        return None
    return {p.strip() for p in text.split(",") if p.strip()}


def _write(path, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)


def cmd_compile(args) -> int:
    formula = parse(args.formula, alphabet=_split_alphabet(args.alphabet), flavor=args.flavor)
    props = _split_alphabet(args.alphabet)
    if props is None:
        props = sorted(formula.atoms)
    monitor, report = compile_with_report(formula, props, args.budget)
    artifact = monitor_to_json(monitor)
    if args.format == "json":
        report_text = json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n"
    else:
        fields = report.to_json_dict()
        lines = [f"formula: {formula}"]
        for key in ("states", "outputs", "monitorable", "ugly_states", "build_ms"):
            lines.append(f"{key}: {json.dumps(fields[key])}")
        for stage, size in sorted(report.stage_sizes.items()):
            lines.append(f"stage {stage}: {size}")
        report_text = "\n".join(lines) + "\n"
    if args.output is None:
        sys.stdout.write(artifact)
        sys.stderr.write(report_text)
    else:
        _write(args.output, artifact)
        sys.stdout.write(report_text)
    return EXIT_OK


_TRACE_SPLIT = re.compile(r"[,\s]+")


def parse_trace_line(line: str) -> frozenset:
    """One event per line: propositions separated by spaces or commas;
    a blank line or {} is the empty event."""
    text = line.strip()
    if text in ("", "{}"):
        return frozenset()
    return frozenset(p for p in _TRACE_SPLIT.split(text) if p)


def read_trace(handle):
    """Yield (line_number, event) pairs, skipping comment lines."""
    for number, line in enumerate(handle, start=1):
        if line.strip().startswith("#"):
            continue
        yield number, parse_trace_line(line)


def cmd_run(args) -> int:
    with open(args.monitor, "r", encoding="utf-8") as handle:
        monitor = monitor_from_json(handle.read())
    run = MonitorRun(monitor)
    lines = [f"0 {run.current_output}"]
    close = False
    if args.trace == "-":
        source = sys.stdin
    else:
        source = open(args.trace, "r", encoding="utf-8")
        close = True
    try:
        for number, event in read_trace(source):
            try:
                verdict = run.step(event)
            except TraceError as e:
                raise TraceError(f"trace line {number}: {e}") from None
            lines.append(f"{run.steps} {verdict}")
    finally:
        if close:
            source.close()
    lines.append(f"final {run.current_output}")
    _write(args.output, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_analyze(args) -> int:
    with open(args.corpus, "r", encoding="utf-8") as handle:
        corpus_lines = handle.readlines()
    alphabet = _split_alphabet(args.alphabet)
    rows = []
    for number, line in enumerate(corpus_lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        row = {"line": number, "formula": text}
        for mode, flavor in (("rltl", ROBUST), ("ltl3", CLASSICAL)):
            try:
                formula = parse(text, alphabet=alphabet, flavor=flavor)
                props = sorted(formula.atoms) if alphabet is None else sorted(alphabet)
                _monitor, report = compile_with_report(formula, props, args.budget)
            except (FormulaError, AlphabetError, StateBudgetError) as e:
                row["error"] = str(e)
                break
            row[f"{mode}_states"] = report.state_count
            row[f"{mode}_outputs"] = report.distinct_outputs
            row[f"{mode}_monitorable"] = report.monitorable
            row[f"{mode}_build_ms"] = round(report.build_ms, 3)
        rows.append(row)

    built = [r for r in rows if "error" not in r]
    aggregate = {"formulas": len(rows), "built": len(built)}
    for mode in ("rltl", "ltl3"):
        good = sum(1 for r in built if r[f"{mode}_monitorable"])
        aggregate[f"{mode}_monitorable"] = good
        aggregate[f"{mode}_monitorable_pct"] = (
            round(100.0 * good / len(built), 1) if built else 0.0
        )

    if args.format == "json":
        text = json.dumps({"rows": rows, "aggregate": aggregate}, indent=2, sort_keys=True) + "\n"
    else:
        header = [
            "line", "formula",
            "rltl_states", "rltl_outputs", "rltl_monitorable", "rltl_build_ms",
            "ltl3_states", "ltl3_outputs", "ltl3_monitorable", "ltl3_build_ms",
            "error",
        ]
        out = [",".join(header)]
        for row in rows:
            cells = []
            for key in header:
                value = row.get(key, "")
                if isinstance(value, bool):
                    value = "true" if value else "false"
                value = str(value)
                if "," in value or '"' in value:
                    value = '"' + value.replace('"', '""') + '"'
                cells.append(value)
            out.append(",".join(cells))
        for key in sorted(aggregate):
            out.append(f"# {key}={aggregate[key]}")
        text = "\n".join(out) + "\n"
    _write(args.output, text)
    return EXIT_OK


def cmd_export(args) -> int:
    with open(args.monitor, "r", encoding="utf-8") as handle:
        monitor = monitor_from_json(handle.read())
    if args.format == "dot":
        text = monitor_to_dot(monitor)
    else:
        text = monitor_to_json(monitor)
    _write(args.output, text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
