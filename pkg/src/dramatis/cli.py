"""Command-line tools: validate scripts, replay traces, host live sessions.

Exit codes: 0 success, 1 validation errors or golden mismatch, 2 parse or
input errors, 3 validation errors blocking a run, 4 runtime errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .errors import DramaError, ParseError
from .parser import parse_script_file
from .runtime import RuntimeConfig, run_trace
from .tracefile import format_log, load_trace
from .validate import validate_script

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_RUNTIME = 4


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="dramatis", description="Interactive-drama engine tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check a script and report findings")
    p_validate.add_argument("script", type=Path)
    p_validate.add_argument("--format", choices=("human", "lines"), default="human")

    p_run = sub.add_parser("run", help="replay an event trace deterministically")
    p_run.add_argument("script", type=Path)
    p_run.add_argument("--trace", type=Path, required=True)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--theta", type=float, default=0.5,
                       help="rule firing threshold in (0, 0.5]")
    p_run.add_argument("--tau", type=int, default=10,
                       help="default NOTP latency in ticks")
    p_run.add_argument("--golden", type=Path, default=None,
                       help="compare the produced log against this file")

    p_serve = sub.add_parser("serve", help="host live sessions over HTTP/WebSocket")
    p_serve.add_argument("script", type=Path)
    p_serve.add_argument("--port", type=int, default=8750)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--tick-ms", type=int, default=1000,
                         help="wall-clock milliseconds per tick")
    p_serve.add_argument("--theta", type=float, default=0.5)
    p_serve.add_argument("--tau", type=int, default=10)
    p_serve.add_argument("--session-log-dir", type=Path, default=None,
                         help="append per-session log and trace files here")

    args = parser.parse_args(argv)
    try:
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_serve(args)
    except ParseError as exc:
        print(f"parse error [{exc.code}] {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


def _cmd_validate(args: argparse.Namespace) -> int:
    doc = parse_script_file(args.script)
    report = validate_script(doc)
    if args.format == "lines":
        if report.findings:
            print(report.to_lines())
    else:
        for finding in report.findings:
            print(finding.as_line())
        errors, warnings = len(report.errors()), len(report.warnings())
        verdict = "ok" if report.ok else "invalid"
        print(f"{verdict}: {errors} error(s), {warnings} warning(s)")
    return EXIT_OK if report.ok else EXIT_INVALID


def _cmd_run(args: argparse.Namespace) -> int:
    doc = parse_script_file(args.script)
    report = validate_script(doc)
    if not report.ok:
        for finding in report.errors():
            print(finding.as_line(), file=sys.stderr)
        return EXIT_VALIDATION
    trace = load_trace(args.trace)
    config = RuntimeConfig(theta_fire=args.theta, tau_notp=args.tau)
    try:
        log = run_trace(doc, trace, config, args.seed)
    except DramaError as exc:
        index = getattr(exc, "event_index", "?")
        print(f"runtime error at event {index}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    text = format_log(log)
    sys.stdout.write(text)
    if args.golden is not None:
        golden = args.golden.read_text(encoding="utf-8")
        if golden != text:
            print("golden mismatch:", file=sys.stderr)
            _print_diff(golden, text)
            return EXIT_INVALID
    return EXIT_OK


def _print_diff(golden: str, produced: str) -> None:
    golden_lines = golden.splitlines()
    produced_lines = produced.splitlines()
    for i in range(max(len(golden_lines), len(produced_lines))):
        want = golden_lines[i] if i < len(golden_lines) else "<missing>"
        got = produced_lines[i] if i < len(produced_lines) else "<missing>"
        if want != got:
            print(f"  line {i + 1}:", file=sys.stderr)
            print(f"    golden:   {want}", file=sys.stderr)
            print(f"    produced: {got}", file=sys.stderr)


def _cmd_serve(args: argparse.Namespace) -> int:
    from .service import serve_sessions  # aiohttp import deferred off the fast paths

    doc = parse_script_file(args.script)
    report = validate_script(doc)
    if not report.ok:
        for finding in report.errors():
            print(finding.as_line(), file=sys.stderr)
        return EXIT_VALIDATION
    config = RuntimeConfig(theta_fire=args.theta, tau_notp=args.tau)
    verbosity = os.environ.get("DRAMATIS_LOG", "info")
    serve_sessions(doc, host=args.host, port=args.port, tick_ms=args.tick_ms,
                   config=config, session_log_dir=args.session_log_dir,
                   verbosity=verbosity)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
