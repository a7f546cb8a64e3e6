"""Operator command line.

  jason-rs serve --listen ADDR --accounts FILE --agents DIR
  jason-rs run-scenario --spec FILE
  jason-rs bench --method GET|POST --n N --url URL
  jason-rs check FILE.asl

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from .bench import BenchError, bench, write_csv
from .iot_platform import load_accounts
from .parser import ParseError, parse_program
from .runtime import QuiescenceTimeout
from .scenario import ScenarioSpec, expected_allocation, run_scenario
from .server import AppStack, parse_listen
from .terms import lint_rules

USAGE_EXIT = 1
FAILURE_EXIT = 2

log = logging.getLogger("jason_rs.cli")


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage by default; 2 is reserved for runtime
    failures here, so usage problems exit 1."""

    def error(self, message: str) -> "None":  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="jason-rs",
                     description="Agent runtime, object platform and scenario tools")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    serve = sub.add_parser("serve", help="run the HTTP control center")
    serve.add_argument("--listen", default=None,
                       help="host:port (overrides JASON_RS_LISTEN; default 127.0.0.1:8080)")
    serve.add_argument("--accounts", default=None, help="accounts file (username:password:service per line)")
    serve.add_argument("--agents", default=None,
                       help="directory of .asl programs; agent name = file stem")

    scen = sub.add_parser("run-scenario", help="run the allocation scenario in-process")
    scen.add_argument("--spec", required=True, help="scenario spec JSON file")

    bn = sub.add_parser("bench", help="latency benchmark against a running server")
    bn.add_argument("--method", required=True, choices=["GET", "POST"])
    bn.add_argument("--n", type=int, default=100, help="sample count (min 30)")
    bn.add_argument("--url", required=True)
    bn.add_argument("--csv", default=None, help="CSV output path (default bench_<method>.csv)")

    check = sub.add_parser("check", help="parse and lint an agent program")
    check.add_argument("file", help="path to a .asl source file")

    return parser


def _cmd_serve(args: argparse.Namespace) -> int:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s: %(message)s")
    listen = args.listen or os.environ.get("JASON_RS_LISTEN") or "127.0.0.1:8080"
    try:
        host, port = parse_listen(listen)
    except ValueError as exc:
        print(f"jason-rs serve: {exc}", file=sys.stderr)
        return USAGE_EXIT

    accounts = {}
    if args.accounts:
        try:
            accounts = load_accounts(args.accounts)
        except (OSError, ValueError) as exc:
            print(f"jason-rs serve: cannot load accounts: {exc}", file=sys.stderr)
            return FAILURE_EXIT

    programs = {}
    if args.agents:
        agents_dir = Path(args.agents)
        if not agents_dir.is_dir():
            print(f"jason-rs serve: not a directory: {agents_dir}", file=sys.stderr)
            return FAILURE_EXIT
        for source_file in sorted(agents_dir.glob("*.asl")):
            try:
                programs[source_file.stem] = parse_program(
                    source_file.read_text(encoding="utf-8"))
            except ParseError as exc:
                print(f"jason-rs serve: {source_file}: {exc}", file=sys.stderr)
                return FAILURE_EXIT
    if not programs:
        log.warning("serving with no agents loaded")

    try:
        stack = AppStack(programs, accounts)
        server = stack.start_http(host, port)
    except OSError as exc:
        print(f"jason-rs serve: cannot listen on {host}:{port}: {exc}", file=sys.stderr)
        return FAILURE_EXIT
    print(f"listening on {server.base_url} with agents: {', '.join(programs) or '(none)'}")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        stack.shutdown()
    return 0


def _cmd_run_scenario(args: argparse.Namespace) -> int:
    logging.basicConfig(level=logging.WARNING)
    try:
        data = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        spec = ScenarioSpec.from_json(data)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"jason-rs run-scenario: bad spec: {exc}", file=sys.stderr)
        return FAILURE_EXIT
    script = [(int(f), v) for f, v in data.get("script", [])]
    try:
        result = run_scenario(spec, script)
    except (QuiescenceTimeout, ValueError) as exc:
        print(f"jason-rs run-scenario: {exc}", file=sys.stderr)
        return FAILURE_EXIT
    for line in result.decision_trace():
        print(line)
    final = result.final_decision()
    loads: dict[str, object] = {}
    for feature_id, value in script:
        target = result.feature_ids.get(feature_id)
        if target is not None:
            loads[target] = value
    print(f"final: {final}")
    print(f"expected: allocate({expected_allocation(spec, loads)})")
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    logging.basicConfig(level=logging.WARNING)
    try:
        report = bench(args.method, args.n, args.url)
    except ValueError as exc:
        print(f"jason-rs bench: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except BenchError as exc:
        print(f"jason-rs bench: {exc}", file=sys.stderr)
        return FAILURE_EXIT
    csv_path = args.csv or f"bench_{args.method.lower()}.csv"
    write_csv(report, csv_path)
    print(report.table())
    print(f"csv written to {csv_path}")
    return 0


def _cmd_check(args: argparse.Namespace) -> int:
    logging.basicConfig(level=logging.WARNING)
    path = Path(args.file)
    try:
        source = path.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"jason-rs check: {exc}", file=sys.stderr)
        return FAILURE_EXIT
    try:
        program = parse_program(source)
    except ParseError as exc:
        print(f"{path}:{exc.line}:{exc.column}: {exc}", file=sys.stderr)
        return FAILURE_EXIT
    for warning in lint_rules(program.rules):
        print(f"{path}: warning: {warning}", file=sys.stderr)
    print(f"{path}: ok ({len(program.initial_beliefs)} beliefs, "
          f"{len(program.rules)} rules, {len(program.plans)} plans)")
    return 0


def main(argv: "list[str] | None" = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "serve": _cmd_serve,
        "run-scenario": _cmd_run_scenario,
        "bench": _cmd_bench,
        "check": _cmd_check,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
