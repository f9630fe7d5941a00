"""Command-line entry point: ``lsdsim <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .analytics.detector import detect_arbitrages, findings_csv
from .analytics.lp import compare_lp_vs_hold, histories_from_csv, histories_to_csv, positions_from_trace
from .analytics.metrics import TickSeries, daily_metrics, metrics_csv
from .analytics.trace import EventTrace
from .errors import InvariantViolation, LsdSimError

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_INPUT = 2

EPILOG = """\
exit codes:
  0  success
  1  internal invariant violation (a bug; please report the inputs)
  2  user or input error (bad config, missing file, schema mismatch)
"""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse already exits 2; keep the message terse
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise LsdSimError(f"{path}: {exc.strerror}") from None


def _write(path: Path, text: str) -> None:
    # newline="" keeps output bytes identical across platforms
    with open(path, "w", newline="") as fh:
        fh.write(text)


def cmd_simulate(args: argparse.Namespace) -> int:
    from .scenario import Engine, load_config

    config = load_config(args.config)
    engine = Engine(config)
    trace, ticks, _ = engine.run()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "trace.csv", trace.to_csv())
    _write(out / "ticks.csv", ticks.to_csv())
    if config.lps:
        _write(out / "histories.csv", histories_to_csv(engine.histories))
    manifest = json.dumps(engine.manifest(), indent=2, sort_keys=True) + "\n"
    _write(out / "manifest.json", manifest)
    return EXIT_OK


def cmd_metrics(args: argparse.Namespace) -> int:
    series = TickSeries.from_csv(_read_text(args.ticks))
    _write(Path(args.out), metrics_csv(daily_metrics(series)))
    return EXIT_OK


def cmd_detect(args: argparse.Namespace) -> int:
    trace = EventTrace.from_csv(_read_text(args.trace))
    _write(Path(args.out), findings_csv(detect_arbitrages(trace, args.shapella)))
    return EXIT_OK


def cmd_lp_report(args: argparse.Namespace) -> int:
    trace = EventTrace.from_csv(_read_text(args.trace))
    histories = histories_from_csv(_read_text(args.histories))
    report = compare_lp_vs_hold(positions_from_trace(trace, histories), histories)
    _write(Path(args.out), report.to_csv())
    return EXIT_OK


def cmd_selfcheck(args: argparse.Namespace) -> int:
    from .selfcheck import run_checks

    failures = 0
    for name, ok, detail in run_checks():
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    if failures:
        raise InvariantViolation(f"{failures} self-check(s) failed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="lsdsim",
        description="Liquid staking derivative market simulator and analytics.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run a scenario; writes trace.csv, ticks.csv, manifest.json", epilog=EPILOG)
    p.add_argument("--config", required=True, help="scenario file (.json, .yaml or .yml)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", help="per-day realized volatility and price discrepancy", epilog=EPILOG)
    p.add_argument("--ticks", required=True, help="CSV with header timestamp,p1st_wad,p2nd_wad")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("detect", help="find staking and unstaking arbitrages in a trace", epilog=EPILOG)
    p.add_argument("--trace", required=True, help="event trace CSV")
    p.add_argument("--shapella", required=True, type=int, help="unix timestamp withdrawals were enabled")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("lp-report", help="LP versus buy-and-hold APR per closed position", epilog=EPILOG)
    p.add_argument("--trace", required=True, help="event trace CSV")
    p.add_argument("--histories", required=True, help="price history CSV written by simulate")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_lp_report)

    p = sub.add_parser("selfcheck", help="verify the core formulas against worked examples", epilog=EPILOG)
    p.set_defaults(func=cmd_selfcheck)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"lsdsim: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except LsdSimError as exc:
        print(f"lsdsim: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"lsdsim: error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
