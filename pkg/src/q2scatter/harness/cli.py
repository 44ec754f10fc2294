"""Command-line entry point: ``q2scatter {verify,q2,oracle,epsilon-scan}``.

Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from ..errors import ConfigError
from .campaigns import run_campaign
from .config import CAMPAIGNS, load_config
from .report import persist_run

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="q2scatter", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="campaign", required=True)
    for name in CAMPAIGNS:
        p = sub.add_parser(name, help=f"run the {name} campaign")
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--seed", type=int, help="random seed (overrides seed)")
        p.add_argument("--threads", type=int, help="worker threads (overrides threads)")
        p.add_argument("--set", dest="assignments", action="append", default=[], metavar="KEY=VALUE",
                       help="override a configuration value by dot path, e.g. pv.r_max=64")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_PASS
    try:
        cfg = load_config(args.config, args.assignments, campaign=args.campaign, seed=args.seed,
                          threads=args.threads, output_dir=args.out)
        report = run_campaign(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        out = persist_run(report)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for v in report.verdicts:
        print(f"{'PASS' if v.passed else 'FAIL'}  {v.name}  value={v.value!r}  threshold={v.threshold!r}"
              + (f"  {v.note}" if v.note else ""))
    for note in report.notes:
        print(f"note: {note}")
    print(json.dumps({"output": str(out), "passed": report.passed, "failing_checks": report.failing_checks}))
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
