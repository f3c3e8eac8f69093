"""``simulate`` command line entry point.

Exit status: 0 when every expectation holds, 1 when any fails, 2 for bad
input (unreadable files, config or scenario errors, horizon too short).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import SimConfig, parse_config
from .controller import ConfigError
from .runner import HorizonError, check_expectations, default_horizon, run, transcript_text
from .scenario import ScenarioError, parse_scenario

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="simulate", description="Run an intrusion-alarm scenario on the virtual hardware.")
    p.add_argument("--config", type=Path, help="key = value config file (defaults used if omitted)")
    p.add_argument("--scenario", type=Path, required=True, help="scenario script")
    p.add_argument("--horizon", type=int, help="simulated run length in ms (default: last scenario time + 30000)")
    p.add_argument("--transcript", type=Path, help="write the JSON Lines transcript here ('-' for stdout)")
    p.add_argument("--quiet", action="store_true", help="suppress per-expectation verdict lines")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging to stderr")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = parse_config(args.config.read_text(encoding="utf-8")) if args.config else SimConfig()
        scenario = parse_scenario(args.scenario.read_text(encoding="utf-8"))
        horizon = args.horizon if args.horizon is not None else default_horizon(scenario)
        transcript = run(config, scenario, horizon)
    except (OSError, ConfigError, ScenarioError, HorizonError, UnicodeDecodeError) as exc:
        print(f"simulate: error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    if args.transcript is not None:
        text = transcript_text(transcript)
        if str(args.transcript) == "-":
            sys.stdout.write(text)
        else:
            args.transcript.write_text(text, encoding="ascii")

    report = check_expectations(transcript, scenario.expectations)
    if not args.quiet:
        for v in report.verdicts:
            print(f"{'PASS' if v.passed else 'FAIL'}  {v.message}")
        print(f"{sum(v.passed for v in report.verdicts)}/{len(report.verdicts)} expectations passed")
    return report.exit_status


if __name__ == "__main__":
    sys.exit(main())
