"""``simulate`` command: run a scenario file and write its CSV table."""

import argparse
import os
import sys

from .config import ConfigError, load_config
from .hamiltonian import MODES
from .runner import run_scenario, write_csv


def _jobs_default():
    try:
        return max(1, int(os.environ.get("SIM_JOBS", "1")))
    except ValueError:
        return 1


def build_parser():
    ap = argparse.ArgumentParser(prog="simulate",
                                 description="Run a cavity Bose-Hubbard scenario and write CSV.")
    ap.add_argument("config", help="scenario file with 'key = value' lines")
    ap.add_argument("--out", help="output CSV path (default: 'output' key or <scenario>.csv)")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config key; may be repeated")
    ap.add_argument("--mode", choices=MODES, help="Hamiltonian used for ground states")
    ap.add_argument("--jobs", type=int, default=None,
                    help="concurrent sweep points (default: $SIM_JOBS or 1)")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = list(args.set)
    if args.mode:
        overrides.append(f"mode = {args.mode}")
    try:
        cfg = load_config(args.config, overrides)
    except (ConfigError, OSError, UnicodeDecodeError) as err:
        print(f"simulate: config error: {err}", file=sys.stderr)
        return 1
    jobs = args.jobs if args.jobs is not None else _jobs_default()
    if jobs < 1:
        print("simulate: config error: --jobs must be >= 1", file=sys.stderr)
        return 1
    try:
        table = run_scenario(cfg, jobs=jobs)
    except Exception as err:  # noqa: BLE001 -- numerical failure of a single run
        print(f"simulate: numerical failure: {type(err).__name__}: {err}", file=sys.stderr)
        return 2
    out = args.out or cfg.output_path or f"{cfg.scenario}.csv"
    write_csv(table, out)
    failed = table.metadata.get("failed_points", 0)
    print(f"wrote {len(table.rows)} rows to {out}" + (f" ({failed} failed points)" if failed else ""))
    return 0


if __name__ == "__main__":
    sys.exit(main())
