"""Run the acceptance bench suite and print the CSV.

    python3 scripts/run_acceptance.py [--suite configs/acceptance_suite.json]
"""

import argparse
import sys
from pathlib import Path

from relu_regress import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--suite", default="configs/acceptance_suite.json")
    ap.add_argument("--override", action="append", default=[])
    args = ap.parse_args()
    _, out_csv = cli.cmd_bench(args.suite, args.override)
    sys.stdout.write(Path(out_csv).read_text())


if __name__ == "__main__":
    main()
