"""Run the three guarantee suites end to end and drop CSVs in ./bench_out.

Usage: python scripts/run_benches.py [--out DIR] [--quick]
"""

import argparse
import sys
from pathlib import Path

from budgeted_efx.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="bench_out")
    parser.add_argument(
        "--quick", action="store_true", help="small counts for a smoke run"
    )
    args = parser.parse_args()

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    worst = 0
    for suite, quick_count in (("two-agent", 20), ("three-agent", 10), ("oracles", 5)):
        argv = ["bench", "--suite", suite, "--out", str(out_dir / f"{suite}.csv")]
        if args.quick:
            argv += ["--count", str(quick_count)]
        code = cli_main(argv)
        print(f"{suite}: exit {code} -> {out_dir / (suite + '.csv')}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
