"""Run every shipped preset and print its verdicts.

    python scripts/run_presets.py --out sim_out [--only test2 test3]
"""

import argparse
import sys

from heatnet.experiments import cli
from heatnet.experiments.scenario import PRESETS


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="sim_out")
    parser.add_argument("--only", nargs="+", choices=PRESETS, default=list(PRESETS))
    parser.add_argument("--jobs", type=int, default=4)
    args = parser.parse_args()
    return cli.main(["run", *args.only, "--out", args.out, "--jobs", str(args.jobs), "--assert"])


if __name__ == "__main__":
    sys.exit(main())
