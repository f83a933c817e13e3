#!/usr/bin/env python3
"""Reproduce the unicast/multicast trade-off sweep for several array sizes.

Runs the boundary sweep with the built-in default scenario (or a JSON config)
and writes pareto.csv, pareto_plotdata.txt and convexity_report.json to the
output directory.
"""

import argparse
import sys

from mmjoint.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", help="JSON config (defaults built in)")
    parser.add_argument("--points", type=int, help="sweep points per curve")
    parser.add_argument("--seed", type=int, help="override the user-drop seed")
    parser.add_argument("--out", default="results/pareto",
                        help="output directory")
    args = parser.parse_args()

    cli_args = ["pareto", "--out", args.out]
    for flag in ("config", "points", "seed"):
        value = getattr(args, flag)
        if value is not None:
            cli_args += [f"--{flag}", str(value)]
    return cli_main(cli_args)


if __name__ == "__main__":
    sys.exit(main())
