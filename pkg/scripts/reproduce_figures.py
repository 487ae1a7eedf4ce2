#!/usr/bin/env python3
"""Regenerate the CSV data behind figures 2-5 into one results directory."""

import argparse
import sys
import time
from pathlib import Path

from cvqkd.cli import main


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--figures", type=int, nargs="+", default=[2, 3, 4, 5], choices=(2, 3, 4, 5))
    ap.add_argument("--order", type=int, default=64)
    return ap.parse_args()


def run():
    args = parse_args()
    for fig in args.figures:
        start = time.perf_counter()
        code = main(["figure", str(fig), "--order", str(args.order), "--out", str(args.out / f"figure{fig}")])
        print(f"figure {fig}: exit {code} in {time.perf_counter() - start:.1f}s", file=sys.stderr)
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(run())
