"""Time the full transition-system build for each corpus theory,
optionally with a parallel frontier."""
import argparse
import time
from pathlib import Path

from clocksit.dsl import parse_bat
from clocksit.reach import build_absts

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--jobs", type=int, nargs="+", default=[1])
    ap.add_argument("bats", nargs="*", default=["oven.bat", "lamps.bat", "coffee.bat"])
    args = ap.parse_args()
    for name in args.bats:
        bat = parse_bat((CORPUS / name).read_text(), name)
        for jobs in args.jobs:
            t = time.perf_counter()
            ts = build_absts(bat, jobs=jobs)
            dt = time.perf_counter() - t
            print(f"{name:12} jobs={jobs:<2} K={ts.K} states={len(ts):>7} "
                  f"edges={len(ts.raw_edges):>8} {dt:7.2f}s")


if __name__ == "__main__":
    main()
