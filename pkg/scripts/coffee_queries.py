"""Decide every query in corpus/queries.txt against the coffee theory and
print the verdict, time, explored states and witness."""
import argparse
import time
from pathlib import Path

from clocksit.dsl import parse_bat, parse_formula
from clocksit.reach import format_witness, reachable

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--bat", default=str(CORPUS / "coffee.bat"))
    ap.add_argument("--queries", default=str(CORPUS / "queries.txt"))
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    bat = parse_bat(Path(args.bat).read_text(), args.bat)
    for line in Path(args.queries).read_text().splitlines():
        if not line.strip() or line.lstrip().startswith("//"):
            continue
        phi = parse_formula(line, bat)
        t = time.perf_counter()
        r = reachable(bat, phi, jobs=args.jobs)
        dt = time.perf_counter() - t
        verdict = "reachable" if r.reachable else "not reachable"
        print(f"{line}\n  {verdict} in {dt:.2f}s, {r.states_explored} states, K={r.K}")
        if r.witness is not None:
            for ln in format_witness(r.witness, decimal=True).splitlines():
                print("    " + ln)


if __name__ == "__main__":
    main()
