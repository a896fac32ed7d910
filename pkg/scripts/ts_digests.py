"""Print SHA-256 digests of the JSON export of every transition system
built from the corpus, one ``name digest states`` line each.

Run it under two different PYTHONHASHSEED values and diff the output to
check that exports do not depend on hash ordering.
"""
import argparse
import hashlib
from pathlib import Path

from clocksit.dsl import parse_bat, parse_program
from clocksit.golog import build_program_ts
from clocksit.reach import build_absts

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def digests(include_coffee: bool = True):
    bat = lambda n: parse_bat((CORPUS / n).read_text(), n)
    coffee = bat("coffee.bat")
    jobs = []
    if include_coffee:
        jobs.append(("coffee.absts", lambda: build_absts(coffee)))
    for name in ("example4.gpr", "strongfill.gpr"):
        prog = parse_program((CORPUS / name).read_text(), coffee, name)
        jobs.append((f"coffee.{name}", lambda prog=prog: build_program_ts(coffee, prog)))
    for name in ("lamps.bat", "oven.bat"):
        b = bat(name)
        jobs.append((name.replace(".bat", ".absts"), lambda b=b: build_absts(b)))
    for name, build in jobs:
        ts = build()
        text = ts.to_json()
        yield name, hashlib.sha256(text.encode()).hexdigest(), len(ts)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--skip-coffee", action="store_true",
                    help="leave out the full coffee system (the slow one)")
    args = ap.parse_args()
    for name, digest, n in digests(not args.skip_coffee):
        print(name, digest, n, flush=True)


if __name__ == "__main__":
    main()
