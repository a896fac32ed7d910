"""Search realizations of the corpus programs on the coffee theory and
report program-system sizes alongside the result."""
import time
from pathlib import Path

from clocksit.dsl import parse_bat, parse_program
from clocksit.golog import build_program_ts, derivative_bound, find_realization, replay

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def main():
    bat = parse_bat((CORPUS / "coffee.bat").read_text(), "coffee.bat")
    for name in ("example4.gpr", "strongfill.gpr"):
        prog = parse_program((CORPUS / name).read_text(), bat, name)
        t = time.perf_counter()
        sigma = find_realization(bat, prog)
        dt = time.perf_counter() - t
        ts = build_program_ts(bat, prog)
        programs = len({s.remaining for s in ts.states})
        print(f"{name}: {len(ts)} configurations, {len(ts.raw_edges)} edges, "
              f"{programs} distinct remaining programs "
              f"(bound {derivative_bound(prog, len(bat.objects))})")
        if sigma is None:
            print(f"  no realization ({dt:.2f}s)")
        else:
            ok = replay(bat, prog, list(sigma))
            print(f"  realization in {dt:.2f}s, replay {'ok' if ok else 'FAILED'}: "
                  + "; ".join(map(str, sigma)))


if __name__ == "__main__":
    main()
