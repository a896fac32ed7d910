"""Compare engine reachability on encoded random timed automata with a
direct region-graph exploration of the automaton itself."""
import argparse
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from clocksit.encoders import encode_ta  # noqa: E402
from clocksit.reach import reachable  # noqa: E402
from oracles import random_ta, ta_regions_reach  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-n", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    agree = positives = 0
    for i in range(args.n):
        ta = random_ta(rng)
        bat, query = encode_ta(ta)
        got = reachable(bat, query).reachable
        want = ta_regions_reach(ta, ta.max_constant)
        positives += want
        if got == want:
            agree += 1
        else:
            print(f"mismatch on automaton {i}: engine {got}, oracle {want}\n{ta}")
    print(f"{agree}/{args.n} agree ({positives} reachable)")
    return 0 if agree == args.n else 1


if __name__ == "__main__":
    sys.exit(main())
