"""Monte Carlo: how many reruns a jittered one-user desync needs.

Prints two histograms over independent trials: attempts until any
boundary appears, and attempts until the boundary sits exactly on the
aimed-at edge.
"""

import argparse
import statistics
from collections import Counter

from ircdesync.corpus import load_builtin
from ircdesync.errors import MaxAttemptsExceeded
from ircdesync.scenario import attempt_until_desynced


def distribution(scenario, trials, cap, jitter, on_target):
    out = []
    for t in range(trials):
        try:
            out.append(attempt_until_desynced(scenario, cap, seed=t * cap, jitter=jitter, on_target=on_target))
        except MaxAttemptsExceeded:
            out.append(cap + 1)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--builtin", default="jitter-desync")
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--max", type=int, default=50)
    ap.add_argument("--jitter", type=int, nargs="+", default=[0, 1, 2])
    args = ap.parse_args()
    scenario = load_builtin(args.builtin)
    for j in args.jitter:
        for on_target in (False, True):
            counts = distribution(scenario, args.trials, args.max, j, on_target)
            hist = dict(sorted(Counter(counts).items()))
            label = "target edge" if on_target else "any boundary"
            print(f"jitter ±{j} {label:12}  median {statistics.median(counts):g}  "
                  f"mean {statistics.mean(counts):.2f}  {hist}")


if __name__ == "__main__":
    main()
