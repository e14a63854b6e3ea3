"""Where does a deop collision land as the two clients' timing drifts?

For every pair of servers on the six-server chain and every edge between
them, runs the two-user procedure with clock skew in [-S, S] and tallies
how far (in hops, toward b positive) the boundary ends up from the target.
"""

import argparse
import itertools
from collections import Counter

from ircdesync.desync import DesyncPlan, boundary_edges, two_user_desync
from ircdesync.engine import World
from ircdesync.topology import build_topology, path

CHAIN = ("C", "B", "A", "X", "Y", "Z")


def run(topo, target, skew):
    w = World(topo)
    w.seed_channel("#c", members=("a", "b"), ops=("a", "b"))
    two_user_desync(w, DesyncPlan("a", "b", target, "#c", mode="two_user", meet_at=50, clock_skew=skew))
    w.run_until_quiescent()
    return boundary_edges(w, "#c")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--skew", type=int, default=3)
    args = ap.parse_args()
    links = list(zip(CHAIN, CHAIN[1:]))
    for skew in range(-args.skew, args.skew + 1):
        tally = Counter()
        for u, v in itertools.permutations(CHAIN, 2):
            topo = build_topology(CHAIN, links, [("a", u), ("b", v)])
            hops = path(topo, u, v)
            edges = [tuple(sorted(e)) for e in zip(hops, hops[1:])]
            for i, target in enumerate(edges):
                got = run(topo, target, skew)
                if not got:
                    tally["none"] += 1
                elif len(got) > 1:
                    tally["several"] += 1
                else:
                    tally[edges.index(next(iter(got))) - i] += 1
        print(f"skew {skew:+d}: " + ", ".join(f"{k}: {n}" for k, n in sorted(tally.items(), key=str)))


if __name__ == "__main__":
    main()
