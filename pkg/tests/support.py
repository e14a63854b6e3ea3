"""Shared builders for the test-suite: tree generators and small worlds."""

import itertools
import random

import networkx as nx

from ircdesync.engine import World
from ircdesync.topology import build_topology

NAMES = "ABCDEFGHIJKLMNOP"
CHAIN6 = ("C", "B", "A", "X", "Y", "Z")


def trees_upto(n_max):
    """Every unlabelled tree with 2..n_max nodes, as (servers, edges)."""
    for n in range(2, n_max + 1):
        for g in nx.nonisomorphic_trees(n):
            servers = [NAMES[i] for i in range(n)]
            yield servers, [(NAMES[u], NAMES[v]) for u, v in g.edges()]


def random_tree(rng: random.Random, n_min=2, n_max=8, max_lat=1):
    n = rng.randint(n_min, n_max)
    servers = [NAMES[i] for i in range(n)]
    if n == 2:
        edges = [(0, 1)]
    else:
        edges = nx.from_prufer_sequence([rng.randrange(n) for _ in range(n - 2)]).edges()
    links = [(NAMES[u], NAMES[v], rng.randint(1, max_lat)) for u, v in edges]
    return servers, links


def oracle_path(servers, links, s, d):
    g = nx.Graph()
    g.add_nodes_from(servers)
    g.add_edges_from((a, b) for a, b, *_ in links)
    return nx.shortest_path(g, s, d)


def path_edges(hops):
    return {tuple(sorted(p)) for p in zip(hops, hops[1:])}


def duel_world(servers, links, home_a, home_b, extra=(), seed=0, jitter=0, lat_a=0, lat_b=0):
    """Clients a and b, both ops of #c on every server, plus plain members."""
    links = [l if len(l) == 3 else (*l, 1) for l in links]
    clients = [("a", home_a, lat_a), ("b", home_b, lat_b), *extra]
    world = World(build_topology(servers, links, clients), seed=seed, jitter=jitter)
    members = [c[0] for c in clients]
    world.seed_channel("#c", members=members, ops=("a", "b"))
    return world


def ordered_pairs(items):
    return itertools.permutations(items, 2)
