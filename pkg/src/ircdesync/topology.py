"""Server tree: validation, paths, latencies and edge cuts.

Servers and clients are plain strings. A link is stored under its sorted
endpoint pair so ``("A", "X")`` and ``("X", "A")`` name the same edge.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import (
    CycleDetected,
    Disconnected,
    DuplicateName,
    TopologyError,
    UnknownClient,
    UnknownLink,
    UnknownServer,
)

Edge = tuple[str, str]


def edge_key(a: str, b: str) -> Edge:
    return (a, b) if a <= b else (b, a)


def parse_edge(text: str) -> Edge:
    """``"A-X"`` -> ``("A", "X")`` (orientation preserved)."""
    parts = text.split("-")
    if len(parts) != 2 or not all(parts):
        raise ValueError(f"bad edge {text!r}, expected NAME-NAME")
    return parts[0], parts[1]


def format_edge(edge: Edge) -> str:
    return f"{edge[0]}-{edge[1]}"


@dataclass(frozen=True)
class Client:
    nick: str
    home: str
    link_latency: int = 0


@dataclass(frozen=True)
class Topology:
    """An undirected tree of servers with integer link latencies."""

    servers: tuple[str, ...]
    links: Mapping[Edge, int]
    clients: Mapping[str, Client] = field(default_factory=dict)

    def __post_init__(self):
        adj: dict[str, list[tuple[str, int]]] = {s: [] for s in self.servers}
        for (a, b), lat in self.links.items():
            adj[a].append((b, lat))
            adj[b].append((a, lat))
        for s in adj:
            adj[s].sort()
        object.__setattr__(self, "_adj", adj)

    def neighbors(self, server: str) -> list[tuple[str, int]]:
        self.check_server(server)
        return self._adj[server]

    def latency(self, a: str, b: str) -> int:
        try:
            return self.links[edge_key(a, b)]
        except KeyError:
            raise UnknownLink(f"no link {a}-{b}") from None

    def check_server(self, server: str) -> None:
        if server not in self._adj:
            raise UnknownServer(f"unknown server {server!r}")

    def client(self, nick: str) -> Client:
        try:
            return self.clients[nick]
        except KeyError:
            raise UnknownClient(f"unknown client {nick!r}") from None

    def home(self, nick: str) -> str:
        return self.client(nick).home

    @property
    def edges(self) -> list[Edge]:
        return sorted(self.links)

    def with_clients(self, clients: Iterable) -> "Topology":
        return build_topology(self.servers, [(a, b, l) for (a, b), l in self.links.items()], clients)


def _as_client(spec) -> Client:
    if isinstance(spec, Client):
        return spec
    if isinstance(spec, str):
        raise TopologyError(f"client {spec!r} needs a home server")
    return Client(*spec)


def build_topology(servers: Iterable[str], links: Iterable, clients: Iterable = ()) -> Topology:
    """Validate and build a tree topology.

    ``links`` holds ``(a, b)`` or ``(a, b, latency)`` tuples; latency
    defaults to 1. ``clients`` holds :class:`Client` objects or
    ``(nick, home[, link_latency])`` tuples.
    """
    server_list: list[str] = []
    for s in servers:
        if s in server_list:
            raise DuplicateName(f"duplicate server {s!r}")
        server_list.append(s)
    if not server_list:
        raise TopologyError("topology needs at least one server")
    known = set(server_list)

    link_map: dict[Edge, int] = {}
    parent = {s: s for s in server_list}

    def find(s):
        while parent[s] != s:
            parent[s] = parent[parent[s]]
            s = parent[s]
        return s

    for spec in links:
        a, b, *rest = spec
        lat = rest[0] if rest else 1
        for s in (a, b):
            if s not in known:
                raise UnknownServer(f"link {a}-{b} names unknown server {s!r}")
        if a == b:
            raise CycleDetected(f"self-link on {a!r}")
        key = edge_key(a, b)
        if key in link_map:
            raise DuplicateName(f"duplicate link {a}-{b}")
        if not isinstance(lat, int) or lat < 1:
            raise TopologyError(f"link {a}-{b} latency must be an integer >= 1, got {lat!r}")
        ra, rb = find(a), find(b)
        if ra == rb:
            raise CycleDetected(f"link {a}-{b} closes a cycle")
        parent[ra] = rb
        link_map[key] = lat

    roots = {find(s) for s in server_list}
    if len(roots) > 1:
        lonely = sorted(s for s in server_list if find(s) != find(server_list[0]))
        raise Disconnected(f"servers not connected to {server_list[0]!r}: {', '.join(lonely)}")

    client_map: dict[str, Client] = {}
    for spec in clients:
        c = _as_client(spec)
        if c.nick in client_map:
            raise DuplicateName(f"duplicate client {c.nick!r}")
        if c.nick in known:
            raise DuplicateName(f"client {c.nick!r} shadows a server name")
        if c.home not in known:
            raise UnknownServer(f"client {c.nick!r} homed on unknown server {c.home!r}")
        if not isinstance(c.link_latency, int) or c.link_latency < 0:
            raise TopologyError(f"client {c.nick!r} link latency must be an integer >= 0")
        client_map[c.nick] = c

    return Topology(tuple(server_list), link_map, client_map)


def path(t: Topology, s: str, d: str, down: frozenset = frozenset()) -> list[str]:
    """Unique simple path from ``s`` to ``d``, endpoints included.

    Links listed in ``down`` are not traversed; :class:`UnknownLink` is
    raised if that leaves no route.
    """
    t.check_server(s)
    t.check_server(d)
    prev = {s: None}
    queue = deque([s])
    while queue:
        u = queue.popleft()
        if u == d:
            break
        for v, _ in t.neighbors(u):
            if v not in prev and edge_key(u, v) not in down:
                prev[v] = u
                queue.append(v)
    if d not in prev:
        raise UnknownLink(f"no live route {s} -> {d}")
    out = [d]
    while out[-1] != s:
        out.append(prev[out[-1]])
    out.reverse()
    return out


def path_latency(t: Topology, hops: list[str]) -> int:
    return sum(t.latency(a, b) for a, b in zip(hops, hops[1:]))


def one_way_latency(t: Topology, c: str, s: str, down: frozenset = frozenset()) -> int:
    client = t.client(c)
    return client.link_latency + path_latency(t, path(t, client.home, s, down))


def component(t: Topology, start: str, cut: Edge | None = None, down: frozenset = frozenset()) -> set[str]:
    """Servers reachable from ``start`` without crossing ``cut`` or ``down`` links."""
    t.check_server(start)
    blocked = set(down)
    if cut is not None:
        blocked.add(edge_key(*cut))
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v, _ in t.neighbors(u):
            if v not in seen and edge_key(u, v) not in blocked:
                seen.add(v)
                stack.append(v)
    return seen


def split_components(t: Topology, edge: Edge) -> tuple[frozenset, frozenset]:
    """The two sides left by removing ``edge``; the first holds ``edge[0]``."""
    a, b = edge
    if edge_key(a, b) not in t.links:
        raise UnknownLink(f"no link {a}-{b}")
    left = component(t, a, cut=(a, b))
    right = frozenset(s for s in t.servers if s not in left)
    return frozenset(left), right


def diameter(t: Topology) -> int:
    """Largest server-to-server latency (sum of link latencies)."""
    best = 0
    for s in t.servers:
        dist = {s: 0}
        stack = [s]
        while stack:
            u = stack.pop()
            for v, lat in t.neighbors(u):
                if v not in dist:
                    dist[v] = dist[u] + lat
                    stack.append(v)
        best = max(best, max(dist.values()))
    return best


def chain(names: str | Iterable[str], latency: int = 1) -> Topology:
    """Linear topology through ``names`` in order, e.g. ``chain("CBAXYZ")``."""
    names = list(names)
    return build_topology(names, [(a, b, latency) for a, b in zip(names, names[1:])])
