"""Deterministic discrete-event core.

Events are ordered by ``(time, seq)``; ``seq`` is handed out when an event
is scheduled, so same-tick events run in scheduling order. Links are FIFO
because every link has a fixed latency and ties fall back to ``seq``.
"""

from __future__ import annotations

import heapq
import json
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from typing import Any, Callable

from . import channel as chan
from .channel import Change, ChannelView, Numeric, Outcome, ServerNotice
from .errors import BudgetExceeded, TimeInPast, UnknownServer, Unreachable
from .topology import Topology, component, edge_key, path, path_latency

DEFAULT_MAX_TICKS = 100_000


@dataclass(frozen=True)
class Inject:
    client: str
    change: Change


@dataclass(frozen=True)
class Relay:
    change: Change
    src: str
    dst: str
    epoch: int


@dataclass(frozen=True)
class Deliver:
    client: str
    record: "TraceRecord"


@dataclass(frozen=True)
class Ping:
    client: str
    target: str
    sent: int
    token: int


@dataclass(frozen=True)
class Pong:
    client: str
    target: str
    sent: int
    token: int


@dataclass(frozen=True)
class Call:
    fn: Callable[["World"], Any]
    label: str = ""


@dataclass(frozen=True, order=True)
class SimEvent:
    time: int
    seq: int
    site: str = field(compare=False)
    payload: Any = field(compare=False)


@dataclass(frozen=True)
class TraceRecord:
    tick: int
    observer: str
    line: str
    kind: str = "event"  # event | numeric | notice
    code: int | None = None
    source: str | None = None

    def to_json(self) -> str:
        return json.dumps({"tick": self.tick, "observer": self.observer, "line": self.line}, sort_keys=True)


class World:
    """All mutable simulation state: views, logs, traces and the event queue."""

    def __init__(self, topology: Topology, *, seed: int = 0, jitter: int = 0, ps_conflict_fixed: bool = True):
        self.topology = topology
        self.seed = seed
        self.jitter = jitter
        self.ps_conflict_fixed = ps_conflict_fixed
        self.rng = random.Random(seed)
        self.now = 0
        self.last_event_time = 0
        self._queue: list[SimEvent] = []
        self._seq = 0
        self._uid = 0
        self._token = 0
        self.views: dict[str, dict[str, ChannelView]] = {s: {} for s in topology.servers}
        self.logs: dict[str, list[ServerNotice]] = {s: [] for s in topology.servers}
        self.traces: dict[str, list[TraceRecord]] = {c: [] for c in sorted(topology.clients)}
        self.records: list[TraceRecord] = []
        self.down: set = set()
        self.epoch: dict = {e: 0 for e in topology.links}
        self.splits: dict = {}
        self.accepted: dict[int, list[str]] = defaultdict(list)
        self.relays_sent: Counter = Counter()
        self.pongs: dict[int, int] = {}
        self.executed = 0
        self._beyond_cache: dict = {}

    # -- state access -----------------------------------------------------

    def view(self, server: str, channel: str) -> ChannelView:
        try:
            per = self.views[server]
        except KeyError:
            raise UnknownServer(f"unknown server {server!r}") from None
        if channel not in per:
            chan.check_channel_name(channel)
            per[channel] = ChannelView(channel)
        return per[channel]

    def peek(self, server: str, channel: str) -> ChannelView:
        """Like :meth:`view` but never records a new view."""
        v = self.views[server].get(channel)
        return v if v is not None else ChannelView(channel)

    def channels(self) -> list[str]:
        return sorted({c for per in self.views.values() for c in per})

    def home(self, nick: str) -> str:
        return self.topology.home(nick)

    def seed_channel(self, name: str, members=(), ops=(), voices=(), creator=None, topic=None,
                     key=None, limit=None, modes="", bans=(), exceptions=(), servers=None) -> None:
        """Install an identical view on every server (or on ``servers``) with no traffic."""
        for nick in list(members) + list(ops) + list(voices) + ([creator] if creator else []):
            self.topology.client(nick)
        for s in servers or self.topology.servers:
            v = self.view(s, name)
            v.members = set(members) | set(ops) | set(voices) | ({creator} if creator else set())
            v.ops = set(ops) | ({creator} if creator else set())
            v.voices = set(voices)
            v.creator = creator
            v.topic = topic
            v.key = key
            v.limit = limit
            v.flags = set(modes)
            v.bans = list(bans)
            v.exceptions = list(exceptions)
            v.check_invariants()

    # -- links ------------------------------------------------------------

    def is_live(self, a: str, b: str) -> bool:
        return edge_key(a, b) not in self.down

    def live_neighbors(self, server: str) -> list[tuple[str, int]]:
        return [(n, lat) for n, lat in self.topology.neighbors(server) if self.is_live(server, n)]

    def live_path(self, s: str, d: str) -> list[str]:
        return path(self.topology, s, d, frozenset(self.down))

    def beyond(self, server: str, nbr: str) -> frozenset:
        key = (server, nbr, frozenset(self.down))
        if key not in self._beyond_cache:
            self._beyond_cache[key] = frozenset(
                component(self.topology, nbr, cut=(server, nbr), down=frozenset(self.down))
            )
        return self._beyond_cache[key]

    def reachable(self, server: str) -> set:
        return component(self.topology, server, down=frozenset(self.down))

    def client_latency(self, nick: str, server: str) -> int:
        c = self.topology.client(nick)
        try:
            hops = self.live_path(c.home, server)
        except Exception:
            raise Unreachable(f"{server} unreachable from {nick}") from None
        return c.link_latency + path_latency(self.topology, hops)

    # -- scheduling -------------------------------------------------------

    def schedule(self, time: int, payload: Any, site: str = "") -> int:
        if time < self.now:
            raise TimeInPast(f"cannot schedule at {time}, now is {self.now}")
        self._seq += 1
        heapq.heappush(self._queue, SimEvent(time, self._seq, site, payload))
        return self._seq

    def next_uid(self) -> int:
        self._uid += 1
        return self._uid

    def inject(self, client: str, change: Change, at: int | None = None) -> int:
        """Client ``client`` sends ``change`` at ``at`` (default now); returns its uid."""
        c = self.topology.client(client)
        uid = self.next_uid()
        change = replace(change, uid=uid)
        start = self.now if at is None else at
        self.schedule(start + c.link_latency, Inject(client, change), c.home)
        return uid

    @property
    def quiescent(self) -> bool:
        return not self._queue

    def peek_time(self) -> int | None:
        return self._queue[0].time if self._queue else None

    def step(self) -> SimEvent | None:
        if not self._queue:
            return None
        ev = heapq.heappop(self._queue)
        self.now = ev.time
        self.last_event_time = ev.time
        self.executed += 1
        p = ev.payload
        if isinstance(p, Inject):
            self._on_inject(ev.site, p)
        elif isinstance(p, Relay):
            self._on_relay(p)
        elif isinstance(p, Deliver):
            self.traces.setdefault(p.client, []).append(p.record)
            self.records.append(p.record)
        elif isinstance(p, Ping):
            try:
                back = self.client_latency(p.client, p.target)
            except Unreachable:
                return ev
            self.schedule(self.now + back, Pong(p.client, p.target, p.sent, p.token), self.home(p.client))
        elif isinstance(p, Pong):
            self.pongs[p.token] = self.now - p.sent
        elif isinstance(p, Call):
            p.fn(self)
        else:  # pragma: no cover
            raise TypeError(p)
        return ev

    def run_until(self, t: int, inclusive: bool = False) -> None:
        """Run every event before ``t`` (or at ``t`` if inclusive); then now = t."""
        while self._queue and (self._queue[0].time < t or (inclusive and self._queue[0].time == t)):
            self.step()
        if t > self.now:
            self.now = t

    def run_until_quiescent(self, max_ticks: int = DEFAULT_MAX_TICKS) -> int:
        limit = self.now + max_ticks
        while self._queue:
            if self._queue[0].time > limit:
                raise BudgetExceeded(f"events still pending past tick {limit}")
            self.step()
        return self.now

    # -- event handlers -----------------------------------------------------

    def _on_inject(self, site: str, p: Inject) -> None:
        view = self.view(site, p.change.channel)
        out = chan.apply_local(view, p.client, p.change, self.now, site)
        self._after(site, view, p.change, out, None)

    def _on_relay(self, p: Relay) -> None:
        key = edge_key(p.src, p.dst)
        if key in self.down or self.epoch[key] != p.epoch:
            return  # lost with the link
        view = self.view(p.dst, p.change.channel)
        out = chan.apply_remote(view, p.change, p.src, self.now, p.dst)
        self._after(p.dst, view, p.change, out, p.src)

    def _after(self, site: str, view: ChannelView, change: Change, out: Outcome, came_from: str | None) -> None:
        if out.applied:
            self.accepted[change.uid].append(site)
        if out.line is not None:
            lines = [out.line]
            if change.kind == "join" and change.actor is None and change.grant:
                for letter in change.grant:
                    lines.append(f"-+- mode/{change.channel} [+{letter} {change.arg}] by {change.server}")
            recipients = {m for m in view.members if self.home(m) == site}
            recipients |= {m for m in out.also_notify if m in self.topology.clients and self.home(m) == site}
            if change.kind == "privmsg":
                recipients.discard(change.actor)
            for nick in sorted(recipients):
                for line in lines:
                    self.deliver(nick, line, source=site)
        for num in out.numerics:
            origin = change.actor
            if origin is None:
                continue
            try:
                lat = self.client_latency(origin, site)
            except Unreachable:
                continue
            rec = TraceRecord(self.now + lat, origin, replace(num, server=site).render(), "numeric", num.code, site)
            self.schedule(self.now + lat, Deliver(origin, rec), site)
        if out.notice is not None:
            kind, detail = out.notice
            culprit = change.arg if kind == "fake_join" else change.source
            self.log_notice(site, came_from, change.channel, culprit, kind, detail)
        if out.relay:
            fwd = out.forward_as or change
            for nbr, lat in self.live_neighbors(site):
                if nbr == came_from:
                    continue
                if change.kind == "privmsg":
                    # servers only pass channel messages toward known members
                    far = self.beyond(site, nbr)
                    if not any(self.home(m) in far for m in view.members):
                        continue
                self.relays_sent[change.uid] += 1
                self.schedule(self.now + lat, Relay(fwd, site, nbr, self.epoch[edge_key(site, nbr)]), nbr)

    def deliver(self, nick: str, line: str, kind: str = "event", code: int | None = None, source: str | None = None) -> None:
        lat = self.topology.client(nick).link_latency
        rec = TraceRecord(self.now + lat, nick, line, kind, code, source)
        self.schedule(self.now + lat, Deliver(nick, rec), self.home(nick))

    def log_notice(self, site: str, came_from: str | None, channel: str, culprit: str, kind: str, detail: str) -> None:
        """Record a ``&channel`` notice on every server on the dropping side."""
        cut = (site, came_from) if came_from is not None else None
        side = component(self.topology, site, cut=cut, down=frozenset(self.down))
        for s in sorted(side):
            notice = ServerNotice(s, self.now, channel, culprit, kind, detail)
            self.logs[s].append(notice)
            self.records.append(TraceRecord(self.now, f"&channel@{s}", notice.render(), "notice", None, site))

    # -- outputs ------------------------------------------------------------

    def trace_lines(self, nick: str) -> list[str]:
        return [r.line for r in self.traces.get(nick, [])]

    def dump(self) -> dict:
        return {
            s: {c: v.to_dict() for c, v in sorted(self.views[s].items())}
            for s in sorted(self.views)
        }

    def dump_json(self) -> str:
        return json.dumps(self.dump(), sort_keys=True, indent=2)

    def trace_jsonl(self) -> str:
        return "".join(r.to_json() + "\n" for r in self.records)

    def check_invariants(self) -> None:
        for per in self.views.values():
            for v in per.values():
                v.check_invariants()


def schedule(world: World, time: int, payload: Any, site: str = "") -> int:
    return world.schedule(time, payload, site)


def step(world: World) -> SimEvent | None:
    """Execute the next event; ``None`` means the world is quiescent."""
    return world.step()


def run_until_quiescent(world: World, max_ticks: int = DEFAULT_MAX_TICKS) -> int:
    return world.run_until_quiescent(max_ticks)


def measure_latency(world: World, client: str, server: str) -> int:
    """Estimate the one-way latency from ``client`` to ``server`` with a ping.

    The ping really travels: the world runs until the echo comes back, so
    other queued events execute meanwhile. The estimate is half the round
    trip (integer division) plus the world's measurement jitter, never
    below zero.
    """
    world.topology.check_server(server)
    out_lat = world.client_latency(client, server)
    world._token += 1
    token = world._token
    world.schedule(world.now + out_lat, Ping(client, server, world.now, token), server)
    while token not in world.pongs:
        if world.step() is None:
            raise Unreachable(f"ping from {client} to {server} never came back")
    rtt = world.pongs.pop(token)
    est = rtt // 2
    if world.jitter:
        est += world.rng.randint(-world.jitter, world.jitter)
    return max(0, est)
