"""Netsplits and netjoins.

A split drops every member homed beyond the lost link from each view, as
the QUIT storm would. A join has both junction servers burst their
channel state across the restored link at the same tick: members with
their privileges, then any key/limit/topic/private-secret value the other
side lacks or disagrees with, then flags and list entries the other side
is missing. Disagreeing values cross each other in flight, which is the
ordinary flowing race with the junction edge as the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .channel import Change, ChannelView
from .engine import Call, Relay, World
from .errors import EdgeStillPresent, UnknownLink
from .topology import Edge, edge_key, split_components

MERGED_FLAGS = "imnta"


@dataclass(frozen=True)
class SplitRecord:
    edge: Edge
    time: int
    sides: tuple[frozenset, frozenset]
    latency: int


def netsplit(world: World, edge: Edge, time: int | None = None) -> SplitRecord:
    """Cut ``edge`` at ``time`` (now if omitted)."""
    key = edge_key(*edge)
    if key not in world.topology.links:
        raise UnknownLink(f"no link {edge[0]}-{edge[1]}")
    if key in world.down:
        raise UnknownLink(f"link {edge[0]}-{edge[1]} is already split")
    at = world.now if time is None else time
    record = SplitRecord(tuple(edge), at, split_components(world.topology, edge), world.topology.links[key])
    if at == world.now:
        _do_split(world, record)
    else:
        world.schedule(at, Call(lambda w: _do_split(w, record), f"split {edge[0]}-{edge[1]}"))
    return record


def _do_split(world: World, record: SplitRecord) -> None:
    key = edge_key(*record.edge)
    world.down.add(key)
    world.epoch[key] += 1
    world.splits[key] = record
    reason = f"[{record.edge[0]} {record.edge[1]}]"
    for server in world.topology.servers:
        reach = world.reachable(server)
        for name, view in sorted(world.views[server].items()):
            lost = sorted(m for m in view.members if world.home(m) not in reach)
            if not lost:
                continue
            local = sorted(m for m in view.members if world.home(m) == server)
            for m in lost:
                for nick in local:
                    world.deliver(nick, f"-!- {m} has quit {reason}", source=server)
            for m in lost:
                view.remove_member(m)


def _burst(mine: ChannelView, theirs: ChannelView, server: str, ps_fixed: bool) -> list[Change]:
    ch = mine.name
    out = [
        Change("join", ch, None, arg=m, server=server, grant=mine.grants_of(m))
        for m in sorted(mine.members)
    ]
    if mine.topic is not None and mine.topic != theirs.topic:
        out.append(Change("topic", ch, None, arg=mine.topic[0], setter=mine.topic[1], server=server))
    if mine.key is not None and mine.key != theirs.key:
        out.append(Change("key", ch, None, arg=mine.key, server=server))
    if mine.limit is not None and mine.limit != theirs.limit:
        out.append(Change("limit", ch, None, arg=mine.limit, server=server))
    mp, tp = mine.ps(), theirs.ps()
    if mp is not None and mp != tp:
        # with the conflict fixed, secret beats private and only +s travels
        if not (ps_fixed and tp is not None and mp == "p"):
            out.append(Change("flag", ch, None, letter=mp, server=server))
    for letter in MERGED_FLAGS:
        if letter in mine.flags and letter not in theirs.flags:
            out.append(Change("flag", ch, None, letter=letter, server=server))
    for letter, mine_l, theirs_l in (("b", mine.bans, theirs.bans), ("e", mine.exceptions, theirs.exceptions)):
        for mask in mine_l:
            if mask not in theirs_l:
                out.append(Change("list", ch, None, letter=letter, arg=mask, server=server))
    return out


def netjoin(world: World, record: SplitRecord, time: int | None = None) -> list[int]:
    """Restore ``record``'s link at ``time`` and schedule both bursts.

    Returns the ids of the scheduled burst relays (empty when the join
    itself is deferred to a later tick).
    """
    at = world.now if time is None else time
    if at == world.now:
        return _do_join(world, record)
    world.schedule(at, Call(lambda w: _do_join(w, record), f"join {record.edge[0]}-{record.edge[1]}"))
    return []


def _do_join(world: World, record: SplitRecord) -> list[int]:
    key = edge_key(*record.edge)
    if key not in world.down:
        raise EdgeStillPresent(f"link {record.edge[0]}-{record.edge[1]} is not split")
    world.down.discard(key)
    world.epoch[key] += 1
    world.splits.pop(key, None)
    j1, j2 = record.edge
    lat = world.topology.links[key]
    names = sorted(set(world.views[j1]) | set(world.views[j2]))
    ids = []
    for src, dst in ((j1, j2), (j2, j1)):
        for name in names:
            for change in _burst(world.peek(src, name), world.peek(dst, name), src, world.ps_conflict_fixed):
                uid = world.next_uid()
                change = replace(change, uid=uid)
                world.relays_sent[uid] += 1
                ids.append(world.schedule(world.now + lat, Relay(change, src, dst, world.epoch[key]), dst))
    return ids


@dataclass
class SplitsurfReport:
    before: dict[str, list[str]]
    after: dict[str, list[str]]
    run: object = field(repr=False, default=None)


def _ops_by_server(dump: dict, channel: str) -> dict[str, list[str]]:
    return {s: list(chans.get(channel, {}).get("ops", [])) for s, chans in sorted(dump.items())}


def replay_splitsurf(script, channel: str | None = None) -> SplitsurfReport:
    """Run a hidden-ops script and report each server's op set before the
    first netsplit and at the end. Without a split, ``before`` is the final
    state too."""
    from .scenario import Scenario, parse_scenario, run_scenario

    scenario = script if isinstance(script, Scenario) else parse_scenario(script)
    report = run_scenario(scenario)
    if channel is None:
        channel = scenario.main_channel()
    before_dump = next((d for _, label, d in report.snapshots if label.startswith("split")), report.dump)
    return SplitsurfReport(_ops_by_server(before_dump, channel), _ops_by_server(report.dump, channel), report)
