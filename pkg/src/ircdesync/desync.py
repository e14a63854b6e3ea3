"""Placing, detecting and locating desync boundaries."""

from __future__ import annotations

from dataclasses import dataclass

from .channel import differences, make_change
from .engine import World, measure_latency
from .errors import MeetingTimeTooEarly, NotOnPath, NotOp, ProbeInconclusive
from .topology import Edge, edge_key

PROBE_TEXT = "boundary probe"


@dataclass(frozen=True)
class BoundaryEdge:
    edge: Edge  # sorted endpoint pair
    channel: str
    difference: tuple[str, ...]


@dataclass(frozen=True)
class DesyncPlan:
    """Two ops on different servers who will knock each other out.

    ``target_edge`` may be given in either orientation. ``command`` is
    ``"deop"`` or ``"kick"``. For the two-user procedure ``meet_at`` is the
    agreed absolute tick and ``clock_skew`` delays b's idea of that tick
    (negative values make b early).
    """

    a: str
    b: str
    target_edge: Edge
    channel: str
    command: str = "deop"
    mode: str = "one_user"
    clock_skew: int = 0
    meet_at: int | None = None

    def commands(self):
        if self.command == "deop":
            mk = lambda actor, other: make_change("op", self.channel, actor, adding=False, arg=other)
        elif self.command == "kick":
            mk = lambda actor, other: make_change("kick", self.channel, actor, arg=other)
        else:
            raise ValueError(f"desync command must be deop or kick, not {self.command!r}")
        return mk(self.a, self.b), mk(self.b, self.a)


def orient_target(world: World, plan: DesyncPlan) -> tuple[str, str]:
    """Return ``(X, Y)``: the target edge's endpoint nearer a, then the other."""
    ha, hb = world.home(plan.a), world.home(plan.b)
    hops = world.live_path(ha, hb)
    p, q = plan.target_edge
    for u, v in zip(hops, hops[1:]):
        if {u, v} == {p, q}:
            return u, v
    raise NotOnPath(f"edge {p}-{q} is not on the path {'-'.join(hops)} between {plan.a} and {plan.b}")


def _check_ops(world: World, plan: DesyncPlan) -> None:
    for nick in (plan.a, plan.b):
        if nick not in world.peek(world.home(nick), plan.channel).ops:
            raise NotOp(f"{nick} is not an operator of {plan.channel} on {world.home(nick)}")


def one_user_desync(world: World, plan: DesyncPlan) -> tuple[int, int]:
    """Fire both commands so they meet across the target edge.

    The command with the longer trip to its end of the edge goes first and
    the other follows after the latency difference, so both reach the
    edge at the same tick. Returns the injection ticks ``(t_a, t_b)``.
    """
    x_srv, y_srv = orient_target(world, plan)
    _check_ops(world, plan)
    cmd_a, cmd_b = plan.commands()
    x = measure_latency(world, plan.a, x_srv)
    y = measure_latency(world, plan.b, y_srv)
    now = world.now
    if x >= y:
        t_a, t_b = now, now + (x - y)
    else:
        t_a, t_b = now + (y - x), now
    world.inject(plan.a, cmd_a, at=t_a)
    world.inject(plan.b, cmd_b, at=t_b)
    return t_a, t_b


def two_user_desync(world: World, plan: DesyncPlan) -> tuple[int, int]:
    """Each side measures its own leg, they swap numbers and meet at ``meet_at``.

    Whoever is closer to the edge waits the difference after the meeting
    tick. b's clock is off by ``plan.clock_skew`` ticks.
    """
    x_srv, y_srv = orient_target(world, plan)
    _check_ops(world, plan)
    cmd_a, cmd_b = plan.commands()
    x = measure_latency(world, plan.a, x_srv)
    y = measure_latency(world, plan.b, y_srv)
    meet = plan.meet_at if plan.meet_at is not None else world.now
    t_a = meet + max(0, y - x)
    t_b = meet + plan.clock_skew + max(0, x - y)
    if meet < world.now or t_b < world.now:
        raise MeetingTimeTooEarly(f"meeting tick {meet} (skewed {meet + plan.clock_skew}) is before now={world.now}")
    world.inject(plan.a, cmd_a, at=t_a)
    world.inject(plan.b, cmd_b, at=t_b)
    return t_a, t_b


def ground_truth_boundaries(world: World, channel: str) -> set[BoundaryEdge]:
    """Every live tree edge whose two endpoint views disagree about ``channel``."""
    out = set()
    for u, v in world.topology.edges:
        if not world.is_live(u, v):
            continue
        diff = differences(world.peek(u, channel), world.peek(v, channel))
        if diff:
            out.add(BoundaryEdge((u, v), channel, diff))
    return out


def boundary_edges(world: World, channel: str) -> set[Edge]:
    return {b.edge for b in ground_truth_boundaries(world, channel)}


def is_synced(world: World, channel: str) -> bool:
    return not ground_truth_boundaries(world, channel)


def _errors(world: World, prober: str, mark: int):
    """(first foreign refusal, whether the home server refused) since ``mark``."""
    home = world.home(prober)
    foreign, at_home = None, False
    for rec in world.traces[prober][mark:]:
        if rec.kind == "numeric" and rec.code in (404, 442):
            if rec.source != home:
                foreign = foreign or rec
            else:
                at_home = True
    return foreign, at_home


def _speak(world: World, channel: str, prober: str):
    mark = len(world.traces[prober])
    world.inject(prober, make_change("privmsg", channel, prober, arg=PROBE_TEXT))
    world.run_until_quiescent()
    return _errors(world, prober, mark)


def detect_boundary(world: World, channel: str, prober: str, helper: str, blind: bool = False):
    """Locate a boundary between ``helper``'s op side and ``prober``.

    The helper sets ``+m``; it only takes hold on servers that recognise
    the helper's ops. The prober, unvoiced, then speaks. The first foreign
    server that refuses the message is the far end of the boundary, seen
    from the prober. If the prober's own server refuses it instead, the
    helper's ops reach the prober: the helper voices the prober, the
    prober speaks again and silence means synced. If nothing refused the
    prober at all (it holds ops or voice on the helper's side), the helper
    kicks it and sets ``+n``, and the prober tries once more.

    Returns a :class:`BoundaryEdge`, or ``None`` when synced. With
    ``blind=True`` only the refusing server's name is returned, which is
    all a real client would learn.
    """
    home = world.home(prober)
    world.inject(helper, make_change("flag", channel, helper, letter="m"))
    world.run_until_quiescent()
    err, at_home = _speak(world, channel, prober)
    if err is None and at_home:
        world.inject(helper, make_change("voice", channel, helper, arg=prober))
        world.run_until_quiescent()
        err, _ = _speak(world, channel, prober)
        if err is None:
            return None
    elif err is None:
        mark = len(world.traces[prober])
        world.inject(helper, make_change("kick", channel, helper, arg=prober))
        world.inject(helper, make_change("flag", channel, helper, letter="n"))
        world.run_until_quiescent()
        kicked = any(f"-!- {prober} was kicked" in r.line for r in world.traces[prober][mark:])
        err, _ = _speak(world, channel, prober)
        if err is None:
            if kicked:
                return None
            raise ProbeInconclusive(f"no foreign server refused {prober} on {channel}")
    far = err.source
    if blind:
        return far
    hops = world.live_path(home, far)
    near = hops[-2]
    diff = differences(world.peek(near, channel), world.peek(far, channel))
    return BoundaryEdge(edge_key(near, far), channel, diff)
