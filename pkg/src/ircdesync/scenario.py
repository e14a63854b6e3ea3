"""Line-oriented scenario scripts: parse, render, run, check.

A script declares a topology, clients and pre-seeded channels, then lists
timed actions (``@<tick> verb args...``) and assertions. ``assert`` lines
are checked once the world is quiescent; ``assert@<tick>`` lines are
checked after every event up to and including that tick has run. Lines
starting with ``#`` are comments. See ``docs/scenario-format.md``.
"""

from __future__ import annotations

import json
import shlex
from dataclasses import dataclass, field, replace

from .channel import FLAG_LETTERS, LIST_LETTERS, make_change
from .desync import DesyncPlan, boundary_edges, detect_boundary, one_user_desync, two_user_desync
from .engine import DEFAULT_MAX_TICKS, TraceRecord, World
from .errors import (
    DesyncError,
    MaxAttemptsExceeded,
    ProbeInconclusive,
    ScenarioError,
    ScenarioSyntaxError,
    TimeNonMonotonic,
    UnknownName,
)
from .splitjoin import netjoin, netsplit
from .topology import build_topology, edge_key, format_edge, parse_edge

ACTION_VERBS = ("join", "part", "msg", "topic", "mode", "kick", "split", "join-link", "desync-one", "desync-two", "detect")
ASSERT_KINDS = (
    "ops", "members", "voices", "creator", "topic", "key", "limit", "modes", "mode",
    "boundary", "synced", "desynced", "notices", "trace", "quiescence", "detect", "invariants",
)
CHANNEL_LIST_FIELDS = ("members", "ops", "voices", "bans", "exceptions")
CHANNEL_ONE_FIELDS = ("creator", "key", "limit", "modes")


@dataclass(frozen=True)
class ChannelDecl:
    name: str
    members: tuple = ()
    ops: tuple = ()
    voices: tuple = ()
    creator: str | None = None
    topic: tuple | None = None  # (text, setter)
    key: str | None = None
    limit: int | None = None
    modes: str = ""
    bans: tuple = ()
    exceptions: tuple = ()


@dataclass(frozen=True)
class Action:
    tick: int
    verb: str
    args: tuple
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Assertion:
    kind: str
    args: tuple
    at: int | None = None
    line: int = field(default=0, compare=False)

    def text(self) -> str:
        head = "assert" if self.at is None else f"assert@{self.at}"
        return " ".join([head, self.kind, *(_quote(a) for a in self.args)])


@dataclass(frozen=True)
class Scenario:
    servers: tuple
    links: tuple  # (a, b, latency)
    clients: tuple  # (nick, home, link_latency)
    channels: tuple = ()
    steps: tuple = ()  # Actions and Assertions, file order
    seed: int = 0
    jitter: int = 0
    policies: tuple = ()  # sorted (name, bool) pairs
    name: str = ""

    @property
    def actions(self) -> list[Action]:
        return [s for s in self.steps if isinstance(s, Action)]

    @property
    def assertions(self) -> list[Assertion]:
        return [s for s in self.steps if isinstance(s, Assertion)]

    def policy(self, name: str, default: bool) -> bool:
        return dict(self.policies).get(name, default)

    def main_channel(self) -> str:
        if self.channels:
            return self.channels[0].name
        for a in self.actions:
            for tok in a.args:
                if tok[:1] in "#!&":
                    return tok
        raise ScenarioError("scenario never names a channel")


# -- parsing ---------------------------------------------------------------


def _quote(tok) -> str:
    tok = str(tok)
    if tok and all(c.isalnum() or c in "#!&@-+_.,=:*<>/" for c in tok):
        return tok
    return shlex.quote(tok)


def _split(text: str, lineno: int) -> list[str]:
    try:
        return shlex.split(text, comments=False, posix=True)
    except ValueError as exc:
        raise ScenarioSyntaxError(str(exc), lineno, 1) from None


def _int(tok: str, lineno: int, col: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ScenarioSyntaxError(f"{what} must be an integer, got {tok!r}", lineno, col) from None


def _col(raw: str, tok: str) -> int:
    i = raw.find(tok)
    return i + 1 if i >= 0 else 1


def _parse_channel(toks: list[str], lineno: int, raw: str) -> ChannelDecl:
    if not toks:
        raise ScenarioSyntaxError("channel needs a name", lineno, 1)
    name = toks[0]
    if name[:1] not in "#!&":
        raise ScenarioSyntaxError(f"bad channel name {name!r}", lineno, _col(raw, name))
    fields: dict = {k: [] for k in CHANNEL_LIST_FIELDS}
    i = 1
    current = None
    while i < len(toks):
        tok = toks[i]
        if tok in CHANNEL_LIST_FIELDS:
            current = tok
        elif tok in CHANNEL_ONE_FIELDS:
            if i + 1 >= len(toks):
                raise ScenarioSyntaxError(f"{tok} needs a value", lineno, _col(raw, tok))
            val = toks[i + 1]
            fields[tok] = _int(val, lineno, _col(raw, val), "limit") if tok == "limit" else val
            current = None
            i += 1
        elif tok == "topic":
            if i + 1 >= len(toks):
                raise ScenarioSyntaxError("topic needs text", lineno, _col(raw, tok))
            text, setter = toks[i + 1], ""
            if i + 2 < len(toks) and toks[i + 2] == "by":
                if i + 3 >= len(toks):
                    raise ScenarioSyntaxError("topic ... by needs a nick", lineno, _col(raw, tok))
                setter = toks[i + 3]
                i += 2
            fields["topic"] = (text, setter)
            current = None
            i += 1
        elif current is not None:
            fields[current].append(tok)
        else:
            raise ScenarioSyntaxError(f"unexpected {tok!r} in channel declaration", lineno, _col(raw, tok))
        i += 1
    modes = fields.get("modes", "")
    if modes == "-":
        modes = ""
    modes = modes.lstrip("+")
    for m in modes:
        if m not in FLAG_LETTERS:
            raise ScenarioSyntaxError(f"unknown mode {m!r}", lineno, 1)
    return ChannelDecl(
        name,
        tuple(fields["members"]), tuple(fields["ops"]), tuple(fields["voices"]),
        fields.get("creator"), fields.get("topic"), fields.get("key"), fields.get("limit"),
        "".join(sorted(modes)), tuple(fields["bans"]), tuple(fields["exceptions"]),
    )


_ARITY = {
    "join": (2, 3), "part": (2, 2), "msg": (3, 3), "topic": (3, 3), "mode": (3, 4), "kick": (3, 3),
    "split": (1, 1), "join-link": (1, 1), "desync-one": (4, 5), "desync-two": (6, 9), "detect": (3, 4),
}


def parse_scenario(text: str, name: str = "") -> Scenario:
    servers: list[str] = []
    links: list[tuple] = []
    clients: list[tuple] = []
    channels: list[ChannelDecl] = []
    steps: list = []
    seed = 0
    jitter = 0
    policies: dict = {}
    last_tick = None

    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        toks = _split(stripped, lineno)
        head, rest = toks[0], toks[1:]
        col = _col(raw, head)

        if head == "servers":
            for s in rest:
                if s in servers:
                    raise ScenarioSyntaxError(f"duplicate server {s!r}", lineno, _col(raw, s))
                servers.append(s)
        elif head == "chain":
            lat = 1
            names = rest
            if names and names[-1].isdigit():
                lat = int(names[-1])
                names = names[:-1]
            for s in names:
                if s not in servers:
                    servers.append(s)
            links.extend((a, b, lat) for a, b in zip(names, names[1:]))
        elif head == "link":
            if len(rest) not in (1, 2):
                raise ScenarioSyntaxError("link takes NAME-NAME [latency]", lineno, col)
            try:
                a, b = parse_edge(rest[0])
            except ValueError as exc:
                raise ScenarioSyntaxError(str(exc), lineno, _col(raw, rest[0])) from None
            lat = _int(rest[1], lineno, _col(raw, rest[1]), "latency") if len(rest) == 2 else 1
            links.append((a, b, lat))
        elif head == "client":
            if len(rest) not in (1, 2) or "@" not in rest[0]:
                raise ScenarioSyntaxError("client takes NICK@SERVER [latency]", lineno, col)
            nick, home = rest[0].split("@", 1)
            lat = _int(rest[1], lineno, _col(raw, rest[1]), "latency") if len(rest) == 2 else 0
            clients.append((nick, home, lat))
        elif head == "channel":
            channels.append(_parse_channel(rest, lineno, raw))
        elif head == "seed":
            seed = _int(rest[0] if rest else "", lineno, col, "seed")
        elif head == "jitter":
            jitter = _int(rest[0] if rest else "", lineno, col, "jitter")
        elif head == "policy":
            for tok in rest:
                if "=" not in tok:
                    raise ScenarioSyntaxError("policy takes NAME=true|false", lineno, _col(raw, tok))
                k, v = tok.split("=", 1)
                if v not in ("true", "false"):
                    raise ScenarioSyntaxError(f"policy value must be true or false, got {v!r}", lineno, _col(raw, tok))
                policies[k] = v == "true"
        elif head.startswith("@"):
            tick = _int(head[1:], lineno, col, "tick")
            if not rest:
                raise ScenarioSyntaxError("missing action verb", lineno, col)
            verb, args = rest[0], rest[1:]
            if verb in ("netsplit",):
                verb = "split"
            if verb in ("netjoin",) or (verb == "join" and len(args) == 1 and "-" in args[0]):
                verb = "join-link"
            if verb not in ACTION_VERBS:
                raise ScenarioSyntaxError(f"unknown action {verb!r}", lineno, _col(raw, verb))
            lo, hi = _ARITY[verb]
            if not lo <= len(args) <= hi:
                raise ScenarioSyntaxError(f"{verb} takes {lo}..{hi} arguments, got {len(args)}", lineno, _col(raw, verb))
            if last_tick is not None and tick < last_tick:
                raise TimeNonMonotonic(f"tick {tick} comes after tick {last_tick}", lineno, col)
            last_tick = tick
            steps.append(Action(tick, verb, tuple(args), lineno))
        elif head == "assert" or head.startswith("assert@"):
            at = None
            if head != "assert":
                at = _int(head[len("assert@"):], lineno, col, "tick")
                if last_tick is not None and at < last_tick:
                    raise TimeNonMonotonic(f"tick {at} comes after tick {last_tick}", lineno, col)
                last_tick = at
            if not rest or rest[0] not in ASSERT_KINDS:
                raise ScenarioSyntaxError(f"unknown assertion {rest[0] if rest else ''!r}", lineno, col)
            steps.append(Assertion(rest[0], tuple(rest[1:]), at, lineno))
        else:
            raise ScenarioSyntaxError(f"unknown statement {head!r}", lineno, col)

    if not servers:
        raise ScenarioSyntaxError("missing topology (no servers declared)", 1, 1)
    scenario = Scenario(tuple(servers), tuple(links), tuple(clients), tuple(channels), tuple(steps),
                        seed, jitter, tuple(sorted(policies.items())), name)
    _check_names(scenario)
    return scenario


def _check_names(s: Scenario) -> None:
    servers = set(s.servers)
    nicks = {c[0] for c in s.clients}
    for a, b, _ in s.links:
        for x in (a, b):
            if x not in servers:
                raise UnknownName(f"link names undeclared server {x!r}")
    for nick, home, _ in s.clients:
        if home not in servers:
            raise UnknownName(f"client {nick!r} homed on undeclared server {home!r}")
    for ch in s.channels:
        for nick in (*ch.members, *ch.ops, *ch.voices, *([ch.creator] if ch.creator else [])):
            if nick not in nicks:
                raise UnknownName(f"channel {ch.name} names undeclared client {nick!r}")

    def need_nick(n, line):
        if n not in nicks:
            raise UnknownName(f"undeclared client {n!r}", line)

    def need_edge(tok, line):
        try:
            a, b = parse_edge(tok)
        except ValueError as exc:
            raise ScenarioSyntaxError(str(exc), line) from None
        for x in (a, b):
            if x not in servers:
                raise UnknownName(f"undeclared server {x!r}", line)

    for a in s.actions:
        v, args = a.verb, a.args
        if v in ("join", "part", "msg", "topic", "mode", "kick"):
            need_nick(args[0], a.line)
            if v == "kick":
                need_nick(args[2], a.line)
            if v == "mode" and len(args) == 4 and args[2][1:2] in ("o", "v", "O"):
                need_nick(args[3], a.line)
        elif v in ("split", "join-link"):
            need_edge(args[0], a.line)
        elif v in ("desync-one", "desync-two"):
            need_nick(args[0], a.line)
            need_nick(args[1], a.line)
            need_edge(args[2], a.line)
        elif v == "detect":
            need_nick(args[1], a.line)
            need_nick(args[2], a.line)


def render_scenario(s: Scenario) -> str:
    """Canonical text for ``s``; parsing it gives back an equal Scenario."""
    out = [f"servers {' '.join(s.servers)}"]
    out += [f"link {a}-{b} {lat}" for a, b, lat in s.links]
    out += [f"client {n}@{h} {lat}" for n, h, lat in s.clients]
    for c in s.channels:
        parts = ["channel", c.name]
        for k in CHANNEL_LIST_FIELDS:
            vals = getattr(c, k)
            if vals:
                parts += [k, *vals]
        if c.creator:
            parts += ["creator", c.creator]
        if c.topic is not None:
            parts += ["topic", c.topic[0]] + (["by", c.topic[1]] if c.topic[1] else [])
        if c.key is not None:
            parts += ["key", c.key]
        if c.limit is not None:
            parts += ["limit", str(c.limit)]
        if c.modes:
            parts += ["modes", c.modes]
        out.append(" ".join(_quote(p) for p in parts))
    out.append(f"seed {s.seed}")
    out.append(f"jitter {s.jitter}")
    if s.policies:
        out.append("policy " + " ".join(f"{k}={'true' if v else 'false'}" for k, v in s.policies))
    for st in s.steps:
        if isinstance(st, Action):
            out.append(" ".join([f"@{st.tick}", st.verb, *(_quote(a) for a in st.args)]))
        else:
            out.append(st.text())
    return "\n".join(out) + "\n"


# -- running ---------------------------------------------------------------


@dataclass
class AssertionResult:
    text: str
    passed: bool
    expected: str
    actual: str
    line: int = 0

    def render(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        tail = "" if self.passed else f"  (expected {self.expected}, got {self.actual})"
        return f"{mark} {self.text}{tail}"


@dataclass
class RunReport:
    name: str
    seed: int
    results: list
    dump: dict
    trace: list
    notices: dict
    quiescence: int
    snapshots: list = field(default_factory=list)  # (tick, label, dump)
    detections: dict = field(default_factory=dict)
    placements: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "passed": self.passed,
            "quiescence": self.quiescence,
            "assertions": [
                {"text": r.text, "passed": r.passed, "expected": r.expected, "actual": r.actual}
                for r in self.results
            ],
            "detections": dict(sorted(self.detections.items())),
            "placements": self.placements,
            "notices": {
                s: [{"time": n.time, "channel": n.channel, "culprit": n.culprit, "kind": n.kind, "detail": n.detail} for n in ns]
                for s, ns in sorted(self.notices.items())
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def trace_jsonl(self) -> str:
        return "".join(r.to_json() + "\n" for r in self.trace)

    def dump_json(self) -> str:
        return json.dumps(self.dump, sort_keys=True, indent=2)

    def summary(self) -> str:
        lines = [r.render() for r in self.results]
        ok = sum(r.passed for r in self.results)
        lines.append(f"{self.name or 'scenario'}: {ok}/{len(self.results)} assertions passed, quiescent at t={self.quiescence}")
        return "\n".join(lines)


def build_world(s: Scenario, seed: int | None = None, jitter: int | None = None) -> World:
    topo = build_topology(s.servers, s.links, s.clients)
    world = World(
        topo,
        seed=s.seed if seed is None else seed,
        jitter=s.jitter if jitter is None else jitter,
        ps_conflict_fixed=s.policy("ps_conflict_fixed", True),
    )
    for c in s.channels:
        world.seed_channel(c.name, c.members, c.ops, c.voices, c.creator, c.topic, c.key, c.limit,
                           c.modes, c.bans, c.exceptions)
    return world


def mode_change(channel: str, actor: str, spec: str, arg: str | None = None):
    """``"+o", "x"`` -> op change; ``"+l", "10"`` -> limit change, and so on."""
    if len(spec) != 2 or spec[0] not in "+-":
        raise ScenarioError(f"bad mode {spec!r}")
    adding = spec[0] == "+"
    letter = spec[1]
    if letter in "ovO":
        kind = {"o": "op", "v": "voice", "O": "creator"}[letter]
        return make_change(kind, channel, actor, adding=adding, arg=arg)
    if letter == "k":
        return make_change("key", channel, actor, adding=adding, arg=arg)
    if letter == "l":
        return make_change("limit", channel, actor, adding=adding, arg=int(arg) if adding and arg is not None else None)
    if letter in LIST_LETTERS:
        return make_change("list", channel, actor, adding=adding, arg=arg, letter=letter)
    if letter in FLAG_LETTERS:
        return make_change("flag", channel, actor, adding=adding, letter=letter)
    raise ScenarioError(f"unknown mode letter {letter!r}")


def _perform(world: World, a: Action, report: RunReport, splits: dict) -> None:
    v, args = a.verb, a.args
    if v == "join":
        world.inject(args[0], make_change("join", args[1], args[0], password=args[2] if len(args) > 2 else None))
    elif v == "part":
        world.inject(args[0], make_change("part", args[1], args[0]))
    elif v == "msg":
        world.inject(args[0], make_change("privmsg", args[1], args[0], arg=args[2]))
    elif v == "topic":
        world.inject(args[0], make_change("topic", args[1], args[0], arg=args[2]))
    elif v == "mode":
        world.inject(args[0], mode_change(args[1], args[0], args[2], args[3] if len(args) > 3 else None))
    elif v == "kick":
        world.inject(args[0], make_change("kick", args[1], args[0], arg=args[2]))
    elif v == "split":
        edge = parse_edge(args[0])
        report.snapshots.append((world.now, f"split {args[0]}", world.dump()))
        splits[edge_key(*edge)] = netsplit(world, edge)
    elif v == "join-link":
        edge = parse_edge(args[0])
        report.snapshots.append((world.now, f"join {args[0]}", world.dump()))
        record = splits.get(edge_key(*edge))
        if record is None:
            raise ScenarioError(f"join-link {args[0]} without an earlier split", a.line)
        netjoin(world, record)
    elif v in ("desync-one", "desync-two"):
        plan = _plan(a)
        fn = one_user_desync if v == "desync-one" else two_user_desync
        t_a, t_b = fn(world, plan)
        report.placements.append({"tick": a.tick, "verb": v, "a": plan.a, "b": plan.b,
                                  "target": args[2], "t_a": t_a, "t_b": t_b})
    elif v == "detect":
        ch, prober, helper = args[0], args[1], args[2]
        blind = len(args) > 3 and args[3] == "blind"
        try:
            found = detect_boundary(world, ch, prober, helper, blind=blind)
        except ProbeInconclusive:
            report.detections[ch] = "inconclusive"
            return
        if found is None:
            report.detections[ch] = "synced"
        elif blind:
            report.detections[ch] = found
        else:
            report.detections[ch] = format_edge(found.edge)


def _plan(a: Action) -> DesyncPlan:
    args = list(a.args)
    nick_a, nick_b, edge, ch = args[:4]
    rest = args[4:]
    command = "deop"
    meet_at = None
    skew = 0
    i = 0
    while i < len(rest):
        tok = rest[i]
        if tok in ("deop", "kick"):
            command = tok
        elif tok == "at" and i + 1 < len(rest):
            meet_at = int(rest[i + 1])
            i += 1
        elif tok == "skew" and i + 1 < len(rest):
            skew = int(rest[i + 1])
            i += 1
        else:
            raise ScenarioSyntaxError(f"unexpected {tok!r} in {a.verb}", a.line)
        i += 1
    mode = "one_user" if a.verb == "desync-one" else "two_user"
    return DesyncPlan(nick_a, nick_b, parse_edge(edge), ch, command, mode, skew, meet_at)


def _servers(world: World, tok: str) -> list[str]:
    if tok == "*":
        return list(world.topology.servers)
    return tok.split(",")


def _nicks(toks) -> tuple:
    toks = [t for t in toks if t != "-"]
    return tuple(sorted(toks))


def _per_server(world, servers, channel, getter, expected):
    actual = {s: getter(world.peek(s, channel)) for s in servers}
    bad = {s: v for s, v in actual.items() if v != expected}
    return not bad, str(expected), str(bad if bad else expected)


def evaluate(world: World, a: Assertion, report: RunReport) -> AssertionResult:
    try:
        ok, expected, actual = _evaluate(world, a, report)
    except (DesyncError, IndexError, ValueError, KeyError) as exc:
        ok, expected, actual = False, "a well-formed assertion", f"error: {exc}"
    return AssertionResult(a.text(), ok, expected, actual, a.line)


def _after_eq(args, i):
    if len(args) <= i or args[i] != "=":
        raise ValueError("expected '='")
    return args[i + 1:]


def _evaluate(world: World, a: Assertion, report: RunReport):
    k, args = a.kind, a.args
    if k in ("ops", "members", "voices"):
        servers, ch = _servers(world, args[0]), args[1]
        want = _nicks(_after_eq(args, 2))
        return _per_server(world, servers, ch, lambda v: tuple(sorted(getattr(v, k))), want)
    if k in ("creator", "key"):
        servers, ch = _servers(world, args[0]), args[1]
        val = _after_eq(args, 2)[0]
        return _per_server(world, servers, ch, lambda v: getattr(v, k), None if val == "-" else val)
    if k == "limit":
        servers, ch = _servers(world, args[0]), args[1]
        val = _after_eq(args, 2)[0]
        return _per_server(world, servers, ch, lambda v: v.limit, None if val == "-" else int(val))
    if k == "topic":
        servers, ch = _servers(world, args[0]), args[1]
        val = _after_eq(args, 2)[0]
        return _per_server(world, servers, ch, lambda v: v.topic[0] if v.topic else None, None if val == "-" else val)
    if k == "modes":
        servers, ch = _servers(world, args[0]), args[1]
        val = _after_eq(args, 2)[0]
        want = "" if val == "-" else "".join(sorted(val.lstrip("+")))
        return _per_server(world, servers, ch, lambda v: "".join(sorted(v.flags)), want)
    if k == "mode":
        servers, ch, spec = _servers(world, args[0]), args[1], args[2]
        return _per_server(world, servers, ch, lambda v: spec[1] in v.flags, spec[0] == "+")
    if k == "boundary":
        ch = args[0]
        vals = _after_eq(args, 1)
        want = set() if vals == ["none"] else {edge_key(*parse_edge(t)) for t in vals}
        got = boundary_edges(world, ch)
        fmt = lambda es: ",".join(format_edge(e) for e in sorted(es)) or "none"
        return got == want, fmt(want), fmt(got)
    if k in ("synced", "desynced"):
        got = boundary_edges(world, args[0])
        ok = (not got) if k == "synced" else bool(got)
        return ok, k, "synced" if not got else "boundaries " + ",".join(format_edge(e) for e in sorted(got))
    if k == "notices":
        servers, kind = _servers(world, args[0]), args[1]
        rest = list(args[2:])
        culprit = None
        if rest and rest[0] == "by":
            culprit = rest[1]
            rest = rest[2:]
        want = int(_after_eq(rest, 0)[0])

        def count(s):
            return sum(1 for n in world.logs[s] if (kind == "any" or n.kind == kind) and (culprit is None or n.culprit == culprit))

        got = {s: count(s) for s in servers}
        bad = {s: c for s, c in got.items() if c != want}
        return not bad, f"{want} on each", str(got)
    if k == "trace":
        nick, op = args[0], args[1]
        recs = world.traces.get(nick, [])
        lines = [r.line for r in recs]
        if op == "=":
            want = list(args[2:])
            return lines == want, json.dumps(want), json.dumps(lines)
        if op == "has":
            return args[2] in lines, f"line {args[2]!r}", json.dumps(lines)
        if op == "lacks":
            return args[2] not in lines, f"no line {args[2]!r}", json.dumps(lines)
        if op == "order":
            first, second = args[2], args[3]
            ok = first in lines and second in lines and lines.index(first) < lines.index(second)
            return ok, f"{first!r} before {second!r}", json.dumps(lines)
        if op == "quiet":
            lo, hi = int(args[2]), int(args[3])
            noisy = [r.line for r in recs if lo <= r.tick <= hi]
            return not noisy, f"nothing in [{lo},{hi}]", json.dumps(noisy)
        if op == "count":
            want = int(_after_eq(args, 2)[0])
            return len(lines) == want, str(want), str(len(lines))
        raise ValueError(f"unknown trace check {op!r}")
    if k == "quiescence":
        want = int(_after_eq(args, 0)[0])
        return world.last_event_time == want, str(want), str(world.last_event_time)
    if k == "detect":
        ch = args[0]
        want = _after_eq(args, 1)[0]
        got = report.detections.get(ch, "not run")
        if "-" in want and "-" in got:
            return edge_key(*parse_edge(want)) == edge_key(*parse_edge(got)), want, got
        return got == want, want, got
    if k == "invariants":
        try:
            world.check_invariants()
        except AssertionError as exc:
            return False, "all view invariants hold", str(exc)
        return True, "all view invariants hold", "ok"
    raise ValueError(f"unknown assertion {k!r}")


def execute(s: Scenario, seed: int | None = None, jitter: int | None = None,
            max_ticks: int = DEFAULT_MAX_TICKS) -> tuple[World, RunReport]:
    """Run ``s`` and return the final world alongside its report."""
    world = build_world(s, seed, jitter)
    report = RunReport(s.name, world.seed, [], {}, [], {}, 0)
    splits: dict = {}
    finals = []
    for st in s.steps:
        if isinstance(st, Assertion):
            if st.at is None:
                finals.append(st)
                continue
            if world.now > st.at:
                raise ScenarioError(f"assert@{st.at} but the world is already at tick {world.now}", st.line)
            world.run_until(st.at, inclusive=True)
            report.results.append(evaluate(world, st, report))
            continue
        if world.now > st.tick:
            raise ScenarioError(f"action at tick {st.tick} but the world is already at tick {world.now}", st.line)
        world.run_until(st.tick)
        try:
            _perform(world, st, report, splits)
        except ScenarioError:
            raise
        except (DesyncError, ValueError) as exc:
            raise ScenarioError(f"{st.verb}: {exc}", st.line) from exc
    world.run_until_quiescent(max_ticks)
    for st in finals:
        report.results.append(evaluate(world, st, report))
    report.dump = world.dump()
    report.trace = list(world.records)
    report.notices = {srv: list(ns) for srv, ns in world.logs.items()}
    report.quiescence = world.last_event_time
    return world, report


def run_scenario(s: Scenario, seed: int | None = None, jitter: int | None = None,
                 max_ticks: int = DEFAULT_MAX_TICKS) -> RunReport:
    return execute(s, seed, jitter, max_ticks)[1]


def _desync_action(s: Scenario) -> Action:
    for a in s.actions:
        if a.verb in ("desync-one", "desync-two"):
            return a
    raise ScenarioError("scenario has no desync action")


def desync_channel(s: Scenario) -> str:
    return _desync_action(s).args[3]


def attempt_until_desynced(s: Scenario, max_attempts: int, seed: int | None = None,
                           jitter: int | None = None, on_target: bool = False) -> int:
    """Rerun ``s`` with seeds ``seed, seed+1, ...`` until its desync channel
    ends up with a boundary; return how many runs that took.

    With ``on_target`` a run only counts when the sole boundary is the
    edge the desync action aimed at.
    """
    action = _desync_action(s)
    ch = action.args[3]
    target = {edge_key(*parse_edge(action.args[2]))}
    base = s.seed if seed is None else seed
    for attempt in range(max_attempts):
        world, _ = execute(s, seed=base + attempt, jitter=jitter)
        got = boundary_edges(world, ch)
        if (got == target) if on_target else got:
            return attempt + 1
    raise MaxAttemptsExceeded(f"no desync on {ch} after {max_attempts} attempts")
