"""Per-server channel replica and the rules for applying changes to it.

A :class:`ChannelView` is one server's idea of a channel. Nothing in here
knows about the network: the engine decides where changes travel, these
functions only decide what a single server does with a change and what it
tells its own clients.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import NamedTuple

from .errors import UnknownChannel

TOGGLE_FLAGS = frozenset("imnt")
FLOWING_FLAGS = frozenset("psa")
FLAG_LETTERS = TOGGLE_FLAGS | FLOWING_FLAGS
LIST_LETTERS = frozenset("be")

MODE_KINDS = frozenset({"topic", "key", "limit", "voice", "op", "creator", "flag", "list", "kick"})
TRAFFIC_KINDS = frozenset({"join", "part", "privmsg"})

# Numerics: 404/442 carry the classic IRC texts, the rest are stable local choices.
NUMERIC_TEXT = {
    404: "cannot send to channel",
    441: "they aren't on that channel",
    442: "you're not on that channel",
    471: "cannot join channel (+l)",
    473: "cannot join channel (+i)",
    474: "cannot join channel (+b)",
    475: "cannot join channel (+k)",
    482: "you're not channel operator",
    485: "you're not channel creator",
}

DENY_NUMERIC = {"no_ops": 482, "not_on_channel": 442, "not_creator": 485}


class ModeClass(enum.Enum):
    FLOWING = "flowing"
    TOGGLE = "toggle"
    COLLIDING = "colliding"


@dataclass(frozen=True)
class Numeric:
    code: int
    channel: str
    server: str = ""

    @property
    def text(self) -> str:
        return NUMERIC_TEXT[self.code]

    def render(self) -> str:
        return f"-!- {self.server} {self.code} {self.channel}: {self.text}"


@dataclass(frozen=True)
class ServerNotice:
    server: str
    time: int
    channel: str
    culprit: str
    kind: str  # "fake_mode" | "fake_join"
    detail: str

    def render(self) -> str:
        what = "mode" if self.kind == "fake_mode" else "join"
        return f"Fake {what} on {self.channel} by {self.culprit}: {self.detail}"


@dataclass(frozen=True)
class Change:
    """A channel change as it travels between servers.

    ``actor`` is the issuing nick, or ``None`` for changes a server makes
    itself (netjoin bursts); ``server`` then names that server. For join
    and part, ``arg`` is the nick that joins or leaves; ``grant`` lists the
    privileges (``o``, ``v``, ``O``) a join carries. A server re-announcing
    a topic keeps the original ``setter``.
    """

    kind: str
    channel: str
    actor: str | None
    adding: bool = True
    arg: str | int | None = None
    letter: str | None = None
    server: str | None = None
    grant: str = ""
    password: str | None = None
    setter: str | None = None
    uid: int = 0

    @property
    def source(self) -> str:
        return self.actor if self.actor is not None else self.server

    def mode_string(self) -> str:
        sign = "+" if self.adding else "-"
        if self.kind in ("op", "voice", "creator"):
            letter = {"op": "o", "voice": "v", "creator": "O"}[self.kind]
            return f"{sign}{letter} {self.arg}"
        if self.kind == "key":
            return f"{sign}k {self.arg}" if self.adding else "-k"
        if self.kind == "limit":
            return f"+l {self.arg}" if self.adding else "-l"
        if self.kind == "flag":
            return f"{sign}{self.letter}"
        if self.kind == "list":
            return f"{sign}{self.letter} {self.arg}"
        if self.kind == "kick":
            return f"kick {self.arg}"
        if self.kind == "topic":
            return f"topic {self.arg}"
        return self.kind


def check_channel_name(name: str) -> None:
    if not name or name[0] not in "#!&" or len(name) < 2:
        raise UnknownChannel(f"bad channel name {name!r}")


@dataclass
class ChannelView:
    name: str
    members: set = field(default_factory=set)
    ops: set = field(default_factory=set)
    voices: set = field(default_factory=set)
    creator: str | None = None
    topic: tuple[str, str] | None = None  # (text, setter)
    key: str | None = None
    limit: int | None = None
    flags: set = field(default_factory=set)
    bans: list = field(default_factory=list)
    exceptions: list = field(default_factory=list)

    def copy(self) -> "ChannelView":
        return ChannelView(
            self.name, set(self.members), set(self.ops), set(self.voices), self.creator,
            self.topic, self.key, self.limit, set(self.flags), list(self.bans), list(self.exceptions),
        )

    def reset(self) -> None:
        self.__init__(self.name)

    def add_member(self, nick: str, grant: str = "") -> None:
        self.members.add(nick)
        if "o" in grant or "O" in grant:
            self.ops.add(nick)
        if "v" in grant:
            self.voices.add(nick)
        if "O" in grant:
            self.creator = nick

    def remove_member(self, nick: str) -> None:
        self.members.discard(nick)
        self.ops.discard(nick)
        self.voices.discard(nick)
        if self.creator == nick:
            self.creator = None
        if not self.members:
            # last one out destroys the channel on this server
            self.reset()

    def grants_of(self, nick: str) -> str:
        out = ""
        if nick in self.ops:
            out += "o"
        if nick in self.voices:
            out += "v"
        if self.creator == nick:
            out += "O"
        return out

    def ps(self) -> str | None:
        if "p" in self.flags:
            return "p"
        if "s" in self.flags:
            return "s"
        return None

    def banned(self, nick: str) -> bool:
        return nick in self.bans and nick not in self.exceptions

    def check_invariants(self) -> None:
        assert self.ops <= self.members, (self.name, self.ops, self.members)
        assert self.voices <= self.members, (self.name, self.voices, self.members)
        assert not {"p", "s"} <= self.flags, self.flags
        if self.creator is not None and self.creator in self.members:
            assert self.creator in self.ops, (self.name, self.creator)
        if self.limit is not None:
            assert self.limit > 0

    def fields(self) -> dict:
        """Comparable snapshot; ``differences`` works field by field on this."""
        out = {
            "members": tuple(sorted(self.members)),
            "ops": tuple(sorted(self.ops)),
            "voices": tuple(sorted(self.voices)),
            "creator": self.creator,
            "topic": self.topic,
            "key": self.key,
            "limit": self.limit,
            "bans": tuple(sorted(self.bans)),
            "exceptions": tuple(sorted(self.exceptions)),
        }
        for letter in sorted(FLAG_LETTERS):
            out[f"mode:{letter}"] = letter in self.flags
        return out

    def to_dict(self) -> dict:
        return {
            "members": sorted(self.members),
            "ops": sorted(self.ops),
            "voices": sorted(self.voices),
            "creator": self.creator,
            "topic": None if self.topic is None else {"text": self.topic[0], "by": self.topic[1]},
            "key": self.key,
            "limit": self.limit,
            "modes": "".join(sorted(self.flags)),
            "bans": list(self.bans),
            "exceptions": list(self.exceptions),
        }


def differences(a: ChannelView, b: ChannelView) -> tuple[str, ...]:
    fa, fb = a.fields(), b.fields()
    return tuple(k for k in fa if fa[k] != fb[k])


# field names whose divergence is a flowing-class divergence
FLOWING_FIELDS = frozenset(
    {"topic", "key", "limit", "voices", "bans", "exceptions", "mode:p", "mode:s", "mode:a"}
)


def classify(change: Change) -> ModeClass:
    if change.kind in ("op", "creator", "kick"):
        return ModeClass.COLLIDING
    if change.kind == "flag":
        return ModeClass.TOGGLE if change.letter in TOGGLE_FLAGS else ModeClass.FLOWING
    if change.kind in ("topic", "key", "limit", "voice", "list"):
        return ModeClass.FLOWING
    raise ValueError(f"{change.kind!r} is channel traffic, not a mode change")


class Verdict(NamedTuple):
    ok: bool
    reason: str | None = None


PERMIT = Verdict(True)


def authorize(view: ChannelView, actor: str | None, change: Change) -> Verdict:
    """Does ``actor`` have the right to make ``change`` according to ``view``?"""
    if actor is None:
        return PERMIT
    if change.kind == "topic":
        if "t" in view.flags:
            return PERMIT if actor in view.ops else Verdict(False, "no_ops")
        return PERMIT if actor in view.members else Verdict(False, "not_on_channel")
    if change.kind == "flag" and change.letter == "a":
        return PERMIT if view.creator == actor and actor in view.ops else Verdict(False, "not_creator")
    if change.kind == "creator":
        return PERMIT if view.creator == actor and actor in view.ops else Verdict(False, "not_creator")
    if change.kind in MODE_KINDS:
        return PERMIT if actor in view.ops else Verdict(False, "no_ops")
    if change.kind == "privmsg":
        return PERMIT if privmsg_check(view, actor) is None else Verdict(False, "cannot_send")
    return PERMIT


def privmsg_check(view: ChannelView, sender: str) -> int | None:
    """``None`` if ``sender`` may speak on ``view``, else the numeric code."""
    if view.banned(sender):
        return 404
    if "n" in view.flags and sender not in view.members:
        return 404
    if "m" in view.flags and sender not in view.ops and sender not in view.voices:
        return 404
    return None


def render_nick(view: ChannelView, speaker: str, viewer: str | None = None) -> str:
    return "anonymous" if "a" in view.flags else speaker


def has_effect(view: ChannelView, change: Change) -> bool:
    if change.kind == "flag":
        return (change.letter in view.flags) != change.adding
    return True


def render_change(view: ChannelView, change: Change) -> str:
    """Client-visible line for ``change`` as rendered by ``view``'s server."""
    who = change.server if change.actor is None else render_nick(view, change.actor)
    ch = change.channel
    if change.kind == "topic":
        return f"-X- Topic ({ch}): changed by {who}: {change.arg}"
    if change.kind == "kick":
        return f"-!- {render_nick(view, change.arg)} was kicked from {ch} by {who}"
    if change.kind == "join":
        return f"-!- {render_nick(view, change.arg)} has joined {ch}"
    if change.kind == "part":
        return f"-!- {render_nick(view, change.arg)} has left {ch}"
    if change.kind == "privmsg":
        return f"<{who}> {change.arg}"
    return f"-+- mode/{ch} [{change.mode_string()}] by {who}"


@dataclass
class Outcome:
    """What one server did with one change.

    ``line`` goes to every local member of the view after the change;
    ``also_notify`` lists extra recipients (a kicked or parting client).
    ``numerics`` go back to the change's originating client. ``notice`` is a
    ``(kind, detail)`` pair for the ``&channel`` log. ``forward_as``
    replaces the change on the wire when the origin server amends it.
    """

    applied: bool
    relay: bool
    line: str | None = None
    also_notify: tuple = ()
    numerics: list = field(default_factory=list)
    notice: tuple[str, str] | None = None
    forward_as: Change | None = None


def _mutate(view: ChannelView, change: Change) -> None:
    k, arg = change.kind, change.arg
    if k == "topic":
        view.topic = (arg, change.setter or change.source)
    elif k == "key":
        view.key = arg if change.adding else None
    elif k == "limit":
        view.limit = int(arg) if change.adding else None
    elif k == "voice":
        (view.voices.add if change.adding else view.voices.discard)(arg)
    elif k == "op":
        if change.adding:
            view.ops.add(arg)
        else:
            view.ops.discard(arg)
            if view.creator == arg:
                view.creator = None
    elif k == "creator":
        if change.adding:
            view.creator = arg
            view.ops.add(arg)
        elif view.creator == arg:
            view.creator = None
    elif k == "flag":
        if change.adding:
            view.flags.add(change.letter)
            if change.letter in "ps":
                view.flags.discard("s" if change.letter == "p" else "p")
        else:
            view.flags.discard(change.letter)
    elif k == "list":
        lst = view.bans if change.letter == "b" else view.exceptions
        if change.adding and arg not in lst:
            lst.append(arg)
        elif not change.adding and arg in lst:
            lst.remove(arg)
    elif k == "kick":
        view.remove_member(arg)
    else:  # pragma: no cover
        raise ValueError(change.kind)


TARGETED = frozenset({"op", "voice", "creator", "kick"})


def _numeric(code: int, change: Change, server: str) -> Numeric:
    return Numeric(code, change.channel, server)


def apply_local(view: ChannelView, actor: str, change: Change, time: int = 0, server: str = "") -> Outcome:
    """Apply a command from a client homed on this view's server."""
    k = change.kind
    if k == "join":
        if actor in view.members:
            return Outcome(False, False)
        code = None
        if "i" in view.flags:
            code = 473
        elif view.key is not None and change.password != view.key:
            code = 475
        elif view.limit is not None and len(view.members) >= view.limit:
            code = 471
        elif view.banned(actor):
            code = 474
        if code is not None:
            return Outcome(False, False, numerics=[_numeric(code, change, server)])
        # first one in creates the channel and gets ops from the server
        grant = "o" if not view.members else ""
        view.add_member(actor, grant)
        relayed = replace(change, grant=grant, password=None)
        return Outcome(True, True, render_change(view, change), forward_as=relayed)
    if k == "part":
        if actor not in view.members:
            return Outcome(False, False, numerics=[_numeric(442, change, server)])
        line = render_change(view, change)
        view.remove_member(actor)
        return Outcome(True, True, line, also_notify=(actor,))
    if k == "privmsg":
        code = privmsg_check(view, actor)
        if code is not None:
            return Outcome(False, False, numerics=[_numeric(code, change, server)])
        return Outcome(True, True, render_change(view, change))

    verdict = authorize(view, actor, change)
    if not verdict.ok:
        return Outcome(False, False, numerics=[_numeric(DENY_NUMERIC[verdict.reason], change, server)])
    if k in TARGETED and change.arg not in view.members:
        return Outcome(False, False, numerics=[_numeric(441, change, server)])
    if classify(change) is ModeClass.TOGGLE and not has_effect(view, change):
        return Outcome(False, False)
    line = render_change(view, change)
    also = (change.arg,) if k == "kick" else ()
    _mutate(view, change)
    return Outcome(True, True, line, also_notify=also)


def apply_remote(view: ChannelView, change: Change, from_link: str | None = None, time: int = 0, server: str = "") -> Outcome:
    """Apply a change relayed from a neighbouring server.

    Every receiving server re-checks the actor's rights against its own
    view; a change that fails the check is logged as a fake mode and goes
    no further.
    """
    k = change.kind
    if k == "join":
        nick = change.arg
        if nick in view.members:
            return Outcome(False, False, notice=("fake_join", f"join {nick}"))
        view.add_member(nick, change.grant)
        line = render_change(view, change)
        return Outcome(True, True, line)
    if k == "part":
        if change.arg not in view.members:
            return Outcome(False, True)
        line = render_change(view, change)
        view.remove_member(change.arg)
        return Outcome(True, True, line, also_notify=(change.arg,))
    if k == "privmsg":
        code = privmsg_check(view, change.actor)
        if code is not None:
            return Outcome(False, False, numerics=[_numeric(code, change, server)])
        return Outcome(True, True, render_change(view, change))

    verdict = authorize(view, change.actor, change)
    if not verdict.ok:
        numerics = []
        if verdict.reason == "not_on_channel":
            numerics.append(_numeric(442, change, server))
        return Outcome(False, False, numerics=numerics, notice=("fake_mode", change.mode_string()))
    if classify(change) is ModeClass.TOGGLE and not has_effect(view, change):
        return Outcome(False, False)
    if k in TARGETED and change.arg not in view.members:
        return Outcome(False, True)
    line = render_change(view, change)
    also = (change.arg,) if k == "kick" else ()
    _mutate(view, change)
    return Outcome(True, True, line, also_notify=also)


def make_change(kind: str, channel: str, actor: str | None, **kw) -> Change:
    check_channel_name(channel)
    if kind not in MODE_KINDS and kind not in TRAFFIC_KINDS:
        raise ValueError(f"unknown change kind {kind!r}")
    ch = Change(kind, channel, actor, **kw)
    if kind == "flag" and ch.letter not in FLAG_LETTERS:
        raise ValueError(f"unknown flag {ch.letter!r}")
    if kind == "list" and ch.letter not in LIST_LETTERS:
        raise ValueError(f"unknown list {ch.letter!r}")
    if kind == "limit" and ch.adding:
        if not isinstance(ch.arg, int) or ch.arg < 1:
            raise ValueError("limit must be a positive integer")
    if kind in TARGETED | {"topic", "list", "privmsg"} and ch.arg is None:
        raise ValueError(f"{kind} needs an argument")
    if kind == "key" and ch.adding and not ch.arg:
        raise ValueError("key needs an argument")
    if kind in ("join", "part") and ch.arg is None:
        ch = replace(ch, arg=actor)
    return ch
