import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from support import duel_world, random_tree

from ircdesync.channel import FLOWING_FIELDS, differences, make_change
from ircdesync.desync import DesyncPlan, one_user_desync
from ircdesync.engine import World
from ircdesync.errors import EdgeStillPresent
from ircdesync.splitjoin import netjoin, netsplit, replay_splitsurf
from ircdesync.topology import build_topology, chain


def test_split_drops_far_members_and_rejoin_restores():
    w = duel_world(list("ABC"), [("A", "B"), ("B", "C")], "A", "C")
    rec = netsplit(w, ("B", "C"))
    assert w.peek("A", "#c").members == {"a"}
    assert w.peek("C", "#c").members == {"b"}
    w.run_until_quiescent()
    assert "-!- a has quit [B C]" in w.trace_lines("b")
    netjoin(w, rec)
    w.run_until_quiescent()
    assert all(w.peek(s, "#c").members == {"a", "b"} for s in "ABC")


def test_join_of_live_link_fails():
    w = duel_world(list("AB"), [("A", "B")], "A", "B")
    rec = netsplit(w, ("A", "B"))
    netjoin(w, rec)
    with pytest.raises(EdgeStillPresent):
        netjoin(w, rec)


def test_relays_in_flight_die_with_the_link():
    w = duel_world(list("ABC"), [("A", "B", 3), ("B", "C", 1)], "A", "C")
    w.inject("a", make_change("topic", "#c", "a", arg="lost"))
    w.run_until(1)
    netsplit(w, ("A", "B"))
    w.run_until_quiescent()
    assert w.peek("B", "#c").topic is None


def test_lists_merge_and_secret_wins():
    t = chain("AB").with_clients([("a", "A"), ("b", "B")])
    w = World(t)
    w.seed_channel("#c", members=("a", "b"), ops=("a", "b"))
    rec = netsplit(w, ("A", "B"))
    w.inject("a", make_change("list", "#c", "a", letter="b", arg="m1"))
    w.inject("b", make_change("list", "#c", "b", letter="b", arg="m2"))
    w.inject("a", make_change("flag", "#c", "a", letter="p"))
    w.inject("b", make_change("flag", "#c", "b", letter="s"))
    w.run_until(5)
    netjoin(w, rec)
    w.run_until_quiescent()
    for s in "AB":
        v = w.peek(s, "#c")
        assert sorted(v.bans) == ["m1", "m2"]
        assert "s" in v.flags and "p" not in v.flags


def snapshot(w):
    return {s: {n: v.fields() for n, v in w.views[s].items()} for s in w.topology.servers}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_netjoin_of_undisturbed_channel_changes_nothing(seed):
    rng = random.Random(seed)
    servers, links = random_tree(rng, 2, 8, max_lat=3)
    u, v = rng.choice(servers), rng.choice(servers)
    w = duel_world(servers, links, u, v)
    before = snapshot(w)
    a, b, _ = rng.choice(links)
    rec = netsplit(w, (a, b))
    netjoin(w, rec, time=rng.randint(0, 5))
    w.run_until_quiescent()
    assert snapshot(w) == before
    assert not any(w.logs.values())


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_only_flowing_fields_differ_across_the_junction(seed):
    rng = random.Random(seed)
    servers, links = random_tree(rng, 3, 8)
    u, v = rng.sample(servers, 2)
    w = duel_world(servers, links, u, v, extra=[("p", rng.choice(servers), 0)])
    rec = netsplit(w, rng.choice(links)[:2])
    for actor in ("a", "b"):
        for _ in range(rng.randint(0, 4)):
            kind = rng.choice(["topic", "key", "limit", "flag", "voice", "op"])
            kw = {
                "topic": {"arg": f"t{rng.randint(0, 9)}"},
                "key": {"arg": f"k{rng.randint(0, 9)}"},
                "limit": {"arg": rng.randint(1, 9)},
                "flag": {"letter": rng.choice("imntps")},
                "voice": {"arg": "p"},
                "op": {"arg": "p"},
            }[kind]
            w.inject(actor, make_change(kind, "#c", actor, **kw), at=w.now + rng.randint(0, 3))
    w.run_until_quiescent()
    netjoin(w, rec)
    w.run_until_quiescent()
    j1, j2 = rec.edge
    assert set(differences(w.peek(j1, "#c"), w.peek(j2, "#c"))) <= FLOWING_FIELDS


HIDDEN = """
chain A B C
client a@A
client a2@A
client b@B
channel #c members a b ops a b
@0 desync-one a b A-B #c
@5 join a2 #c
@10 mode a #c +o a2
"""


def test_splitsurf_spreads_hidden_ops():
    report = replay_splitsurf(HIDDEN + "@20 split A-B\n@30 join-link A-B\n")
    assert report.before == {"A": ["a", "a2"], "B": ["b"], "C": ["b"]}
    assert all(ops == ["a", "a2", "b"] for ops in report.after.values())


def test_without_split_hidden_ops_stay_on_a():
    report = replay_splitsurf(HIDDEN)
    assert report.before == report.after
    assert [s for s, ops in report.after.items() if "a2" in ops] == ["A"]
