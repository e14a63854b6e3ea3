import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from support import random_tree

from ircdesync.channel import make_change
from ircdesync.engine import World, measure_latency
from ircdesync.errors import BudgetExceeded, TimeInPast
from ircdesync.topology import build_topology, chain, diameter, one_way_latency


def two_op_world(**kw):
    t = chain("CBAXYZ").with_clients([("a", "A"), ("x", "X")])
    w = World(t, **kw)
    w.seed_channel("#c", members=("a", "x"), ops=("a", "x"))
    return w


def test_scheduling_in_the_past_fails():
    w = two_op_world()
    w.run_until(5)
    with pytest.raises(TimeInPast):
        w.inject("a", make_change("topic", "#c", "a", arg="t"), at=3)


def test_budget():
    w = two_op_world()
    w.inject("a", make_change("topic", "#c", "a", arg="t"), at=50)
    with pytest.raises(BudgetExceeded):
        w.run_until_quiescent(max_ticks=10)


def test_relay_reaches_every_server_at_hop_distance():
    w = two_op_world()
    w.inject("a", make_change("topic", "#c", "a", arg="t"))
    w.run_until_quiescent()
    assert w.last_event_time == 3  # A to Z is three hops
    assert all(w.peek(s, "#c").topic == ("t", "a") for s in "CBAXYZ")


def test_messages_skip_empty_branches():
    w = two_op_world()
    w.inject("a", make_change("privmsg", "#c", "a", arg="hi"))
    w.run_until_quiescent()
    assert w.trace_lines("x") == ["<a> hi"]
    assert w.last_event_time == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_measured_latency_matches_oracle(seed):
    rng = random.Random(seed)
    servers, links = random_tree(rng, 2, 8, max_lat=4)
    t = build_topology(servers, links, [("c", rng.choice(servers), rng.randint(0, 3))])
    w = World(t)
    target = rng.choice(servers)
    assert measure_latency(w, "c", target) == one_way_latency(t, "c", target)


def test_jittered_latency_is_bounded_and_seeded():
    t = chain("ABCD").with_clients([("c", "A")])
    got = [measure_latency(World(t, seed=s, jitter=1), "c", "D") for s in range(40)]
    assert set(got) <= {2, 3, 4} and len(set(got)) > 1
    assert got == [measure_latency(World(t, seed=s, jitter=1), "c", "D") for s in range(40)]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_single_change_quiesces_within_diameter(seed):
    rng = random.Random(seed)
    servers, links = random_tree(rng, 2, 9, max_lat=3)
    t = build_topology(servers, links, [("a", rng.choice(servers))])
    w = World(t)
    w.seed_channel("#c", members=("a",), ops=("a",))
    w.inject("a", make_change("flag", "#c", "a", letter="m"))
    w.run_until_quiescent()
    assert w.last_event_time <= diameter(t)
    assert all("m" in w.peek(s, "#c").flags for s in servers)


def test_same_seed_same_bytes():
    def run():
        w = two_op_world(seed=3, jitter=1)
        measure_latency(w, "a", "X")
        w.inject("a", make_change("op", "#c", "a", adding=False, arg="x"))
        w.inject("x", make_change("op", "#c", "x", adding=False, arg="a"))
        w.run_until_quiescent()
        return w.trace_jsonl(), w.dump_json()

    assert run() == run()
