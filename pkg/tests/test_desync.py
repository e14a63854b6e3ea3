import pytest

from support import duel_world

from ircdesync.desync import (
    DesyncPlan,
    boundary_edges,
    detect_boundary,
    ground_truth_boundaries,
    one_user_desync,
    orient_target,
    two_user_desync,
)
from ircdesync.errors import MeetingTimeTooEarly, NotOnPath, NotOp
from ircdesync.topology import chain

CHAIN = list("CBAXYZ")
LINKS = list(zip(CHAIN, CHAIN[1:]))


def test_longer_leg_fires_first():
    # a on C is two hops from A, b on X is already there
    w = duel_world(CHAIN, LINKS, "C", "X")
    t_a, t_b = one_user_desync(w, DesyncPlan("a", "b", ("A", "X"), "#c"))
    assert t_b - t_a == 2
    w.run_until_quiescent()
    assert boundary_edges(w, "#c") == {("A", "X")}


def test_target_must_be_on_path():
    w = duel_world(CHAIN, LINKS, "A", "X")
    with pytest.raises(NotOnPath):
        orient_target(w, DesyncPlan("a", "b", ("B", "C"), "#c"))


def test_needs_ops():
    w = duel_world(CHAIN, LINKS, "A", "X")
    w.peek("A", "#c").ops.discard("a")
    with pytest.raises(NotOp):
        one_user_desync(w, DesyncPlan("a", "b", ("A", "X"), "#c"))


def test_meeting_in_the_past():
    w = duel_world(CHAIN, LINKS, "A", "X")
    w.run_until(10)
    with pytest.raises(MeetingTimeTooEarly):
        two_user_desync(w, DesyncPlan("a", "b", ("A", "X"), "#c", mode="two_user", meet_at=5))


@pytest.mark.parametrize("target", [("C", "B"), ("B", "A"), ("A", "X"), ("X", "Y"), ("Y", "Z")])
def test_every_edge_of_the_chain(target):
    w = duel_world(CHAIN, LINKS, "C", "Z", lat_a=2, lat_b=1)
    one_user_desync(w, DesyncPlan("a", "b", target, "#c"))
    w.run_until_quiescent()
    assert boundary_edges(w, "#c") == {tuple(sorted(target))}


def test_skew_moves_the_boundary_along_the_path():
    # b two ticks late: both commands travel, so the meeting moves one hop toward b
    w = duel_world(CHAIN, LINKS, "C", "Z")
    two_user_desync(w, DesyncPlan("a", "b", ("A", "X"), "#c", mode="two_user", meet_at=20, clock_skew=2))
    w.run_until_quiescent()
    assert boundary_edges(w, "#c") == {("X", "Y")}


def test_oracle_reports_differing_fields():
    w = duel_world(CHAIN, LINKS, "A", "X")
    one_user_desync(w, DesyncPlan("a", "b", ("A", "X"), "#c"))
    w.run_until_quiescent()
    (b,) = ground_truth_boundaries(w, "#c")
    assert b.difference == ("ops",)


def test_blind_probe_names_far_server():
    w = duel_world(CHAIN, LINKS, "A", "X")
    one_user_desync(w, DesyncPlan("a", "b", ("A", "X"), "#c"))
    w.run_until_quiescent()
    assert detect_boundary(w, "#c", "b", "a", blind=True) == "A"


def test_probe_on_same_server_is_synced():
    w = duel_world(["A", "B"], [("A", "B")], "A", "A")
    assert detect_boundary(w, "#c", "b", "a") is None
