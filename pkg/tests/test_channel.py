import pytest

from ircdesync.channel import (
    ChannelView,
    ModeClass,
    apply_local,
    apply_remote,
    authorize,
    classify,
    differences,
    make_change,
    privmsg_check,
)


def view(**kw):
    v = ChannelView("#c")
    for nick in kw.pop("members", ()):
        v.add_member(nick)
    for k, val in kw.items():
        setattr(v, k, val)
    return v


@pytest.mark.parametrize(
    "change, cls",
    [
        (make_change("topic", "#c", "a", arg="t"), ModeClass.FLOWING),
        (make_change("flag", "#c", "a", letter="s"), ModeClass.FLOWING),
        (make_change("flag", "#c", "a", letter="m"), ModeClass.TOGGLE),
        (make_change("op", "#c", "a", adding=False, arg="b"), ModeClass.COLLIDING),
        (make_change("kick", "#c", "a", arg="b"), ModeClass.COLLIDING),
        (make_change("list", "#c", "a", letter="b", arg="m"), ModeClass.FLOWING),
    ],
)
def test_classify(change, cls):
    assert classify(change) is cls


def test_classify_rejects_traffic():
    with pytest.raises(ValueError):
        classify(make_change("privmsg", "#c", "a", arg="hi"))


def test_make_change_validates():
    with pytest.raises(ValueError):
        make_change("flag", "#c", "a", letter="q")
    with pytest.raises(ValueError):
        make_change("limit", "#c", "a", arg=0)
    with pytest.raises(ValueError):
        make_change("topic", "nochan", "a", arg="x")


def test_topic_rights_follow_t():
    v = view(members=["a", "b"], ops={"a"})
    ch = make_change("topic", "#c", "b", arg="x")
    assert authorize(v, "b", ch).ok
    v.flags.add("t")
    assert authorize(v, "b", ch).reason == "no_ops"
    assert authorize(v, "z", make_change("topic", "#c", "z", arg="x")).reason == "no_ops"


def test_first_join_gets_ops_and_carries_grant():
    v = view()
    out = apply_local(v, "a", make_change("join", "#c", "a"), server="A")
    assert v.ops == {"a"} and out.forward_as.grant == "o"


@pytest.mark.parametrize("setup, code", [({"flags": {"i"}}, 473), ({"key": "k"}, 475), ({"limit": 1}, 471), ({"bans": ["e"]}, 474)])
def test_join_refusals(setup, code):
    v = view(members=["a"], **setup)
    out = apply_local(v, "e", make_change("join", "#c", "e"), server="A")
    assert not out.applied and out.numerics[0].code == code


def test_exception_beats_ban():
    v = view(members=["a"], bans=["e"], exceptions=["e"])
    assert apply_local(v, "e", make_change("join", "#c", "e")).applied


def test_privmsg_rules():
    v = view(members=["a", "b"], ops={"a"}, flags={"m", "n"})
    assert privmsg_check(v, "a") is None
    assert privmsg_check(v, "b") == 404
    v.voices.add("b")
    assert privmsg_check(v, "b") is None
    assert privmsg_check(v, "outsider") == 404


def test_toggle_without_effect_is_dropped():
    v = view(members=["a"], ops={"a"}, flags={"m"})
    out = apply_local(v, "a", make_change("flag", "#c", "a", letter="m"))
    assert not out.applied and not out.relay
    out = apply_remote(v, make_change("flag", "#c", "a", letter="m"))
    assert not out.relay and out.notice is None


def test_remote_deop_from_non_op_is_fake():
    v = view(members=["a", "x"], ops={"x"})
    out = apply_remote(v, make_change("op", "#c", "a", adding=False, arg="x"))
    assert not out.applied and not out.relay and out.notice[0] == "fake_mode"
    assert v.ops == {"x"}


def test_remote_join_for_member_is_fake():
    v = view(members=["a"])
    out = apply_remote(v, make_change("join", "#c", "a"))
    assert out.notice[0] == "fake_join" and not out.relay


def test_last_part_resets_view():
    v = view(members=["a"], ops={"a"}, topic=("t", "a"), flags={"n"})
    apply_local(v, "a", make_change("part", "#c", "a"))
    assert v.fields() == ChannelView("#c").fields()


def test_differences_names_fields():
    a, b = view(members=["a"], ops={"a"}), view(members=["a"])
    b.flags.add("m")
    assert differences(a, b) == ("ops", "mode:m")
