from datetime import timedelta

from hypothesis import given, settings
from hypothesis import strategies as st

from builders import MONDAY, PrLog
from nudge.activity import is_quiet, latest_activity


def test_creation_alone_is_not_activity():
    snap = latest_activity(PrLog(churn={"total_churn_lines": 3}).record())
    assert snap.last_any is None
    assert is_quiet(PrLog().record(), MONDAY)


def test_bot_comments_are_ignored():
    pr = PrLog().comment("bob", "h", 1).comment("BuildBot-3", "b", 5, text="Build failed").record()
    assert latest_activity(pr).last_comment_at == MONDAY + timedelta(hours=1)


def test_vote_is_a_state_change():
    log = PrLog().vote("User1", 10, 3)
    snap = latest_activity(log.record())
    assert snap.last_state_change_at == log.at(3)
    assert snap.last_comment_at is None
    assert log.record().threads[0].comments[0].text == "User1 voted 10 on PR1"


def test_pushes_and_status_changes_count():
    log = PrLog().comment("bob", "t", 1).push(4).status("alice", "t", "Resolved", 6)
    snap = latest_activity(log.record())
    assert snap.last_commit_at == log.at(4)
    assert snap.last_comment_at == log.at(6)
    assert snap.last_any == log.at(6)


def test_quiet_window_boundaries():
    log = PrLog().comment("bob", "t", 10)
    pr = log.record()
    assert not is_quiet(pr, log.at(12))
    assert is_quiet(pr, log.at(35))
    assert is_quiet(pr, log.at(34))  # exactly 24h later
    assert not is_quiet(pr, log.at(34) - timedelta(seconds=1))
    assert is_quiet(pr, log.at(22), quiet_hours=12)


def test_bot_only_streams_stay_quiet():
    pr = PrLog().comment("system", "s", 1).comment("svc-account", "a", 2).comment("CIBot", "c", 3).record()
    assert latest_activity(pr).last_any is None


@given(st.lists(st.floats(0, 200, allow_nan=False), max_size=8), st.floats(0, 300), st.floats(0, 300))
@settings(max_examples=100, deadline=None)
def test_quiet_is_monotone_without_new_events(offsets, t1, dt):
    log = PrLog()
    for i, off in enumerate(sorted(offsets)):
        log.comment("bob", f"t{i}", off)
    pr = log.record()
    if is_quiet(pr, log.at(t1)):
        assert is_quiet(pr, log.at(t1 + dt))
