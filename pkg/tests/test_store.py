import io
import random
from datetime import timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from builders import MONDAY, PrLog, merged_pr
from nudge.domain import PrState
from nudge.errors import DuplicateNotification, IllegalTransition, ParseError, UnknownNotification
from nudge.events import dump_events
from nudge.store import (
    Corpus, LedgerEntry, NotificationLedger, RepoCorpus, Resolution, ingest, training_window,
)


def lines_of(*logs):
    return dump_events(ev for log in logs for ev in log.events).splitlines(keepends=True)


def test_empty_input_is_empty_delta():
    corpus = Corpus()
    delta = ingest(corpus, io.StringIO(""))
    assert delta.empty and len(corpus) == 0 and delta.watermarks == {}


def test_three_event_lifecycle_from_file(tmp_path):
    path = tmp_path / "events.jsonl"
    path.write_text("".join(lines_of(PrLog().vote("bob", 10, 1).merge(2))))
    corpus = Corpus()
    delta = ingest(corpus, path)
    assert delta.new_events == 3
    (repo,) = corpus
    assert repo.prs["1"].state is PrState.MERGED
    assert repo.ingest_watermark == MONDAY + timedelta(hours=2)


def test_reingest_is_idempotent_byte_for_byte():
    lines = lines_of(PrLog().comment("bob", "t", 1).vote("bob", 10, 2).merge(3), PrLog("2").vote("carol", -5, 4))
    once, twice = Corpus(), Corpus()
    ingest(once, lines)
    ingest(twice, lines)
    delta = ingest(twice, lines)
    assert delta.new_events == 0 and delta.duplicates == len(lines)
    assert dump_events(once.all_events()) == dump_events(twice.all_events())
    assert once == twice


def test_out_of_order_lines_are_sorted_per_pr():
    lines = lines_of(PrLog().comment("bob", "t", 1).vote("bob", 10, 2).merge(3))
    shuffled = list(reversed(lines))
    a, b = Corpus(), Corpus()
    ingest(a, lines)
    ingest(b, shuffled)
    assert a == b


def test_late_event_in_a_second_batch_replays_the_pr():
    log = PrLog().comment("bob", "t", 1).vote("bob", 10, 5)
    corpus = Corpus()
    ingest(corpus, lines_of(log)[:1] + lines_of(log)[2:])
    ingest(corpus, lines_of(log)[1:2])
    assert corpus.repo("repo").prs["1"] == log.record()


def test_order_insensitive_across_prs():
    logs = [PrLog(str(i)).vote("bob", 10, i + 1) for i in range(5)]
    lines = lines_of(*logs)
    rng = random.Random(3)
    for _ in range(5):
        shuffled = lines[:]
        rng.shuffle(shuffled)
        c = Corpus()
        ingest(c, shuffled)
        ref = Corpus()
        ingest(ref, lines)
        assert c == ref


def test_parse_error_has_line_number():
    lines = lines_of(PrLog()) + ["{oops\n"]
    with pytest.raises(ParseError) as exc:
        ingest(Corpus(), lines)
    assert exc.value.line_no == 2


def test_lenient_mode_collects_errors():
    lines = lines_of(PrLog()) + ["{oops\n"] + lines_of(PrLog("2").merge(1))
    corpus = Corpus()
    delta = ingest(corpus, lines, strict=False)
    assert len(delta.errors) == 2
    assert set(corpus.repo("repo").prs) == {"1", "2"}


def test_illegal_transition_names_the_pr():
    with pytest.raises(IllegalTransition) as exc:
        ingest(Corpus(), lines_of(PrLog("77").merge(1)))
    assert exc.value.pr_id == "77"


def test_strict_failure_commits_nothing():
    corpus = Corpus()
    with pytest.raises(IllegalTransition):
        ingest(corpus, lines_of(PrLog("1"), PrLog("2").merge(1)))
    assert len(corpus.repo("repo")) == 0


def test_training_window_filters():
    as_of = MONDAY + timedelta(days=3 * 365 + 30)
    repo = RepoCorpus("repo")
    kept = merged_pr("keep", 100, at=as_of - timedelta(days=30))
    short = merged_pr("short", 10, at=as_of - timedelta(days=30))
    long_ = merged_pr("long", 24 * 30, at=as_of - timedelta(days=60))
    old = merged_pr("old", 100, at=as_of - timedelta(days=3 * 365))
    abandoned = PrLog("gone", at=as_of - timedelta(days=30)).abandon(100)
    for log in (kept, short, long_, old, abandoned):
        repo.add_events(log.events)
    assert [p.id for p in training_window(repo, as_of)] == ["keep"]


def test_training_window_bounds_are_inclusive():
    # 336 business hours from a Monday morning cross two weekends
    repo = RepoCorpus("repo")
    repo.add_events(merged_pr("a", 24).events)
    repo.add_events(merged_pr("b", 336 + 2 * 48).events)
    repo.add_events(merged_pr("c", 336 + 2 * 48 + 0.5).events)
    repo.add_events(merged_pr("d", 23.5).events)
    as_of = MONDAY + timedelta(days=60)
    assert [p.id for p in training_window(repo, as_of)] == ["a", "b"]


def test_pr_as_of_and_truncated_views():
    log = PrLog().comment("bob", "t", 1).vote("bob", 10, 5).merge(10)
    repo = RepoCorpus("repo")
    repo.add_events(log.events)
    view = repo.pr_as_of("1", log.at(6))
    assert view.state is PrState.APPROVED and view.closed_at is None
    assert repo.pr_as_of("1", log.at(-1)) is None
    assert repo.truncated(log.at(6)).prs["1"] == view


# -- ledger ------------------------------------------------------------------------

def test_ledger_rejects_second_notification():
    ledger = NotificationLedger()
    ledger.add(LedgerEntry("1", MONDAY, ("alice",)))
    with pytest.raises(DuplicateNotification):
        ledger.add(LedgerEntry("1", MONDAY + timedelta(hours=6), ("bob",)))
    assert len(ledger) == 1


def test_ledger_resolution():
    ledger = NotificationLedger()
    ledger.add(LedgerEntry("1", MONDAY, ("alice",)))
    assert ledger.resolve("1", Resolution.WONT_FIX).resolution is Resolution.WONT_FIX
    with pytest.raises(UnknownNotification):
        ledger.resolve("2", Resolution.RESOLVED)


@given(st.lists(st.sampled_from("abcdef"), max_size=30))
@settings(max_examples=100, deadline=None)
def test_ledger_uniqueness_property(ids):
    ledger = NotificationLedger()
    accepted = 0
    for pr_id in ids:
        try:
            ledger.add(LedgerEntry(pr_id, MONDAY, ("x",)))
            accepted += 1
        except DuplicateNotification:
            pass
    assert accepted == len(set(ids)) == len(ledger)
