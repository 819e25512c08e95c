import itertools
import random

import pytest

from builders import PrLog
from nudge.actors import BlockerClass, BlockerVerdict, WaitingOn, identify, matching_branches
from nudge.errors import TerminalPr

VOTE_OPTIONS = (None, -10, -5, 0, 5, 10)
THREAD_OPTIONS = (None, "Active", "Pending", "Resolved", "WontFix", "Closed")
REVIEWERS = ("r1", "r2", "r3")

BLOCKER_TABLE = {
    BlockerClass.UNADDRESSED_COMMENTS: 34,
    BlockerClass.NEEDS_DISCUSSION: 47,
    BlockerClass.APPROVED_NOT_MERGED: 49,
    BlockerClass.REVIEW_NOT_STARTED: 51,
    BlockerClass.ADDRESSED_NOT_APPROVED: 19,
}


def build(reviewers, votes, threads, pr_id="1"):
    """Each reviewer optionally opens one thread (then sets its status) and optionally votes."""
    log = PrLog(pr_id, reviewers=reviewers)
    t = 1
    for r, status in zip(reviewers, threads):
        if status is not None:
            log.comment(r, f"th-{r}", t)
            if status != "Active":
                log.status(r, f"th-{r}", status, t + 0.5)
            t += 1
    for r, v in zip(reviewers, votes):
        if v is not None:
            log.vote(r, v, t)
            t += 1
    return log


def oracle(reviewers, votes, threads):
    """The decision rules restated directly over the grid coordinates."""
    cast = [(r, v) for r, v in zip(reviewers, votes) if v is not None]
    values = [v for _, v in cast]
    commenters = tuple(r for r, s in zip(reviewers, threads) if s is not None)
    open_thread = any(s in ("Active", "Pending") for s in threads)
    if any(v in (5, 10) for v in values) and not any(v < 0 for v in values):
        return BlockerClass.APPROVED_NOT_MERGED, WaitingOn.AUTHOR, ("alice",)
    if open_thread:
        return BlockerClass.UNADDRESSED_COMMENTS, WaitingOn.AUTHOR, ("alice",)
    if -5 in values:
        return BlockerClass.NEEDS_DISCUSSION, WaitingOn.AUTHOR, ("alice",)
    if not commenters and all(v == 0 for v in values):
        if not reviewers:
            return BlockerClass.REVIEW_NOT_STARTED, WaitingOn.AUTHOR, ("alice",)
        return BlockerClass.REVIEW_NOT_STARTED, WaitingOn.REVIEWERS, tuple(reviewers)
    if commenters:
        return BlockerClass.ADDRESSED_NOT_APPROVED, WaitingOn.REVIEWERS, commenters
    voters = tuple(r for r, v in cast if v != 0)
    return BlockerClass.ADDRESSED_NOT_APPROVED, WaitingOn.REVIEWERS, voters


def grid(n):
    reviewers = REVIEWERS[:n]
    for votes in itertools.product(VOTE_OPTIONS, repeat=n):
        for threads in itertools.product(THREAD_OPTIONS, repeat=n):
            yield reviewers, votes, threads


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_exhaustive_grid_exactly_one_verdict(n):
    seen = set()
    for reviewers, votes, threads in grid(n):
        pr = build(reviewers, votes, threads).record()
        verdict = identify(pr)
        fired = matching_branches(pr)
        assert fired and fired[0] is verdict.blocker_class
        assert (verdict.blocker_class, verdict.waiting_on, verdict.actors) == oracle(reviewers, votes, threads), \
            (votes, threads)
        assert verdict.actors
        seen.add(verdict.blocker_class)
    if n >= 1:
        assert seen == set(BlockerClass)


# -- stratified corpus -------------------------------------------------------------

def stratified_log(cls, pr_id, rng):
    """A PR built to land in ``cls`` with some irrelevant noise mixed in."""
    n = rng.randint(1, 3)
    reviewers = tuple(f"u{pr_id}-{i}" for i in range(n))
    lead = reviewers[0]
    log = PrLog(pr_id, reviewers=reviewers)
    if rng.random() < 0.5:
        log.comment("BuildBot", "ci", 0.5, text="Build succeeded", status="Closed")
    if rng.random() < 0.3:
        log.comment("alice", "self", 0.7, text="Note to reviewers", status="Active")
    if rng.random() < 0.3:
        log.push(0.8)
    if cls is BlockerClass.APPROVED_NOT_MERGED:
        if rng.random() < 0.5:
            log.comment(lead, "a", 1).status("alice", "a", "Resolved", 2)
        log.vote(lead, rng.choice((5, 10)), 3)
        expected = (WaitingOn.AUTHOR, ("alice",))
    elif cls is BlockerClass.UNADDRESSED_COMMENTS:
        log.comment(lead, "a", 1, status=rng.choice(("Active", "Pending")))
        if rng.random() < 0.5:
            log.vote(lead, rng.choice((-5, -10, 0)), 2)
        expected = (WaitingOn.AUTHOR, ("alice",))
    elif cls is BlockerClass.NEEDS_DISCUSSION:
        if rng.random() < 0.5:
            log.comment(lead, "a", 1).status("alice", "a", rng.choice(("Resolved", "WontFix", "Closed")), 2)
        log.vote(lead, -5, 3)
        expected = (WaitingOn.AUTHOR, ("alice",))
    elif cls is BlockerClass.REVIEW_NOT_STARTED:
        if rng.random() < 0.5:
            log.vote(lead, 0, 1)
        expected = (WaitingOn.REVIEWERS, reviewers)
    else:
        log.comment(lead, "a", 1).status("alice", "a", rng.choice(("Resolved", "WontFix", "Closed")), 2)
        if rng.random() < 0.5:
            log.vote(lead, -10, 3)
        expected = (WaitingOn.REVIEWERS, (lead,))
    return log, expected


def test_stratified_corpus_matches_blocker_table():
    rng = random.Random(11)
    labelled = []
    for cls, count in BLOCKER_TABLE.items():
        for _ in range(count):
            labelled.append((cls,) + stratified_log(cls, str(len(labelled)), rng))
    assert len(labelled) == 200
    counts = dict.fromkeys(BlockerClass, 0)
    agree = 0
    for cls, log, (waiting_on, actors) in labelled:
        verdict = identify(log.record())
        counts[verdict.blocker_class] += 1
        agree += verdict == BlockerVerdict(cls, waiting_on, actors)
    assert agree == 200
    assert counts == BLOCKER_TABLE


def test_examples():
    pr = PrLog(reviewers=("bob",)).vote("bob", 10, 1).record()
    assert identify(pr) == BlockerVerdict(BlockerClass.APPROVED_NOT_MERGED, WaitingOn.AUTHOR, ("alice",))
    pr = PrLog().comment("bob", "t", 1).status("alice", "t", "Resolved", 2).record()
    assert identify(pr) == BlockerVerdict(BlockerClass.ADDRESSED_NOT_APPROVED, WaitingOn.REVIEWERS, ("bob",))
    pr = PrLog().record()
    assert identify(pr) == BlockerVerdict(BlockerClass.REVIEW_NOT_STARTED, WaitingOn.REVIEWERS, ("bob", "carol"))


def test_mixed_approval_and_rejection_is_not_approved():
    pr = PrLog().vote("bob", 10, 1).vote("carol", -10, 2).record()
    v = identify(pr)
    assert v.blocker_class is BlockerClass.ADDRESSED_NOT_APPROVED
    assert v.actors == ("bob", "carol")


def test_terminal_prs_are_rejected():
    with pytest.raises(TerminalPr):
        identify(PrLog().vote("bob", 10, 1).merge(2).record())
    with pytest.raises(TerminalPr):
        identify(PrLog().abandon(1).record())


def test_verdict_round_trip_and_empty_actors():
    v = BlockerVerdict(BlockerClass.NEEDS_DISCUSSION, WaitingOn.AUTHOR, ("alice",))
    assert BlockerVerdict.from_dict(v.to_dict()) == v
    with pytest.raises(ValueError):
        BlockerVerdict(BlockerClass.NEEDS_DISCUSSION, WaitingOn.AUTHOR, ())
