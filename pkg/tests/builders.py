"""Small factories for hand-built event logs used across the test suite."""
from __future__ import annotations

from datetime import datetime, timedelta, timezone

import numpy as np

from nudge.domain import replay
from nudge.events import EventKind, EventRecord
from nudge.features import RETAINED_FEATURES
from nudge.models import Backend, fit
from nudge.store import Corpus, RepoCorpus

UTC = timezone.utc
MONDAY = datetime(2024, 1, 8, 9, 0, tzinfo=UTC)


def hours(n: float) -> timedelta:
    return timedelta(hours=n)


class PrLog:
    """Fluent builder for one PR's events; offsets are hours after creation."""

    def __init__(self, pr_id="1", repo="repo", author="alice", reviewers=("bob", "carol"), at=MONDAY,
                 title="Add retry to uploader", description="Adds a bounded retry loop", **create):
        self.pr_id, self.repo, self.author, self.t0 = pr_id, repo, author, at
        payload = {"title": title, "description": description, "reviewers": list(reviewers)}
        payload.update(create)
        self.events = [EventRecord(repo, pr_id, EventKind.CREATE, author, at, payload)]

    def at(self, offset: float) -> datetime:
        return self.t0 + hours(offset)

    def _add(self, kind, actor, offset, payload=None) -> "PrLog":
        self.events.append(EventRecord(self.repo, self.pr_id, kind, actor, self.at(offset), payload or {}))
        return self

    def comment(self, actor, thread, offset, text="Please rename this", status="Active"):
        return self._add(EventKind.COMMENT, actor, offset, {"thread_id": thread, "text": text, "status": status})

    def status(self, actor, thread, status, offset):
        return self._add(EventKind.THREAD_STATUS_CHANGE, actor, offset, {"thread_id": thread, "status": status})

    def vote(self, actor, value, offset):
        return self._add(EventKind.VOTE, actor, offset, {"value": value})

    def push(self, offset, actor=None, **payload):
        payload.setdefault("churn", {"total_churn_lines": 10, "lines_changed": 5})
        return self._add(EventKind.UPDATE_ITERATION, actor or self.author, offset, payload)

    def merge(self, offset):
        return self._add(EventKind.MERGE, self.author, offset)

    def abandon(self, offset):
        return self._add(EventKind.ABANDON, self.author, offset)

    def record(self):
        return replay(self.events)


def corpus_of(*logs: PrLog) -> Corpus:
    corpus = Corpus()
    for log in logs:
        corpus.repo(log.repo).add_events(log.events)
    return corpus


def repo_of(*logs: PrLog) -> RepoCorpus:
    repo = RepoCorpus(logs[0].repo)
    for log in logs:
        repo.add_events(log.events)
    return repo


def merged_pr(pr_id, lifetime_hours, at=MONDAY, repo="repo", author="alice", **kw) -> PrLog:
    """Approved then merged after ``lifetime_hours`` of wall-clock time."""
    log = PrLog(pr_id, repo, author, at=at, **kw)
    return log.vote("bob", 10, lifetime_hours / 2).merge(lifetime_hours)


def constant_model(hours_value: float):
    """A ConstantMean model over the retained schema that always predicts ``hours_value``."""
    X = np.zeros((10, len(RETAINED_FEATURES)))
    return fit(Backend.CONSTANT_MEAN, X, np.full(10, hours_value), feature_schema=RETAINED_FEATURES,
               trained_at=MONDAY)


def hour_count_oracle(start: datetime, end: datetime, tz=UTC) -> int:
    """Count whole hours in [start, end) whose local start is Mon-Fri."""
    n = 0
    t = start
    while t < end:
        if t.astimezone(tz).weekday() < 5:
            n += 1
        t += timedelta(hours=1)
    return n


def minute_count_oracle(start: datetime, end: datetime, tz=UTC) -> float:
    n = 0
    t = start
    while t < end:
        if t.astimezone(tz).weekday() < 5:
            n += 1
        t += timedelta(minutes=1)
    return n / 60
