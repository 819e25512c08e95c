"""Per-repository PR corpora, JSONL ingestion, and the notification ledger."""
from __future__ import annotations

import enum
import logging
import os
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from typing import IO, Iterable, Iterator

from .domain import PrState, PullRequestRecord, apply_event, lifetime_hours, sort_events
from .errors import (
    DuplicateNotification,
    IllegalTransition,
    InvalidEvent,
    NudgeError,
    ParseError,
    StaleEvent,
    UnknownNotification,
)
from .events import EventRecord, parse_lines

log = logging.getLogger(__name__)

MIN_TRAINING_HOURS = 24.0
MAX_TRAINING_HOURS = 336.0
DAYS_PER_YEAR = 365


@dataclass
class RepoCorpus:
    """All PRs of one repository, rebuilt from their event logs."""

    repo_id: str
    prs: dict[str, PullRequestRecord] = field(default_factory=dict)
    events: dict[str, list[EventRecord]] = field(default_factory=dict)
    ingest_watermark: datetime | None = None
    _seen: set = field(default_factory=set, repr=False, compare=False)
    # first timestamp per actor over every event held; valid for as_of >= watermark
    first_activity: dict[str, datetime] = field(default_factory=dict, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.prs)

    def add_events(self, events: Iterable[EventRecord], strict: bool = True) -> tuple[list[str], list[NudgeError], int]:
        """Merge events into the corpus.

        Returns ``(changed_pr_ids, errors, duplicate_count)``.  In strict mode
        the first illegal event raises and nothing is committed; otherwise the
        offending events are dropped and reported.
        """
        fresh: dict[str, list[EventRecord]] = {}
        duplicates = 0
        batch_keys = set()
        for ev in events:
            if ev.repo_id != self.repo_id:
                raise InvalidEvent(f"event for repo {ev.repo_id!r} added to corpus {self.repo_id!r}")
            key = ev.dedup_key
            if key in self._seen or key in batch_keys:
                duplicates += 1
                continue
            batch_keys.add(key)
            fresh.setdefault(ev.pr_id, []).append(ev)

        staged: dict[str, tuple[PullRequestRecord, list[EventRecord]]] = {}
        errors: list[NudgeError] = []
        for pr_id, new in fresh.items():
            new = sort_events(new)
            old = self.events.get(pr_id, [])
            pr = self.prs.get(pr_id)
            if old and new[0].sort_key < old[-1].sort_key:
                pr, kept = None, []
                pending = sort_events(old + new)
            else:
                kept = list(old)
                pending = new
            for ev in pending:
                try:
                    pr = apply_event(pr, ev)
                    kept.append(ev)
                except (IllegalTransition, StaleEvent, InvalidEvent) as exc:
                    if not isinstance(exc, IllegalTransition):
                        exc = IllegalTransition(str(exc), pr_id)
                    if strict:
                        raise exc
                    errors.append(exc)
            if pr is not None:
                staged[pr_id] = (pr, kept)

        for pr_id, (pr, kept) in staged.items():
            self.prs[pr_id] = pr
            self.events[pr_id] = kept
            for ev in kept:
                self._seen.add(ev.dedup_key)
                first = self.first_activity.get(ev.actor_id)
                if first is None or ev.timestamp < first:
                    self.first_activity[ev.actor_id] = ev.timestamp
                if self.ingest_watermark is None or ev.timestamp > self.ingest_watermark:
                    self.ingest_watermark = ev.timestamp
        return sorted(staged), errors, duplicates

    def all_events(self) -> Iterator[EventRecord]:
        for pr_id in sorted(self.events):
            yield from self.events[pr_id]

    def truncated(self, as_of: datetime) -> "RepoCorpus":
        """A new corpus holding only events at or before ``as_of``."""
        out = RepoCorpus(self.repo_id)
        out.add_events(ev for ev in self.all_events() if ev.timestamp <= as_of)
        return out

    def pr_as_of(self, pr_id: str, as_of: datetime) -> PullRequestRecord | None:
        """The PR as it looked at ``as_of`` (``None`` if not yet created)."""
        pr = self.prs[pr_id]
        if pr.last_event_at is not None and pr.last_event_at <= as_of:
            return pr
        view = None
        for ev in self.events[pr_id]:
            if ev.timestamp > as_of:
                break
            view = apply_event(view, ev)
        return view

    def same_content(self, other: "RepoCorpus") -> bool:
        return (
            self.repo_id == other.repo_id
            and self.prs == other.prs
            and self.events == other.events
            and self.ingest_watermark == other.ingest_watermark
        )


class Corpus:
    """Repository id -> :class:`RepoCorpus`."""

    def __init__(self, repos: Iterable[RepoCorpus] = ()):
        self.repos: dict[str, RepoCorpus] = {r.repo_id: r for r in repos}

    def repo(self, repo_id: str) -> RepoCorpus:
        if repo_id not in self.repos:
            self.repos[repo_id] = RepoCorpus(repo_id)
        return self.repos[repo_id]

    def __iter__(self) -> Iterator[RepoCorpus]:
        return iter(self.repos[k] for k in sorted(self.repos))

    def __len__(self) -> int:
        return len(self.repos)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Corpus) or sorted(self.repos) != sorted(other.repos):
            return False
        return all(self.repos[k].same_content(other.repos[k]) for k in self.repos)

    def find_pr(self, pr_id: str) -> tuple[RepoCorpus, PullRequestRecord] | None:
        for repo in self.repos.values():
            if pr_id in repo.prs:
                return repo, repo.prs[pr_id]
        return None

    def all_events(self) -> Iterator[EventRecord]:
        for repo in self:
            yield from repo.all_events()


@dataclass
class IngestDelta:
    changed: dict[str, list[str]] = field(default_factory=dict)
    new_events: int = 0
    duplicates: int = 0
    errors: list[NudgeError] = field(default_factory=list)
    watermarks: dict[str, datetime | None] = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return self.new_events == 0


def _open_lines(source) -> Iterator[str]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            yield from fh
    else:
        yield from source


def ingest(corpus: Corpus, source: str | os.PathLike | IO[str] | Iterable[str], strict: bool = True) -> IngestDelta:
    """Read a JSONL event log into ``corpus``.

    ``source`` is a path, an open text stream, or an iterable of lines.
    Malformed lines raise :class:`ParseError` in strict mode and are collected
    in ``delta.errors`` otherwise.  Re-ingesting identical lines is a no-op.
    """
    delta = IngestDelta()
    by_repo: dict[str, list[EventRecord]] = {}
    for line_no, item in parse_lines(_open_lines(source)):
        if isinstance(item, ParseError):
            if strict:
                raise item
            delta.errors.append(item)
            continue
        by_repo.setdefault(item.repo_id, []).append(item)
    for repo_id in sorted(by_repo):
        repo = corpus.repo(repo_id)
        before = sum(len(v) for v in repo.events.values())
        changed, errors, dups = repo.add_events(by_repo[repo_id], strict=strict)
        delta.new_events += sum(len(v) for v in repo.events.values()) - before
        delta.duplicates += dups
        delta.errors.extend(errors)
        if changed:
            delta.changed[repo_id] = changed
        delta.watermarks[repo_id] = repo.ingest_watermark
    return delta


def training_window(
    corpus: RepoCorpus | Iterable[PullRequestRecord],
    as_of: datetime,
    window_years: float = 2,
    tz=None,
) -> list[PullRequestRecord]:
    """Merged PRs closed within the window whose lifetime is within [24, 336] hours."""
    prs = corpus.prs.values() if isinstance(corpus, RepoCorpus) else corpus
    start = as_of - timedelta(days=DAYS_PER_YEAR * window_years)
    out = []
    for pr in prs:
        if pr.state is not PrState.MERGED or pr.closed_at is None:
            continue
        if not (start <= pr.closed_at <= as_of):
            continue
        hours = lifetime_hours(pr, as_of, tz)
        if MIN_TRAINING_HOURS <= hours <= MAX_TRAINING_HOURS:
            out.append(pr)
    out.sort(key=lambda p: (p.closed_at, p.id))
    return out


class Resolution(str, enum.Enum):
    RESOLVED = "Resolved"
    WONT_FIX = "WontFix"
    NO_RESPONSE = "NoResponse"
    PENDING = "Pending"


@dataclass(frozen=True)
class LedgerEntry:
    pr_id: str
    notified_at: datetime
    actors: tuple[str, ...]
    resolution: Resolution = Resolution.PENDING
    repo_id: str = ""
    mode: str = "full"


@dataclass
class NotificationLedger:
    """At most one notification per PR."""

    entries: dict[str, LedgerEntry] = field(default_factory=dict)

    def __contains__(self, pr_id: str) -> bool:
        return pr_id in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def add(self, entry: LedgerEntry) -> None:
        if entry.pr_id in self.entries:
            raise DuplicateNotification(f"PR {entry.pr_id} already notified")
        self.entries[entry.pr_id] = entry

    def resolve(self, pr_id: str, resolution: Resolution) -> LedgerEntry:
        if pr_id not in self.entries:
            raise UnknownNotification(f"no notification recorded for PR {pr_id}")
        updated = replace(self.entries[pr_id], resolution=Resolution(resolution))
        self.entries[pr_id] = updated
        return updated

    def copy(self) -> "NotificationLedger":
        return NotificationLedger(dict(self.entries))


@dataclass(frozen=True)
class Prediction:
    pr_id: str
    repo_id: str
    predicted_hours: float
    due_at: datetime
    as_of: datetime
    scope: str


__all__ = [
    "Corpus", "IngestDelta", "LedgerEntry", "NotificationLedger", "Prediction", "RepoCorpus",
    "Resolution", "ingest", "training_window",
]
