"""Event-sourced pull request records.

A :class:`PullRequestRecord` is an immutable value.  :func:`apply_event`
folds one :class:`~nudge.events.EventRecord` into it and returns a new
record; :func:`replay` folds a whole event list.
"""
from __future__ import annotations

import enum
import posixpath
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Iterable, Mapping

from .calendar import business_hours_between
from .errors import IllegalTransition, InvalidEvent, StaleEvent
from .events import CHURN_COUNT_FIELDS, EventKind, EventRecord, parse_timestamp

BOT_MARKERS = ("system", "bot", "account")
CONFIG_EXTENSIONS = frozenset({".config", ".json", ".yaml", ".yml", ".xml", ".ini", ".settings", ".toml", ".props"})


def is_bot_name(name: str) -> bool:
    """Non-human account heuristic: the name mentions system/bot/account."""
    lowered = name.lower()
    return any(marker in lowered for marker in BOT_MARKERS)


class PrState(str, enum.Enum):
    ACTIVE = "Active"
    WAITING_FOR_AUTHOR = "WaitingForAuthor"
    APPROVED = "Approved"
    REJECTED = "Rejected"
    MERGED = "Merged"
    ABANDONED = "Abandoned"

    @property
    def terminal(self) -> bool:
        return self in (PrState.MERGED, PrState.ABANDONED)


NON_TERMINAL = tuple(s for s in PrState if not s.terminal)

_VOTE_TARGET = {
    10: PrState.APPROVED,
    5: PrState.APPROVED,
    -5: PrState.WAITING_FOR_AUTHOR,
    -10: PrState.REJECTED,
    0: PrState.ACTIVE,
}


class ActorKind(str, enum.Enum):
    AUTHOR = "Author"
    REVIEWER = "Reviewer"
    BOT = "Bot"


@dataclass(frozen=True)
class Actor:
    id: str
    kind: ActorKind
    display_name: str

    @classmethod
    def make(cls, actor_id: str, role: ActorKind, display_name: str | None = None) -> "Actor":
        name = display_name or actor_id
        return cls(actor_id, ActorKind.BOT if is_bot_name(name) else role, name)

    @property
    def is_bot(self) -> bool:
        return self.kind is ActorKind.BOT


@dataclass(frozen=True)
class Vote:
    reviewer: str
    value: int
    timestamp: datetime


@dataclass(frozen=True)
class Comment:
    author: str
    text: str
    timestamp: datetime


@dataclass(frozen=True)
class StatusChange:
    actor: str
    status: str
    timestamp: datetime


@dataclass(frozen=True)
class CommentThread:
    id: str
    author: str
    status: str
    comments: tuple[Comment, ...]
    status_changes: tuple[StatusChange, ...] = ()

    @property
    def is_vote_event(self) -> bool:
        return "voted" in self.comments[0].text

    @property
    def created_at(self) -> datetime:
        return self.comments[0].timestamp


@dataclass(frozen=True)
class ChurnSummary:
    total_churn_lines: int = 0
    lines_changed: int = 0
    files_modified: int = 0
    distinct_paths: int = 0
    distinct_file_types: int = 0
    methods_churned: int = 0
    classes_touched: int = 0
    conditionals_touched: int = 0
    loops_touched: int = 0
    references_changed: int = 0
    edits_csproj: bool = False
    edits_config: bool = False

    def __post_init__(self):
        if self.lines_changed > self.total_churn_lines:
            raise InvalidEvent("lines_changed exceeds total_churn_lines")
        if self.distinct_file_types > self.files_modified:
            raise InvalidEvent("distinct_file_types exceeds files_modified")

    @classmethod
    def from_payload(cls, churn: Mapping, files: Iterable[str] = ()) -> "ChurnSummary":
        values = dict(churn)
        files = sorted(set(files))
        if files:
            values.update(_file_derived(files))
            values["edits_csproj"] = values["edits_csproj"] or bool(churn.get("edits_csproj"))
            values["edits_config"] = values["edits_config"] or bool(churn.get("edits_config"))
        return cls(**values)


def _file_derived(files: Iterable[str]) -> dict:
    files = set(files)
    exts = {posixpath.splitext(f)[1].lower() for f in files}
    return {
        "files_modified": len(files),
        "distinct_paths": len({posixpath.dirname(f) for f in files}),
        "distinct_file_types": len(exts),
        "edits_csproj": ".csproj" in exts,
        "edits_config": bool(exts & CONFIG_EXTENSIONS),
    }


_SUMMED = ("total_churn_lines", "lines_changed", "methods_churned", "classes_touched",
           "conditionals_touched", "loops_touched", "references_changed")
_FILE_COUNTS = ("files_modified", "distinct_paths", "distinct_file_types")


@dataclass(frozen=True)
class Iteration:
    index: int
    pusher: str
    timestamp: datetime
    churn: ChurnSummary
    files: tuple[str, ...] = ()


def aggregate_churn(iterations: Iterable[Iteration]) -> ChurnSummary:
    """Combine per-iteration churn.

    Line/method/class counts add up.  File-derived counts come from the union
    of listed file paths, so touching the same file twice counts once; when no
    iteration lists files the per-iteration maximum is used instead.
    """
    iterations = list(iterations)
    if not iterations:
        return ChurnSummary()
    values = {name: sum(getattr(it.churn, name) for it in iterations) for name in _SUMMED}
    files = {f for it in iterations for f in it.files}
    if files:
        values.update(_file_derived(files))
    else:
        values.update({name: max(getattr(it.churn, name) for it in iterations) for name in _FILE_COUNTS})
        values["edits_csproj"] = False
        values["edits_config"] = False
    values["edits_csproj"] = values["edits_csproj"] or any(it.churn.edits_csproj for it in iterations)
    values["edits_config"] = values["edits_config"] or any(it.churn.edits_config for it in iterations)
    return ChurnSummary(**values)


@dataclass(frozen=True)
class IntentFlags:
    is_bug_fix: bool = False
    is_feature: bool = False
    is_refactor: bool = False
    is_deprecation: bool = False
    is_merge_change: bool = False


@dataclass(frozen=True)
class PullRequestRecord:
    id: str
    repo_id: str
    author: Actor
    required_reviewers: tuple[Actor, ...]
    state: PrState
    created_at: datetime
    title: str
    description: str
    closed_at: datetime | None = None
    threads: tuple[CommentThread, ...] = ()
    iterations: tuple[Iteration, ...] = ()
    votes: tuple[Vote, ...] = ()
    project_paths: tuple[str, ...] = ()
    intent_flags: IntentFlags = IntentFlags()
    actors: Mapping[str, Actor] = field(default_factory=dict)
    last_event_at: datetime | None = None
    author_team_joined_at: datetime | None = None
    author_company_joined_at: datetime | None = None

    @property
    def is_terminal(self) -> bool:
        return self.state.terminal

    def actor(self, actor_id: str) -> Actor:
        found = self.actors.get(actor_id)
        if found is None:
            role = ActorKind.AUTHOR if actor_id == self.author.id else ActorKind.REVIEWER
            found = Actor.make(actor_id, role)
        return found

    def is_bot(self, actor_id: str) -> bool:
        return self.actor(actor_id).is_bot

    @property
    def current_votes(self) -> dict[str, int]:
        """Latest vote per reviewer."""
        latest: dict[str, int] = {}
        for vote in self.votes:
            latest[vote.reviewer] = vote.value
        return latest

    @property
    def reviewer_ids(self) -> list[str]:
        """Required reviewers, then other humans who voted or opened a thread."""
        seen = [a.id for a in self.required_reviewers]
        extra = [v.reviewer for v in self.votes]
        extra += [t.author for t in self.threads if not t.is_vote_event]
        for actor_id in extra:
            if actor_id != self.author.id and actor_id not in seen and not self.is_bot(actor_id):
                seen.append(actor_id)
        return seen

    @property
    def churn(self) -> ChurnSummary:
        return aggregate_churn(self.iterations)

    def thread(self, thread_id: str) -> CommentThread | None:
        for t in self.threads:
            if t.id == thread_id:
                return t
        return None


def _with_actor(actors: Mapping[str, Actor], actor: Actor) -> dict[str, Actor]:
    if actors.get(actor.id) == actor:
        return actors  # type: ignore[return-value]
    updated = dict(actors)
    updated[actor.id] = actor
    return updated


def _create(ev: EventRecord) -> PullRequestRecord:
    from .features import classify_intent

    p = ev.payload
    author = Actor.make(ev.actor_id, ActorKind.AUTHOR, p.get("actor_name"))
    reviewers = tuple(Actor.make(r, ActorKind.REVIEWER) for r in dict.fromkeys(p.get("reviewers", [])))
    actors = {author.id: author}
    for r in reviewers:
        actors.setdefault(r.id, r)
    title = p["title"]
    description = p.get("description", "")
    if p.get("intent") is not None:
        intent = IntentFlags(**{k: bool(v) for k, v in p["intent"].items()})
    else:
        intent = classify_intent(title, description)
    iterations: tuple[Iteration, ...] = ()
    if "churn" in p or "files" in p:
        churn = ChurnSummary.from_payload(p.get("churn", {}), p.get("files", ()))
        iterations = (Iteration(1, author.id, ev.timestamp, churn, tuple(sorted(set(p.get("files", ()))))),)
    joined = {
        key: parse_timestamp(p[key]) if key in p else None
        for key in ("author_team_joined_at", "author_company_joined_at")
    }
    return PullRequestRecord(
        id=ev.pr_id,
        repo_id=ev.repo_id,
        author=author,
        required_reviewers=reviewers,
        state=PrState.ACTIVE,
        created_at=ev.timestamp,
        title=title,
        description=description,
        iterations=iterations,
        project_paths=tuple(dict.fromkeys(p.get("paths", []))),
        intent_flags=intent,
        actors=actors,
        last_event_at=ev.timestamp,
        **joined,
    )


def apply_event(pr: PullRequestRecord | None, ev: EventRecord) -> PullRequestRecord:
    """Return the record that results from applying ``ev`` to ``pr``.

    ``pr`` is ``None`` only for a ``create`` event.
    """
    if pr is None:
        if ev.kind is not EventKind.CREATE:
            raise IllegalTransition(f"{ev.kind.value} before create", ev.pr_id)
        return _create(ev)
    if ev.kind is EventKind.CREATE:
        raise IllegalTransition("PR already exists", pr.id)
    if pr.state.terminal:
        raise IllegalTransition(f"{ev.kind.value} on terminal state {pr.state.value}", pr.id)
    if pr.last_event_at is not None and ev.timestamp < pr.last_event_at:
        raise StaleEvent(f"PR {pr.id}: event at {ev.timestamp} precedes {pr.last_event_at}")

    p = ev.payload
    actor = pr.actor(ev.actor_id)
    if "actor_name" in p:
        role = ActorKind.AUTHOR if ev.actor_id == pr.author.id else ActorKind.REVIEWER
        actor = Actor.make(ev.actor_id, role, p["actor_name"])
    changes: dict = {"last_event_at": ev.timestamp, "actors": _with_actor(pr.actors, actor)}

    if ev.kind is EventKind.UPDATE_ITERATION:
        files = tuple(sorted(set(p.get("files", ()))))
        churn = ChurnSummary.from_payload(p.get("churn", {}), files)
        changes["iterations"] = pr.iterations + (Iteration(len(pr.iterations) + 1, ev.actor_id, ev.timestamp, churn, files),)
        reviewers = list(pr.required_reviewers)
        removed = set(p.get("reviewers_removed", ()))
        reviewers = [r for r in reviewers if r.id not in removed]
        for rid in p.get("reviewers_added", ()):
            if rid not in {r.id for r in reviewers}:
                reviewers.append(Actor.make(rid, ActorKind.REVIEWER))
                changes["actors"] = _with_actor(changes["actors"], reviewers[-1])
        changes["required_reviewers"] = tuple(reviewers)
        if "paths" in p:
            changes["project_paths"] = tuple(dict.fromkeys(pr.project_paths + tuple(p["paths"])))
        changes["state"] = PrState.ACTIVE

    elif ev.kind is EventKind.COMMENT:
        thread_id = str(p["thread_id"])
        comment = Comment(ev.actor_id, p["text"], ev.timestamp)
        existing = pr.thread(thread_id)
        if existing is None:
            new = CommentThread(thread_id, ev.actor_id, p.get("status", "Active"), (comment,))
            changes["threads"] = pr.threads + (new,)
        else:
            updated = replace(existing, comments=existing.comments + (comment,))
            changes["threads"] = tuple(updated if t.id == thread_id else t for t in pr.threads)

    elif ev.kind is EventKind.THREAD_STATUS_CHANGE:
        thread_id = str(p["thread_id"])
        existing = pr.thread(thread_id)
        if existing is None:
            raise InvalidEvent(f"PR {pr.id}: status change on unknown thread {thread_id!r}")
        updated = replace(
            existing,
            status=p["status"],
            status_changes=existing.status_changes + (StatusChange(ev.actor_id, p["status"], ev.timestamp),),
        )
        changes["threads"] = tuple(updated if t.id == thread_id else t for t in pr.threads)

    elif ev.kind is EventKind.VOTE:
        value = p["value"]
        changes["votes"] = pr.votes + (Vote(ev.actor_id, value, ev.timestamp),)
        text = f"{actor.display_name} voted {value} on PR{pr.id}"
        system_thread = CommentThread(
            f"vote-{len(pr.votes) + 1}", ev.actor_id, "Closed", (Comment(ev.actor_id, text, ev.timestamp),)
        )
        changes["threads"] = pr.threads + (system_thread,)
        if pr.state is PrState.ACTIVE:
            changes["state"] = _VOTE_TARGET[value]

    elif ev.kind is EventKind.MERGE:
        if pr.state is not PrState.APPROVED:
            raise IllegalTransition(f"merge from {pr.state.value}", pr.id)
        changes["state"] = PrState.MERGED
        changes["closed_at"] = ev.timestamp

    elif ev.kind is EventKind.ABANDON:
        changes["state"] = PrState.ABANDONED
        changes["closed_at"] = ev.timestamp

    return replace(pr, **changes)


def sort_events(events: Iterable[EventRecord]) -> list[EventRecord]:
    return sorted(events, key=lambda ev: ev.sort_key)


def replay(events: Iterable[EventRecord]) -> PullRequestRecord:
    """Fold a single PR's events (sorted first) into a record."""
    pr = None
    for ev in sort_events(events):
        pr = apply_event(pr, ev)
    if pr is None:
        raise InvalidEvent("no events to replay")
    return pr


def lifetime_hours(pr: PullRequestRecord, as_of: datetime, tz=None) -> float:
    """Weekend-excluded hours from creation to ``as_of`` or closing, whichever is first."""
    end = as_of if pr.closed_at is None else min(as_of, pr.closed_at)
    return business_hours_between(pr.created_at, end, tz)


__all__ = [
    "Actor", "ActorKind", "ChurnSummary", "Comment", "CommentThread", "IntentFlags", "Iteration",
    "NON_TERMINAL", "PrState", "PullRequestRecord", "StatusChange", "Vote", "aggregate_churn",
    "apply_event", "is_bot_name", "lifetime_hours", "replay", "sort_events", "CHURN_COUNT_FIELDS",
]
