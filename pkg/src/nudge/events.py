"""Collaboration events and their JSONL wire format.

Each line of an event log is one JSON object::

    {"repo_id": "core", "pr_id": "1042", "kind": "vote", "actor_id": "alice",
     "timestamp": "2024-03-04T10:15:00Z", "payload": {"value": 10}}
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Iterable, Iterator, Mapping

from .errors import InvalidEvent, ParseError

VOTE_VALUES = frozenset({-10, -5, 0, 5, 10})
THREAD_STATUSES = ("Active", "Pending", "Resolved", "WontFix", "Closed")
CHURN_COUNT_FIELDS = (
    "total_churn_lines",
    "lines_changed",
    "files_modified",
    "distinct_paths",
    "distinct_file_types",
    "methods_churned",
    "classes_touched",
    "conditionals_touched",
    "loops_touched",
    "references_changed",
)
CHURN_FLAG_FIELDS = ("edits_csproj", "edits_config")


class EventKind(str, enum.Enum):
    CREATE = "create"
    UPDATE_ITERATION = "update_iteration"
    COMMENT = "comment"
    THREAD_STATUS_CHANGE = "thread_status_change"
    VOTE = "vote"
    MERGE = "merge"
    ABANDON = "abandon"


# tie-break for equal timestamps within one PR
KIND_ORDER = {
    EventKind.CREATE: 0,
    EventKind.UPDATE_ITERATION: 1,
    EventKind.COMMENT: 2,
    EventKind.THREAD_STATUS_CHANGE: 3,
    EventKind.VOTE: 4,
    EventKind.MERGE: 5,
    EventKind.ABANDON: 5,
}


def parse_timestamp(text: str) -> datetime:
    if not isinstance(text, str):
        raise ValueError(f"timestamp must be a string, got {type(text).__name__}")
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    ts = datetime.fromisoformat(raw)
    if ts.tzinfo is None:
        raise ValueError(f"timestamp {text!r} has no UTC offset")
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    ts = ts.astimezone(timezone.utc)
    if ts.microsecond:
        return ts.strftime("%Y-%m-%dT%H:%M:%S.%fZ")
    return ts.strftime("%Y-%m-%dT%H:%M:%SZ")


def _require(payload: Mapping, key: str, types, kind: str):
    if key not in payload:
        raise InvalidEvent(f"{kind} payload missing {key!r}")
    value = payload[key]
    if not isinstance(value, types) or isinstance(value, bool) and bool not in _as_tuple(types):
        raise InvalidEvent(f"{kind} payload field {key!r} has type {type(value).__name__}")
    return value


def _as_tuple(types):
    return types if isinstance(types, tuple) else (types,)


def _check_str_list(payload: Mapping, key: str, kind: str) -> None:
    if key in payload:
        value = payload[key]
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise InvalidEvent(f"{kind} payload field {key!r} must be a list of strings")


def _check_churn(churn: Any, kind: str) -> None:
    if not isinstance(churn, Mapping):
        raise InvalidEvent(f"{kind} churn must be an object")
    for name, value in churn.items():
        if name in CHURN_COUNT_FIELDS:
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise InvalidEvent(f"churn field {name!r} must be a non-negative integer")
        elif name in CHURN_FLAG_FIELDS:
            if not isinstance(value, bool):
                raise InvalidEvent(f"churn field {name!r} must be a boolean")
        else:
            raise InvalidEvent(f"unknown churn field {name!r}")
    if churn.get("lines_changed", 0) > churn.get("total_churn_lines", 0):
        raise InvalidEvent("lines_changed exceeds total_churn_lines")
    if churn.get("distinct_file_types", 0) > churn.get("files_modified", 0):
        raise InvalidEvent("distinct_file_types exceeds files_modified")


def validate_payload(kind: EventKind, payload: Mapping) -> None:
    """Check the kind-specific payload keys and types."""
    k = kind.value
    if kind is EventKind.CREATE:
        _require(payload, "title", str, k)
        if "description" in payload:
            _require(payload, "description", str, k)
        _check_str_list(payload, "reviewers", k)
        _check_str_list(payload, "paths", k)
        _check_str_list(payload, "files", k)
        if "churn" in payload:
            _check_churn(payload["churn"], k)
        intent = payload.get("intent")
        if intent is not None and (
            not isinstance(intent, Mapping) or not all(isinstance(v, bool) for v in intent.values())
        ):
            raise InvalidEvent("create payload 'intent' must map flag names to booleans")
        for key in ("author_team_joined_at", "author_company_joined_at"):
            if key in payload:
                try:
                    parse_timestamp(payload[key])
                except ValueError as exc:
                    raise InvalidEvent(f"create payload {key!r}: {exc}") from None
    elif kind is EventKind.UPDATE_ITERATION:
        _check_churn(payload.get("churn", {}), k)
        _check_str_list(payload, "files", k)
        _check_str_list(payload, "paths", k)
        _check_str_list(payload, "reviewers_added", k)
        _check_str_list(payload, "reviewers_removed", k)
    elif kind is EventKind.COMMENT:
        _require(payload, "thread_id", (str, int), k)
        _require(payload, "text", str, k)
        if "status" in payload and payload["status"] not in THREAD_STATUSES:
            raise InvalidEvent(f"unknown thread status {payload['status']!r}")
    elif kind is EventKind.THREAD_STATUS_CHANGE:
        _require(payload, "thread_id", (str, int), k)
        status = _require(payload, "status", str, k)
        if status not in THREAD_STATUSES:
            raise InvalidEvent(f"unknown thread status {status!r}")
    elif kind is EventKind.VOTE:
        value = _require(payload, "value", int, k)
        if value not in VOTE_VALUES:
            raise InvalidEvent(f"vote value {value} not in {sorted(VOTE_VALUES)}")


@dataclass(frozen=True)
class EventRecord:
    repo_id: str
    pr_id: str
    kind: EventKind
    actor_id: str
    timestamp: datetime
    payload: Mapping[str, Any] = field(default_factory=dict, hash=False, compare=True)

    @property
    def dedup_key(self) -> tuple:
        return (self.repo_id, self.pr_id, self.kind.value, self.timestamp, self.actor_id)

    @property
    def sort_key(self) -> tuple:
        return (self.timestamp, KIND_ORDER[self.kind])

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EventRecord":
        if not isinstance(data, Mapping):
            raise InvalidEvent("event must be a JSON object")
        missing = [k for k in ("repo_id", "pr_id", "kind", "actor_id", "timestamp") if k not in data]
        if missing:
            raise InvalidEvent(f"missing fields {missing}")
        try:
            kind = EventKind(data["kind"])
        except ValueError:
            raise InvalidEvent(f"unknown event kind {data['kind']!r}") from None
        try:
            ts = parse_timestamp(data["timestamp"])
        except ValueError as exc:
            raise InvalidEvent(str(exc)) from None
        payload = data.get("payload") or {}
        if not isinstance(payload, Mapping):
            raise InvalidEvent("payload must be an object")
        validate_payload(kind, payload)
        return cls(
            repo_id=str(data["repo_id"]),
            pr_id=str(data["pr_id"]),
            kind=kind,
            actor_id=str(data["actor_id"]),
            timestamp=ts,
            payload=dict(payload),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "repo_id": self.repo_id,
            "pr_id": self.pr_id,
            "kind": self.kind.value,
            "actor_id": self.actor_id,
            "timestamp": format_timestamp(self.timestamp),
            "payload": dict(self.payload),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def parse_lines(lines: Iterable[str]) -> Iterator[tuple[int, EventRecord | ParseError]]:
    """Yield ``(line_no, event)`` or ``(line_no, ParseError)`` per non-blank line."""
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
            yield line_no, EventRecord.from_dict(data)
        except (json.JSONDecodeError, InvalidEvent, TypeError) as exc:
            yield line_no, ParseError(line_no, str(exc))


def dump_events(events: Iterable[EventRecord]) -> str:
    return "".join(ev.to_json() + "\n" for ev in events)
