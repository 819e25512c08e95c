import json
from datetime import datetime, timedelta, timezone

import pytest

from nudge.errors import InvalidEvent, ParseError
from nudge.events import EventKind, EventRecord, dump_events, format_timestamp, parse_lines, parse_timestamp

UTC = timezone.utc


def raw(kind="create", payload=None, **over):
    data = {"repo_id": "r", "pr_id": "1", "kind": kind, "actor_id": "alice",
            "timestamp": "2024-01-08T09:00:00Z", "payload": payload if payload is not None else {"title": "t"}}
    data.update(over)
    return data


def test_timestamp_round_trip_uses_z_suffix():
    ts = parse_timestamp("2024-01-08T09:00:00Z")
    assert ts == datetime(2024, 1, 8, 9, tzinfo=UTC)
    assert format_timestamp(ts) == "2024-01-08T09:00:00Z"


def test_offsets_normalize_to_utc():
    assert parse_timestamp("2024-01-08T10:00:00+01:00") == datetime(2024, 1, 8, 9, tzinfo=UTC)


@pytest.mark.parametrize("text", ["2024-01-08T09:00:00", "yesterday", ""])
def test_naive_or_garbage_timestamps_rejected(text):
    with pytest.raises(ValueError):
        parse_timestamp(text)


def test_record_round_trip():
    ev = EventRecord.from_dict(raw())
    assert EventRecord.from_dict(json.loads(ev.to_json())) == ev


@pytest.mark.parametrize("value", [1, -1, 7, 100])
def test_out_of_range_vote_rejected(value):
    with pytest.raises(InvalidEvent):
        EventRecord.from_dict(raw("vote", {"value": value}))


@pytest.mark.parametrize("kind,payload", [
    ("create", {}),
    ("comment", {"thread_id": "t"}),
    ("thread_status_change", {"thread_id": "t", "status": "Done"}),
    ("vote", {"value": "10"}),
    ("update_iteration", {"churn": {"total_churn_lines": -1}}),
    ("update_iteration", {"churn": {"total_churn_lines": 1, "lines_changed": 5}}),
])
def test_bad_payloads_rejected(kind, payload):
    with pytest.raises(InvalidEvent):
        EventRecord.from_dict(raw(kind, payload))


def test_unknown_kind_and_missing_fields():
    with pytest.raises(InvalidEvent):
        EventRecord.from_dict(raw("teleport"))
    data = raw()
    del data["actor_id"]
    with pytest.raises(InvalidEvent):
        EventRecord.from_dict(data)


def test_parse_lines_reports_line_numbers_and_skips_blanks():
    good = json.dumps(raw())
    lines = [good, "", "{not json", json.dumps(raw("vote", {"value": 3}))]
    out = list(parse_lines(lines))
    assert [n for n, _ in out] == [1, 3, 4]
    assert isinstance(out[0][1], EventRecord)
    assert isinstance(out[1][1], ParseError) and out[1][1].line_no == 3
    assert isinstance(out[2][1], ParseError) and out[2][1].line_no == 4


def test_sort_key_tie_break_order():
    t = datetime(2024, 1, 8, tzinfo=UTC)
    kinds = [EventKind.MERGE, EventKind.VOTE, EventKind.COMMENT, EventKind.CREATE,
             EventKind.THREAD_STATUS_CHANGE, EventKind.UPDATE_ITERATION]
    evs = [EventRecord("r", "1", k, "a", t) for k in kinds]
    ordered = [e.kind for e in sorted(evs, key=lambda e: e.sort_key)]
    assert ordered == [EventKind.CREATE, EventKind.UPDATE_ITERATION, EventKind.COMMENT,
                       EventKind.THREAD_STATUS_CHANGE, EventKind.VOTE, EventKind.MERGE]
    assert EventRecord("r", "1", EventKind.CREATE, "a", t + timedelta(seconds=1)).sort_key > evs[0].sort_key


def test_dump_is_line_per_event():
    ev = EventRecord.from_dict(raw())
    text = dump_events([ev, ev])
    assert text.count("\n") == 2 and text.endswith("\n")
