"""On-disk store: event log, snapshot (ledger, predictions, watermarks), models, audit log.

Layout of a store directory::

    events.jsonl      every event, one JSON object per line
    snapshot.json     format version, per-repo watermarks and event counts,
                      notification ledger, cached predictions
    models/*.json     serialized models (``global.json``, ``repo-<id>.json``)
    decisions.jsonl   append-only audit trail of scan decisions
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import CorruptModel, CorruptStore, NudgeError
from .events import dump_events, format_timestamp, parse_timestamp
from .models.base import deserialize, serialize
from .models.registry import ModelRegistry
from .store import Corpus, LedgerEntry, NotificationLedger, Prediction, Resolution, ingest

FORMAT_VERSION = 1
EVENTS_FILE = "events.jsonl"
SNAPSHOT_FILE = "snapshot.json"
DECISIONS_FILE = "decisions.jsonl"
MODELS_DIR = "models"


@dataclass
class StoreState:
    corpus: Corpus = field(default_factory=Corpus)
    ledger: NotificationLedger = field(default_factory=NotificationLedger)
    predictions: dict[str, Prediction] = field(default_factory=dict)
    registry: ModelRegistry = field(default_factory=ModelRegistry)


def _ledger_to_json(ledger: NotificationLedger) -> list[dict]:
    return [
        {"pr_id": e.pr_id, "repo_id": e.repo_id, "notified_at": format_timestamp(e.notified_at),
         "actors": list(e.actors), "resolution": e.resolution.value, "mode": e.mode}
        for _, e in sorted(ledger.entries.items())
    ]


def _ledger_from_json(rows: list[dict]) -> NotificationLedger:
    ledger = NotificationLedger()
    for r in rows:
        ledger.add(LedgerEntry(
            r["pr_id"], parse_timestamp(r["notified_at"]), tuple(r["actors"]),
            Resolution(r["resolution"]), r.get("repo_id", ""), r.get("mode", "full"),
        ))
    return ledger


def _prediction_to_json(p: Prediction) -> dict:
    return {"pr_id": p.pr_id, "repo_id": p.repo_id, "predicted_hours": p.predicted_hours,
            "due_at": format_timestamp(p.due_at), "as_of": format_timestamp(p.as_of), "scope": p.scope}


def _prediction_from_json(d: dict) -> Prediction:
    return Prediction(d["pr_id"], d["repo_id"], float(d["predicted_hours"]),
                      parse_timestamp(d["due_at"]), parse_timestamp(d["as_of"]), d["scope"])


def _atomic_write(path: Path, data: str | bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(tmp, mode, **({} if isinstance(data, bytes) else {"encoding": "utf-8"})) as fh:
        fh.write(data)
    os.replace(tmp, path)


def persist(state: StoreState, directory: str | os.PathLike) -> Path:
    """Write ``state`` to ``directory`` (created if needed). The audit log is left alone."""
    root = Path(directory)
    (root / MODELS_DIR).mkdir(parents=True, exist_ok=True)
    _atomic_write(root / EVENTS_FILE, dump_events(state.corpus.all_events()))
    for name, model in state.registry.items():
        _atomic_write(root / MODELS_DIR / f"{name}.json", serialize(model))
    snapshot = {
        "format_version": FORMAT_VERSION,
        "repos": {
            r.repo_id: {
                "watermark": format_timestamp(r.ingest_watermark) if r.ingest_watermark else None,
                "event_count": sum(len(v) for v in r.events.values()),
                "pr_count": len(r.prs),
            }
            for r in state.corpus
        },
        "ledger": _ledger_to_json(state.ledger),
        "predictions": [_prediction_to_json(p) for _, p in sorted(state.predictions.items())],
    }
    _atomic_write(root / SNAPSHOT_FILE, json.dumps(snapshot, indent=1, sort_keys=True))
    return root


def load(directory: str | os.PathLike) -> StoreState:
    """Rebuild a :class:`StoreState`; any inconsistency raises :class:`CorruptStore`."""
    root = Path(directory)
    try:
        snapshot = json.loads((root / SNAPSHOT_FILE).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise CorruptStore(f"{root} has no {SNAPSHOT_FILE}") from None
    except json.JSONDecodeError as exc:
        raise CorruptStore(f"unreadable snapshot: {exc}") from None
    if not isinstance(snapshot, dict) or snapshot.get("format_version") != FORMAT_VERSION:
        raise CorruptStore(f"unsupported store format {snapshot.get('format_version') if isinstance(snapshot, dict) else None!r}")

    state = StoreState()
    events_path = root / EVENTS_FILE
    if not events_path.exists():
        raise CorruptStore(f"{root} has no {EVENTS_FILE}")
    text = events_path.read_text(encoding="utf-8")
    if text and not text.endswith("\n"):
        raise CorruptStore("event log is truncated")
    try:
        ingest(state.corpus, text.splitlines(keepends=True), strict=True)
    except NudgeError as exc:
        raise CorruptStore(f"event log does not replay: {exc}") from None

    try:
        repos = snapshot["repos"]
        for repo in state.corpus:
            meta = repos.get(repo.repo_id)
            if meta is None:
                raise CorruptStore(f"repository {repo.repo_id} missing from snapshot")
            count = sum(len(v) for v in repo.events.values())
            watermark = format_timestamp(repo.ingest_watermark) if repo.ingest_watermark else None
            if meta["event_count"] != count or meta["watermark"] != watermark:
                raise CorruptStore(f"repository {repo.repo_id} does not match its snapshot")
        if set(repos) - {r.repo_id for r in state.corpus}:
            raise CorruptStore("snapshot lists repositories with no events")
        state.ledger = _ledger_from_json(snapshot["ledger"])
        state.predictions = {p["pr_id"]: _prediction_from_json(p) for p in snapshot["predictions"]}
    except CorruptStore:
        raise
    except (KeyError, TypeError, ValueError, NudgeError) as exc:
        raise CorruptStore(f"malformed snapshot: {exc}") from None

    models_dir = root / MODELS_DIR
    if models_dir.is_dir():
        for path in sorted(models_dir.glob("*.json")):
            try:
                model = deserialize(path.read_bytes())
            except CorruptModel as exc:
                raise CorruptStore(f"{path.name}: {exc}") from None
            if path.stem == "global":
                state.registry.global_model = model
            elif path.stem.startswith("repo-"):
                state.registry.repo_models[path.stem[len("repo-"):]] = model
    return state


def append_decisions(directory: str | os.PathLike, decisions: Iterable) -> int:
    """Append scan decisions to the audit log; returns how many were written."""
    path = Path(directory) / DECISIONS_FILE
    lines = [json.dumps(d.to_dict(), sort_keys=True, separators=(",", ":")) for d in decisions]
    if lines:
        with open(path, "a", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    return len(lines)


def read_decisions(directory: str | os.PathLike) -> list[dict]:
    path = Path(directory) / DECISIONS_FILE
    if not path.exists():
        return []
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
