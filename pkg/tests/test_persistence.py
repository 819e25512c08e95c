import json
from datetime import timedelta

import numpy as np
import pytest

from builders import MONDAY, PrLog, constant_model, corpus_of
from nudge.engine import ModelPolicy, NudgeEngine, ScanMode, feature_vector_for, train_global_model
from nudge.errors import CorruptStore
from nudge.events import dump_events
from nudge.features import refresh_cache
from nudge.models import Backend, ModelConfig, ModelRegistry, fit
from nudge.persistence import (
    EVENTS_FILE, MODELS_DIR, SNAPSHOT_FILE, StoreState, append_decisions, load, persist, read_decisions,
)
from nudge.sim import SimConfig, generate_corpus
from nudge.store import Corpus


def test_empty_round_trip(tmp_path):
    persist(StoreState(), tmp_path)
    back = load(tmp_path)
    assert len(back.corpus) == 0 and len(back.ledger) == 0 and back.registry.global_model is None


@pytest.fixture(scope="module")
def generated_state():
    config = SimConfig(seed=4, n_prs=100, n_history_prs=0, n_repos=2, n_developers=12, span_days=40)
    corpus = Corpus()
    for ev in generate_corpus(config):
        corpus.repo(ev.repo_id).add_events([ev])
    as_of = config.start + timedelta(days=100)
    policy = ModelPolicy(repo_min_training_size=10)
    model = train_global_model(corpus, as_of, policy, ModelConfig(n_estimators=20))
    engine = NudgeEngine(ModelRegistry(global_model=model), policy=policy)
    for day in range(0, 60, 3):
        engine.scan(corpus, config.start + timedelta(days=day), ScanMode.FULL)
    return StoreState(corpus, engine.ledger, engine.predictions, engine.registry), as_of


def test_generated_store_round_trip(tmp_path, generated_state):
    state, as_of = generated_state
    assert len(state.ledger) > 0
    persist(state, tmp_path)
    back = load(tmp_path)
    assert back.corpus == state.corpus
    assert dump_events(back.corpus.all_events()) == dump_events(state.corpus.all_events())
    assert back.ledger == state.ledger
    assert back.predictions == state.predictions
    model, restored = state.registry.global_model, back.registry.global_model
    for repo in state.corpus:
        cache = refresh_cache(repo, as_of)
        for pr_id in sorted(repo.prs)[:10]:
            a = feature_vector_for(model, pr_id, repo, cache, as_of)
            b = feature_vector_for(restored, pr_id, back.corpus.repo(repo.repo_id), cache, as_of)
            assert a == b
            assert model.predict_one_raw(a.values) == restored.predict_one_raw(b.values)


def test_persist_twice_is_byte_identical(tmp_path, generated_state):
    state, _ = generated_state
    persist(state, tmp_path / "a")
    persist(load(tmp_path / "a"), tmp_path / "b")
    for name in (EVENTS_FILE, SNAPSHOT_FILE, f"{MODELS_DIR}/global.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_repo_models_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 3))
    registry = ModelRegistry(constant_model(40), {"r1": fit(Backend.LEAST_SQUARES, X, rng.uniform(24, 200, 40))})
    persist(StoreState(registry=registry), tmp_path)
    back = load(tmp_path).registry
    probe = rng.normal(size=(1000, 3))
    assert np.array_equal(back.repo_models["r1"].predict_many(probe), registry.repo_models["r1"].predict_many(probe))


@pytest.fixture
def small_store(tmp_path):
    persist(StoreState(corpus=corpus_of(PrLog().vote("bob", 10, 1), PrLog("2"))), tmp_path)
    return tmp_path


def test_truncated_event_log(small_store):
    path = small_store / EVENTS_FILE
    path.write_text(path.read_text()[:-20])
    with pytest.raises(CorruptStore):
        load(small_store)


def test_unknown_format_version(small_store):
    path = small_store / SNAPSHOT_FILE
    data = json.loads(path.read_text())
    data["format_version"] = 7
    path.write_text(json.dumps(data))
    with pytest.raises(CorruptStore):
        load(small_store)


def test_event_count_mismatch(small_store):
    path = small_store / EVENTS_FILE
    lines = path.read_text().splitlines(keepends=True)
    path.write_text("".join(lines[:-1]))
    with pytest.raises(CorruptStore):
        load(small_store)


def test_missing_snapshot_and_garbage_model(small_store):
    (small_store / MODELS_DIR / "global.json").write_text("{not json")
    with pytest.raises(CorruptStore):
        load(small_store)
    (small_store / SNAPSHOT_FILE).unlink()
    with pytest.raises(CorruptStore):
        load(small_store)


def test_decision_audit_log_appends(tmp_path):
    engine = NudgeEngine(ModelRegistry(global_model=constant_model(30)))
    corpus = corpus_of(PrLog().vote("bob", 10, 1))
    assert append_decisions(tmp_path, engine.scan(corpus, MONDAY + timedelta(hours=60))) == 1
    assert append_decisions(tmp_path, engine.scan(corpus, MONDAY + timedelta(hours=70))) == 1
    assert [d["outcome"] for d in read_decisions(tmp_path)] == ["Notified", "SuppressedAlreadyNotified"]
