import json

import pytest

from nudge.cli import main
from nudge.events import dump_events
from nudge.persistence import load, read_decisions
from nudge.sim import SimConfig, generate_corpus

AS_OF = "2024-07-01T00:00:00Z"


@pytest.fixture
def events_file(tmp_path):
    config = SimConfig(seed=6, n_prs=120, n_history_prs=0, n_repos=2, n_developers=10, span_days=60)
    path = tmp_path / "events.jsonl"
    path.write_text(dump_events(generate_corpus(config)))
    return path


def test_full_workflow(tmp_path, events_file, capsys):
    store = tmp_path / "store"
    assert main(["ingest", "--store", str(store), str(events_file)]) == 0
    assert "ingested" in capsys.readouterr().out
    assert main(["ingest", "--store", str(store), str(events_file)]) == 0
    assert "ingested 0 events" in capsys.readouterr().out

    assert main(["nudge-scan", "--store", str(store), "--now", AS_OF]) == 2

    assert main(["train", "--store", str(store), "--as-of", AS_OF, "--n-estimators", "10",
                 "--evaluate", "--k", "3", "--correlations"]) == 0
    out = capsys.readouterr().out
    assert "GradientBoosting" in out and "day_of_week" in out
    assert load(store).registry.global_model is not None

    assert main(["nudge-scan", "--store", str(store), "--now", "2024-01-20T12:00:00Z", "--mode", "lt"]) == 0
    out = capsys.readouterr().out
    assert "Notified=" in out
    decisions = read_decisions(store)
    assert decisions
    notified = [d for d in decisions if d["outcome"] == "Notified"]
    assert len(notified) == len(load(store).ledger) > 0

    pr = notified[0]["pr_id"]
    assert main(["resolve", "--store", str(store), pr, "Resolved"]) == 0
    assert main(["report", "--store", str(store)]) == 0
    assert "comment resolution percentage" in capsys.readouterr().out


def test_resolve_unknown_pr_fails(tmp_path, events_file, capsys):
    store = tmp_path / "s"
    main(["ingest", "--store", str(store), str(events_file)])
    assert main(["resolve", "--store", str(store), "nope", "Resolved"]) == 1
    assert "error" in capsys.readouterr().err


def test_simulate_writes_reports(tmp_path, capsys):
    cfg = tmp_path / "sim.toml"
    cfg.write_text("n_prs = 90\nn_history_prs = 150\nn_estimators = 10\n")
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(cfg), "--seed", "2", "--factor", "0.5", "--out", str(out)]) == 0
    for name in ("lifetimes.csv", "buckets.csv", "resolutions.csv", "report.txt", "buckets.svg", "events.jsonl",
                 "ks.json"):
        assert (out / name).exists()
    assert set(json.loads((out / "ks.json").read_text())) == {"None|NudgeLT", "None|NudgeFULL", "NudgeLT|NudgeFULL"}
    assert "Average pull request lifetime" in capsys.readouterr().out
