"""Follow three pull requests through three weeks of nudge scans.

A model is trained on a simulated history, then three hand-written PRs are
replayed hour by hour while the engine scans every six hours.  Each
notification shows who gets mentioned and why.

    python demos/walkthrough.py
"""
from datetime import datetime, timedelta, timezone

from nudge.engine import NudgeEngine, Outcome, ScanMode, comment_resolution_percentage, record_resolution
from nudge.events import EventKind, EventRecord
from nudge.models import ModelRegistry
from nudge.sim import SimConfig
from nudge.sim.trial import train_history_model
from nudge.store import Corpus

START = datetime(2024, 1, 1, 9, tzinfo=timezone.utc)  # a Monday


def ev(pr, kind, actor, hours, **payload):
    return EventRecord("repo1", pr, kind, actor, START + timedelta(hours=hours), payload)


def story():
    create = dict(reviewers=["dev002", "dev003"], paths=["core"], files=["core/a.cs", "core/b.cs"],
                  churn={"total_churn_lines": 120, "lines_changed": 80, "files_modified": 2,
                         "distinct_file_types": 1})
    return [
        # approved early, then the author forgets to complete it
        ev("Q1", EventKind.CREATE, "dev001", 0, title="Fix retry loop in uploader", **create),
        ev("Q1", EventKind.VOTE, "dev002", 5, value=10),
        # a reviewer leaves a comment nobody answers
        ev("Q2", EventKind.CREATE, "dev004", 1, title="Add paging to search API", **create),
        ev("Q2", EventKind.COMMENT, "dev003", 20, thread_id="t1", text="What about empty pages?", status="Active"),
        # busy back and forth: activity keeps postponing the nudge
        ev("Q3", EventKind.CREATE, "dev005", 2, title="Refactor storage layer", **create),
        *[ev("Q3", EventKind.COMMENT, "dev002", h, thread_id=f"c{h}", text="nit", status="Closed")
          for h in range(30, 330, 20)],
        ev("Q3", EventKind.VOTE, "dev003", 340, value=-5),
    ]


def main():
    print("training a lifetime model on a simulated history ...")
    model, _ = train_history_model(SimConfig(seed=3, n_history_prs=800, n_estimators=40, start=START))
    engine = NudgeEngine(ModelRegistry(global_model=model))
    corpus = Corpus()
    pending = sorted(story(), key=lambda e: e.sort_key)

    for hour in range(0, 24 * 21, 6):
        now = START + timedelta(hours=hour)
        while pending and pending[0].timestamp <= now:
            corpus.repo("repo1").add_events([pending.pop(0)])
        for d in engine.scan(corpus, now, ScanMode.FULL):
            if d.outcome is Outcome.NOTIFIED:
                print(f"\n[{now:%a %H:%M}] {d.pr_id}: predicted {d.predicted_lifetime_hours:.0f}h, "
                      f"due {d.due_at:%a %H:%M}")
                print(f"  blocker: {d.verdict.blocker_class.value}, waiting on {d.verdict.waiting_on.value}")
                print(f"  {d.message.body}")
            elif d.outcome is Outcome.SUPPRESSED_ACTIVITY and hour % 24 == 0:
                print(f"[{now:%a %H:%M}] {d.pr_id}: due but active, holding off")

    record_resolution(engine.ledger, "Q1", "Resolved")
    print(f"\nnotifications sent: {len(engine.ledger)}; "
          f"resolution percentage so far: {comment_resolution_percentage(engine.ledger):.0%}")


if __name__ == "__main__":
    main()
