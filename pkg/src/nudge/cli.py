"""Command-line entry point: ``nudge <subcommand>``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .engine import ModelPolicy, NudgeEngine, Outcome, ScanMode, comment_resolution_percentage, train_registry
from .errors import NudgeError
from .events import parse_timestamp
from .features import build_training_set, correlation_report
from .models.base import Backend, ModelConfig, improvement_vs_constant
from .models.evaluation import cross_validate
from .persistence import SNAPSHOT_FILE, StoreState, append_decisions, load, persist
from .store import Resolution, ingest


def _load_or_new(store: Path) -> StoreState:
    return load(store) if (store / SNAPSHOT_FILE).exists() else StoreState()


def _timestamp(text: str | None) -> datetime:
    return parse_timestamp(text) if text else datetime.now(timezone.utc).replace(microsecond=0)


def cmd_ingest(args) -> int:
    state = _load_or_new(args.store)
    total = dict(new=0, dup=0, errors=0)
    for path in args.events:
        delta = ingest(state.corpus, path, strict=not args.lenient)
        total["new"] += delta.new_events
        total["dup"] += delta.duplicates
        total["errors"] += len(delta.errors)
        for err in delta.errors:
            print(f"{path}: {err}", file=sys.stderr)
    persist(state, args.store)
    print(f"ingested {total['new']} events ({total['dup']} duplicates, {total['errors']} rejected)")
    return 0


def cmd_train(args) -> int:
    state = load(args.store)
    as_of = _timestamp(args.as_of)
    policy = ModelPolicy(repo_min_training_size=args.repo_min, window_years=args.window_years,
                         backend=Backend(args.backend))
    config = ModelConfig(n_estimators=args.n_estimators)
    sets = [build_training_set(r, as_of, args.window_years, args.tz) for r in state.corpus]
    sets = [s for s in sets if len(s)]
    if args.evaluate and sets:
        X = np.vstack([s.X for s in sets])
        y = np.concatenate([s.y for s in sets])
        baseline = cross_validate(Backend.CONSTANT_MEAN, X, y, args.k, args.seed, config)
        print(f"{'backend':<18} {'MAE (h)':>9} {'MAPE':>7} {'MAE gain %':>11} {'MAPE gain %':>12}")
        for backend in Backend:
            m = baseline if backend is Backend.CONSTANT_MEAN else cross_validate(backend, X, y, args.k, args.seed, config)
            g_mae, g_mape = improvement_vs_constant(m, baseline)
            print(f"{backend.value:<18} {m.mae_hours:9.2f} {m.mape:7.3f} {g_mae:11.1f} {g_mape:12.1f}")
        if args.correlations:
            for row in correlation_report(X, y, sets[0].names):
                print(f"  {row.name:<28} {row.correlation:+.4f}")
    state.registry = train_registry(state.corpus, as_of, policy, config, args.tz)
    persist(state, args.store)
    scopes = [name for name, _ in state.registry.items()]
    print(f"trained {args.backend} models: {', '.join(scopes)}")
    return 0


def cmd_scan(args) -> int:
    state = load(args.store)
    if state.registry.global_model is None:
        print("no trained model in store; run `train` first", file=sys.stderr)
        return 2
    engine = NudgeEngine(state.registry, state.ledger, state.predictions,
                         ModelPolicy(repo_min_training_size=args.repo_min), args.quiet_hours, args.tz)
    decisions = engine.scan(state.corpus, _timestamp(args.now), ScanMode(args.mode))
    append_decisions(args.store, decisions)
    persist(state, args.store)
    counts = {o: 0 for o in Outcome}
    for d in decisions:
        counts[d.outcome] += 1
        if d.outcome is Outcome.NOTIFIED:
            print(f"{d.pr_id}: {d.message.body}")
    print(", ".join(f"{o.value}={n}" for o, n in counts.items()))
    return 0


def cmd_resolve(args) -> int:
    state = load(args.store)
    state.ledger.resolve(args.pr_id, Resolution(args.resolution))
    persist(state, args.store)
    return 0


def cmd_report(args) -> int:
    from .sim.report import bucket_completions, bucket_percentages, resolution_stats

    state = load(args.store)
    stats = resolution_stats(state.ledger)
    buckets = bucket_completions(state.ledger, state.corpus)
    pct = bucket_percentages(buckets)
    print(f"notifications: {len(state.ledger)}")
    print(f"comment resolution percentage: {comment_resolution_percentage(state.ledger) * 100:.2f}%")
    print(f"positive={stats.positive} negative={stats.negative} no_response={stats.none}")
    for name, n in buckets.items():
        print(f"  closed {name:<9} after notification: {n:5d} ({pct[name]:.2f}%)")
    return 0


def cmd_simulate(args) -> int:
    from .events import dump_events
    from .sim.config import SimConfig, load_config
    from .sim.report import emit_report, render_text
    from .sim.trial import ks_pvalues, run_trial

    config = load_config(args.config) if args.config else SimConfig()
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    if args.factor is not None:
        config = config.with_factor(args.factor)
    result = run_trial(config)
    out = Path(args.out)
    paths = emit_report(result.report, out, svg=not args.no_svg)
    (out / "events.jsonl").write_text(dump_events(result.corpus.all_events()), encoding="utf-8")
    (out / "ks.json").write_text(
        json.dumps({f"{a}|{b}": p for (a, b), p in ks_pvalues(result.report).items()}, indent=1) + "\n",
        encoding="utf-8",
    )
    print(render_text(result.report))
    print("wrote " + ", ".join(str(p) for p in paths))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nudge", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def store_arg(p):
        p.add_argument("--store", type=Path, required=True, help="store directory")
        p.add_argument("--tz", default=None, help="timezone for weekend exclusion (default UTC)")

    p = sub.add_parser("ingest", help="append JSONL event logs to a store")
    store_arg(p)
    p.add_argument("events", nargs="+", type=Path)
    p.add_argument("--lenient", action="store_true", help="skip bad lines instead of failing")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train lifetime models from the store")
    store_arg(p)
    p.add_argument("--backend", default=Backend.GRADIENT_BOOSTING.value, choices=[b.value for b in Backend])
    p.add_argument("--k", type=int, default=10, help="cross-validation folds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--window-years", type=float, default=2)
    p.add_argument("--as-of", default=None, help="training cut-off (RFC 3339, default now)")
    p.add_argument("--n-estimators", type=int, default=100)
    p.add_argument("--repo-min", type=int, default=1000, help="rows needed for a repo-specific model")
    p.add_argument("--evaluate", action="store_true", help="print k-fold MAE/MAPE for every backend")
    p.add_argument("--correlations", action="store_true", help="with --evaluate, print feature correlations")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("nudge-scan", help="run one scan and record notifications")
    store_arg(p)
    p.add_argument("--now", default=None, help="scan instant (RFC 3339, default now)")
    p.add_argument("--mode", choices=[m.value for m in ScanMode], default=ScanMode.FULL.value)
    p.add_argument("--quiet-hours", type=float, default=24.0)
    p.add_argument("--repo-min", type=int, default=1000)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("resolve", help="record how a notification was resolved")
    store_arg(p)
    p.add_argument("pr_id")
    p.add_argument("resolution", choices=[r.value for r in Resolution if r is not Resolution.PENDING])
    p.set_defaults(func=cmd_resolve)

    p = sub.add_parser("report", help="summarize notifications in a store")
    store_arg(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("simulate", help="run a simulated None / Nudge-LT / Nudge-FULL trial")
    p.add_argument("--config", type=Path, default=None, help="TOML configuration")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--factor", type=float, default=None, help="override nudge_response_factor")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--no-svg", action="store_true")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except NudgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
