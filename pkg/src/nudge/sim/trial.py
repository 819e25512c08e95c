"""Randomized None / Nudge-LT / Nudge-FULL trial over a simulated repository.

The clock advances event by event.  Every ``scan_interval_hours`` the nudge
engine scans the PRs of each nudge arm in its mode.  A notification reaches
the mentioned developers; each one pays attention with probability
``1 / len(mentioned)`` (a broadcast to everyone is easy to ignore), and an
attentive developer scales all of their remaining delays on that PR by
``nudge_response_factor``.  A notification sent while the PR is busy is
ignored and marked WontFix.
"""
from __future__ import annotations

import enum
import hashlib
import heapq
from dataclasses import dataclass, field
from datetime import datetime, timedelta

import numpy as np

from ..activity import is_quiet
from ..calendar import business_hours_between
from ..domain import PrState, lifetime_hours
from ..engine import ModelPolicy, NudgeEngine, Outcome, ScanMode, train_global_model
from ..errors import ConfigInvalid
from ..features import refresh_cache
from ..models.base import ModelConfig, TrainedModel
from ..models.registry import ModelRegistry
from ..store import Corpus, NotificationLedger, Resolution
from .config import ARM_NAMES, SimConfig
from .generator import HISTORY, TRIAL, PrPlan, advance, create_events, generate_corpus, plan_tranche, profile_for, step_events
from .report import ArmSummary, TrialReport, bucket_completions, resolution_stats


class TrialArm(str, enum.Enum):
    NONE = "None"
    NUDGE_LT = "NudgeLT"
    NUDGE_FULL = "NudgeFULL"


ARM_MODE = {TrialArm.NUDGE_LT: ScanMode.LT, TrialArm.NUDGE_FULL: ScanMode.FULL}


def assign_arm(pr_id: str, seed: int, probabilities) -> TrialArm:
    """Arm from a hash of (seed, PR id) only, never from PR content."""
    digest = hashlib.blake2b(f"{seed}:{pr_id}".encode(), digest_size=8).digest()
    u = int.from_bytes(digest, "big") / 2 ** 64
    acc = 0.0
    for name in ARM_NAMES:
        acc += probabilities.get(name, 0.0)
        if u < acc:
            return TrialArm(name)
    return TrialArm(max((n for n in ARM_NAMES if probabilities.get(n, 0) > 0), key=ARM_NAMES.index))


@dataclass
class PrRun:
    plan: PrPlan
    arm: TrialArm
    step: int = 0
    due: datetime | None = None
    version: int = 0
    sped_up: set = field(default_factory=set)
    closed_at: datetime | None = None


def train_history_model(config: SimConfig) -> tuple[TrainedModel, Corpus]:
    """Fit the lifetime model on an un-nudged historical tranche ending at ``config.start``."""
    history = Corpus()
    by_repo: dict[str, list] = {}
    for ev in generate_corpus(config, HISTORY):
        by_repo.setdefault(ev.repo_id, []).append(ev)
    for repo_id in sorted(by_repo):
        history.repo(repo_id).add_events(by_repo[repo_id])
    policy = ModelPolicy(backend=config.model_backend)
    model = train_global_model(history, config.start, policy, ModelConfig(n_estimators=config.n_estimators),
                               config.timezone)
    return model, history


@dataclass
class TrialResult:
    report: TrialReport
    corpus: Corpus
    ledger: NotificationLedger
    arms: dict[str, TrialArm]
    decisions: list = field(default_factory=list)


class _Trial:
    def __init__(self, config: SimConfig, model: TrainedModel, history: Corpus):
        self.config = config
        self.tz = config.timezone
        self.corpus = Corpus()
        self.caches = {r.repo_id: refresh_cache(r, config.start, 2, self.tz) for r in history}
        self.engine = NudgeEngine(
            registry=ModelRegistry(global_model=model),
            policy=ModelPolicy(repo_min_training_size=10 ** 9),
            quiet_hours=config.quiet_hours,
            tz=self.tz,
            cache_provider=self._cache,
        )
        self.runs = [PrRun(p, assign_arm(p.pr_id, config.seed, config.arms)) for p in plan_tranche(config, TRIAL)]
        self.by_id = {r.plan.pr_id: r for r in self.runs}
        self.heap: list = []
        self.seq = 0
        self.decisions: list = []

    def _cache(self, repo, as_of):
        cache = self.caches.get(repo.repo_id)
        if cache is None:
            cache = self.caches[repo.repo_id] = refresh_cache(repo, self.config.start, 2, self.tz)
        return cache

    def _push(self, at: datetime, order: int, kind: str, idx: int, version: int = 0) -> None:
        self.seq += 1
        heapq.heappush(self.heap, (at, order, self.seq, kind, idx, version))

    def _schedule(self, run: PrRun, start: datetime) -> None:
        step = run.plan.steps[run.step]
        hours = step.delay_hours
        if step.actor in run.sped_up:
            hours *= profile_for(self.config, run.plan, step).nudge_response_factor
        run.due = advance(start, hours, profile_for(self.config, run.plan, step), self.tz)
        run.version += 1
        self._push(run.due, 0, "step", run.plan.index, run.version)

    def _apply(self, events) -> None:
        self.corpus.repo(events[0].repo_id).add_events(events)

    def _on_create(self, run: PrRun) -> None:
        self._apply(create_events(run.plan))
        self._schedule(run, run.plan.created_at)

    def _on_step(self, run: PrRun, at: datetime) -> None:
        step = run.plan.steps[run.step]
        self._apply(step_events(run.plan, step, at))
        run.step += 1
        if step.action in ("merge", "abandon"):
            run.closed_at = at
            run.due = None
        else:
            self._schedule(run, at)

    def _on_notified(self, decision, now: datetime) -> None:
        run = self.by_id[decision.pr_id]
        pr = self.corpus.repo(run.plan.repo_id).prs[run.plan.pr_id]
        ledger = self.engine.ledger
        rng = np.random.default_rng([self.config.seed, 3, run.plan.index])
        if not is_quiet(pr, now, self.config.quiet_hours):
            ledger.resolve(pr.id, Resolution.WONT_FIX)
            return
        mentioned = decision.mentioned_actors
        attentive = {a for a in mentioned if rng.random() < 1 / len(mentioned)}
        step = run.plan.steps[run.step]
        run.sped_up |= attentive
        if step.actor not in attentive:
            ledger.resolve(pr.id, Resolution.WONT_FIX if attentive else Resolution.NO_RESPONSE)
            return
        profile = profile_for(self.config, run.plan, step)
        if profile.nudge_response_factor < 1 and run.due is not None and run.due > now:
            if profile.weekend_inactive:
                remaining = business_hours_between(now, run.due, self.tz)
            else:
                remaining = (run.due - now) / timedelta(hours=1)
            new_due = min(run.due, advance(now, remaining * profile.nudge_response_factor, profile, self.tz))
            run.due = new_due
            run.version += 1
            self._push(new_due, 0, "step", run.plan.index, run.version)
        overdue_h = (now - decision.due_at) / timedelta(hours=1)
        overdue = min(1.0, max(0.0, overdue_h / max(decision.predicted_lifetime_hours, 1.0)))
        resolved = rng.random() < 0.5 + 0.45 * overdue
        ledger.resolve(pr.id, Resolution.RESOLVED if resolved else Resolution.NO_RESPONSE)

    def _scan(self, now: datetime) -> None:
        for arm, mode in ARM_MODE.items():
            decisions = self.engine.scan(self.corpus, now, mode, pr_filter=lambda pr, a=arm: self.by_id[pr.id].arm is a)
            for d in decisions:
                if d.outcome is Outcome.NOTIFIED:
                    self.decisions.append(d)
                    self._on_notified(d, now)

    def run(self) -> TrialResult:
        cfg = self.config
        horizon = cfg.start + timedelta(days=cfg.span_days + cfg.tail_days)
        for run in self.runs:
            self._push(run.plan.created_at, 0, "create", run.plan.index)
        t = cfg.start
        while t <= horizon:
            self._push(t, 1, "scan", -1)
            t += timedelta(hours=cfg.scan_interval_hours)
        while self.heap:
            at, _, _, kind, idx, version = heapq.heappop(self.heap)
            if at > horizon:
                break
            if kind == "scan":
                self._scan(at)
                continue
            run = self.runs[idx]
            if kind == "create":
                self._on_create(run)
            elif version == run.version and run.closed_at is None:
                self._on_step(run, at)
        return TrialResult(self._report(), self.corpus, self.engine.ledger,
                           {r.plan.pr_id: r.arm for r in self.runs}, self.decisions)

    def _report(self) -> TrialReport:
        arms = []
        lifetimes = {}
        ledger = self.engine.ledger
        for arm in TrialArm:
            hours = []
            for run in self.runs:
                if run.arm is not arm:
                    continue
                pr = self.corpus.repo(run.plan.repo_id).prs.get(run.plan.pr_id)
                if pr is not None and pr.state is PrState.MERGED:
                    hours.append(lifetime_hours(pr, pr.closed_at, self.tz))
            arm_ledger = NotificationLedger({k: e for k, e in ledger.entries.items() if self.by_id[k].arm is arm})
            lifetimes[arm.value] = tuple(hours)
            arms.append(ArmSummary(
                arm=arm.value,
                avg_lifetime_hours=float(np.mean(hours)) if hours else 0.0,
                pr_count=len(hours),
                notified=len(arm_ledger),
                buckets=bucket_completions(arm_ledger, self.corpus),
                resolutions=resolution_stats(arm_ledger),
            ))
        return TrialReport(tuple(arms), lifetimes=lifetimes)


def run_trial(config: SimConfig, model: TrainedModel | None = None, history: Corpus | None = None) -> TrialResult:
    """Simulate the trial; trains on a historical tranche first unless ``model`` is given."""
    if not isinstance(config, SimConfig):
        raise ConfigInvalid("run_trial needs a SimConfig")
    if model is None or history is None:
        model, history = train_history_model(config)
    return _Trial(config, model, history).run()


def ks_pvalues(report: TrialReport) -> dict[tuple[str, str], float]:
    """Two-sample Kolmogorov-Smirnov p-values between every pair of arms."""
    from scipy.stats import ks_2samp

    names = [a.arm for a in report.arms]
    out = {}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            x, y = report.lifetimes.get(a, ()), report.lifetimes.get(b, ())
            out[(a, b)] = float(ks_2samp(x, y).pvalue) if len(x) and len(y) else float("nan")
    return out
