"""The periodic nudge workflow: predict, gate, identify, notify once."""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Callable, Iterable

import numpy as np

from .activity import DEFAULT_QUIET_HOURS, is_quiet
from .actors import BlockerVerdict, identify
from .domain import PullRequestRecord
from .errors import ConfigInvalid, NudgeError, SchemaMismatch, UnknownPr
from .events import format_timestamp, parse_timestamp
from .features import ALL_FEATURES, AggregateCache, FeatureVector, build_training_set, extract, refresh_cache
from .models.base import Backend, ModelConfig, TrainedModel, fit, predict
from .models.registry import ModelRegistry
from .store import Corpus, LedgerEntry, NotificationLedger, Prediction, RepoCorpus, Resolution, training_window

log = logging.getLogger(__name__)

NOTIFY_GRACE = timedelta(hours=24)


class Outcome(str, enum.Enum):
    PREDICTED_ONLY = "PredictedOnly"
    SUPPRESSED_ACTIVITY = "SuppressedActivity"
    SUPPRESSED_ALREADY_NOTIFIED = "SuppressedAlreadyNotified"
    SUPPRESSED_NOT_DUE = "SuppressedNotDue"
    NOTIFIED = "Notified"


class ScanMode(str, enum.Enum):
    LT = "lt"
    FULL = "full"


@dataclass(frozen=True)
class ModelPolicy:
    repo_min_training_size: int = 1000
    retrain_interval: timedelta = timedelta(days=7)
    window_years: float = 2
    backend: Backend = Backend.GRADIENT_BOOSTING

    def __post_init__(self):
        if self.repo_min_training_size <= 0 or self.window_years <= 0:
            raise ConfigInvalid("policy sizes must be positive")
        if self.retrain_interval <= timedelta(0):
            raise ConfigInvalid("retrain_interval must be positive")


@dataclass(frozen=True)
class NotificationMessage:
    pr_id: str
    mentioned_actors: tuple[str, ...]
    body: str
    created_at: datetime

    @classmethod
    def render(cls, pr: PullRequestRecord, actors: Iterable[str], now: datetime) -> "NotificationMessage":
        actors = tuple(actors)
        days = max(0, math.floor((now - pr.created_at) / timedelta(days=1)))
        unit = "day" if days == 1 else "days"
        mentions = " ".join(f"@{a}" for a in actors)
        body = f"{mentions} This pull request has been open for {days} {unit}. Please take appropriate action."
        return cls(pr.id, actors, body, now)


@dataclass(frozen=True)
class NudgeDecision:
    pr_id: str
    at: datetime
    outcome: Outcome
    predicted_lifetime_hours: float
    due_at: datetime
    verdict: BlockerVerdict | None = None
    message: NotificationMessage | None = None
    repo_id: str = ""
    mode: ScanMode = ScanMode.FULL

    @property
    def mentioned_actors(self) -> tuple[str, ...]:
        return self.message.mentioned_actors if self.message else ()

    def to_dict(self) -> dict:
        return {
            "pr_id": self.pr_id,
            "repo_id": self.repo_id,
            "at": format_timestamp(self.at),
            "outcome": self.outcome.value,
            "mode": self.mode.value,
            "predicted_lifetime_hours": self.predicted_lifetime_hours,
            "due_at": format_timestamp(self.due_at),
            "verdict": self.verdict.to_dict() if self.verdict else None,
            "mentioned_actors": list(self.mentioned_actors),
            "body": self.message.body if self.message else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NudgeDecision":
        at = parse_timestamp(data["at"])
        message = None
        if data.get("body") is not None:
            message = NotificationMessage(data["pr_id"], tuple(data["mentioned_actors"]), data["body"], at)
        verdict = data.get("verdict")
        return cls(
            pr_id=data["pr_id"],
            at=at,
            outcome=Outcome(data["outcome"]),
            predicted_lifetime_hours=float(data["predicted_lifetime_hours"]),
            due_at=parse_timestamp(data["due_at"]),
            verdict=BlockerVerdict.from_dict(verdict) if verdict else None,
            message=message,
            repo_id=data.get("repo_id", ""),
            mode=ScanMode(data.get("mode", "full")),
        )


def due_at(created_at: datetime, predicted_hours: float) -> datetime:
    """Notification-due instant: creation + predicted lifetime + 24 hours."""
    return created_at + timedelta(hours=predicted_hours) + NOTIFY_GRACE


def feature_vector_for(
    model: TrainedModel, pr_id: str, repo: RepoCorpus, cache: AggregateCache, as_of: datetime, tz=None
) -> FeatureVector:
    """Extract exactly the features ``model`` was trained on, in its order."""
    full = extract(pr_id, repo, cache, as_of, tz, retained_only=False)
    try:
        idx = [ALL_FEATURES.index(n) for n in model.feature_schema]
    except ValueError:
        raise SchemaMismatch(f"model expects unknown features {model.feature_schema}") from None
    return FeatureVector(
        pr_id, as_of,
        tuple(full.values[i] for i in idx), tuple(full.missing_mask[i] for i in idx), model.feature_schema,
    )


# --- model scope ------------------------------------------------------------------

def _window_size(repo: RepoCorpus, as_of: datetime, policy: ModelPolicy, tz=None) -> int:
    return len(training_window(repo, as_of, policy.window_years, tz))


def qualifies_for_repo_model(repo: RepoCorpus, as_of: datetime, policy: ModelPolicy, tz=None) -> bool:
    if len(repo.prs) < policy.repo_min_training_size:
        return False
    return _window_size(repo, as_of, policy, tz) >= policy.repo_min_training_size


def train_repo_model(
    repo: RepoCorpus, as_of: datetime, policy: ModelPolicy, config: ModelConfig | None = None, tz=None
) -> TrainedModel:
    ts = build_training_set(repo, as_of, policy.window_years, tz)
    window = (as_of - timedelta(days=365 * policy.window_years), as_of)
    return fit(policy.backend, ts.X, ts.y, config, ts.names, as_of, window, scope=f"repo:{repo.repo_id}")


def train_global_model(
    corpus: Corpus, as_of: datetime, policy: ModelPolicy, config: ModelConfig | None = None, tz=None
) -> TrainedModel:
    """One model over the training rows of every repository."""
    sets = [build_training_set(repo, as_of, policy.window_years, tz) for repo in corpus]
    sets = [s for s in sets if len(s)]
    if not sets:
        X, y, names = np.empty((0, 0)), np.empty(0), ()
    else:
        X = np.vstack([s.X for s in sets])
        y = np.concatenate([s.y for s in sets])
        names = sets[0].names
    window = (as_of - timedelta(days=365 * policy.window_years), as_of)
    return fit(policy.backend, X, y, config, names or None, as_of, window, scope="global")


def train_registry(
    corpus: Corpus, as_of: datetime, policy: ModelPolicy | None = None, config: ModelConfig | None = None, tz=None
) -> ModelRegistry:
    policy = policy or ModelPolicy()
    registry = ModelRegistry(global_model=train_global_model(corpus, as_of, policy, config, tz))
    for repo in corpus:
        if qualifies_for_repo_model(repo, as_of, policy, tz):
            registry.repo_models[repo.repo_id] = train_repo_model(repo, as_of, policy, config, tz)
    return registry


def select_model(
    repo_id: str,
    corpus: Corpus,
    registry: ModelRegistry,
    policy: ModelPolicy | None = None,
    as_of: datetime | None = None,
    config: ModelConfig | None = None,
    tz=None,
) -> TrainedModel:
    """Repository-specific model when the repo has enough training rows, else the global one.

    A qualifying repository without a registered model gets one trained on the
    spot and stored in ``registry``.
    """
    policy = policy or ModelPolicy()
    repo = corpus.repos.get(repo_id)
    if repo is not None and as_of is not None and qualifies_for_repo_model(repo, as_of, policy, tz):
        if repo_id not in registry.repo_models:
            registry.repo_models[repo_id] = train_repo_model(repo, as_of, policy, config, tz)
        return registry.repo_models[repo_id]
    if as_of is None and repo_id in registry.repo_models:
        return registry.repo_models[repo_id]
    if registry.global_model is None:
        raise NudgeError(f"no model available for repository {repo_id}")
    return registry.global_model


# --- ledger helpers ---------------------------------------------------------------

def record_resolution(ledger: NotificationLedger, pr_id: str, resolution: Resolution | str) -> NotificationLedger:
    ledger.resolve(pr_id, Resolution(resolution))
    return ledger


def comment_resolution_percentage(ledger: NotificationLedger) -> float:
    """Resolved notifications over all notifications (a fraction; 0 when empty)."""
    if not len(ledger):
        return 0.0
    resolved = sum(1 for e in ledger.entries.values() if e.resolution is Resolution.RESOLVED)
    return resolved / len(ledger)


# --- the engine -------------------------------------------------------------------

CacheProvider = Callable[[RepoCorpus, datetime], AggregateCache]


@dataclass
class NudgeEngine:
    """Holds the state a scan reads and writes: models, predictions, and the ledger."""

    registry: ModelRegistry
    ledger: NotificationLedger = field(default_factory=NotificationLedger)
    predictions: dict[str, Prediction] = field(default_factory=dict)
    policy: ModelPolicy = field(default_factory=ModelPolicy)
    quiet_hours: float = DEFAULT_QUIET_HOURS
    tz: object = None
    cache_provider: CacheProvider | None = None
    notify: bool = True

    def _cache(self, repo: RepoCorpus, as_of: datetime, memo: dict) -> AggregateCache:
        key = (repo.repo_id, as_of)
        if key not in memo:
            if self.cache_provider is not None:
                memo[key] = self.cache_provider(repo, as_of)
            else:
                memo[key] = refresh_cache(repo, as_of, self.policy.window_years, self.tz)
        return memo[key]

    def _model(self, repo_id: str, corpus: Corpus, as_of: datetime, memo: dict) -> TrainedModel:
        key = ("model", repo_id, as_of)
        if key not in memo:
            memo[key] = select_model(repo_id, corpus, self.registry, self.policy, as_of, tz=self.tz)
        return memo[key]

    def refresh_prediction(
        self, pr: PullRequestRecord, corpus: Corpus, as_of: datetime, memo: dict | None = None
    ) -> Prediction:
        """Re-infer Tp for ``pr`` from what is known at ``as_of``."""
        memo = {} if memo is None else memo
        repo = corpus.repo(pr.repo_id)
        model = self._model(pr.repo_id, corpus, as_of, memo)
        fv = feature_vector_for(model, pr.id, repo, self._cache(repo, as_of, memo), as_of, self.tz)
        hours = predict(model, fv)
        pred = Prediction(pr.id, pr.repo_id, hours, due_at(pr.created_at, hours), as_of, model.scope)
        self.predictions[pr.id] = pred
        return pred

    def current_prediction(self, pr: PullRequestRecord, corpus: Corpus, now: datetime, memo: dict) -> Prediction:
        """Cached Tp, recomputed only when the PR changed since it was made."""
        pred = self.predictions.get(pr.id)
        stale = (
            pred is None
            or pred.as_of > now
            or (pr.last_event_at is not None and pr.last_event_at > pred.as_of)
        )
        if stale:
            pred = self.refresh_prediction(pr, corpus, now, memo)
        return pred

    def on_pr_updated(self, pr: PullRequestRecord | str, corpus: Corpus, at: datetime | None = None) -> Prediction:
        """Recompute the prediction at the update instant; the ledger is not touched."""
        if isinstance(pr, str):
            found = corpus.find_pr(pr)
            if found is None:
                raise UnknownPr(f"PR {pr} not found")
            pr = found[1]
        at = at or pr.last_event_at or pr.created_at
        return self.refresh_prediction(pr, corpus, at)

    def evaluate_pr(
        self, pr: PullRequestRecord, corpus: Corpus, now: datetime, mode: ScanMode, memo: dict
    ) -> NudgeDecision:
        pred = self.current_prediction(pr, corpus, now, memo)
        base = dict(pr_id=pr.id, at=now, predicted_lifetime_hours=pred.predicted_hours,
                    due_at=pred.due_at, repo_id=pr.repo_id, mode=mode)
        if now < pred.due_at:
            return NudgeDecision(outcome=Outcome.SUPPRESSED_NOT_DUE, **base)
        if pr.id in self.ledger:
            return NudgeDecision(outcome=Outcome.SUPPRESSED_ALREADY_NOTIFIED, **base)
        if mode is ScanMode.FULL:
            if not is_quiet(pr, now, self.quiet_hours):
                return NudgeDecision(outcome=Outcome.SUPPRESSED_ACTIVITY, **base)
            verdict = identify(pr)
            actors = verdict.actors
        else:
            verdict = None
            actors = (pr.author.id, *(r for r in pr.reviewer_ids if r != pr.author.id))
        message = NotificationMessage.render(pr, actors, now)
        if not self.notify:
            return NudgeDecision(outcome=Outcome.PREDICTED_ONLY, verdict=verdict, message=message, **base)
        self.ledger.add(LedgerEntry(pr.id, now, actors, repo_id=pr.repo_id, mode=mode.value))
        return NudgeDecision(outcome=Outcome.NOTIFIED, verdict=verdict, message=message, **base)

    def scan(
        self,
        corpus: Corpus,
        now: datetime,
        mode: ScanMode | str = ScanMode.FULL,
        pr_filter: Callable[[PullRequestRecord], bool] | None = None,
    ) -> list[NudgeDecision]:
        """Evaluate every non-terminal PR (in repo, then id order) at ``now``."""
        mode = ScanMode(mode)
        memo: dict = {}
        decisions = []
        for repo in corpus:
            for pr_id in sorted(repo.prs):
                pr = repo.prs[pr_id]
                if pr.created_at > now:
                    continue
                if pr.last_event_at is not None and pr.last_event_at > now:
                    pr = repo.pr_as_of(pr_id, now)
                if pr is None or pr.is_terminal:
                    continue
                if pr_filter is not None and not pr_filter(pr):
                    continue
                try:
                    decisions.append(self.evaluate_pr(pr, corpus, now, mode, memo))
                except (NudgeError, ValueError) as exc:
                    log.warning("scan skipped PR %s: %s", pr_id, exc)
        return decisions


def scan(
    corpus: Corpus,
    models: ModelRegistry | TrainedModel,
    ledger: NotificationLedger,
    now: datetime,
    mode: ScanMode | str = ScanMode.FULL,
    predictions: dict[str, Prediction] | None = None,
    policy: ModelPolicy | None = None,
    quiet_hours: float = DEFAULT_QUIET_HOURS,
    tz=None,
) -> list[NudgeDecision]:
    """Functional front end to :meth:`NudgeEngine.scan`; mutates ``ledger`` and ``predictions``."""
    registry = models if isinstance(models, ModelRegistry) else ModelRegistry(global_model=models)
    engine = NudgeEngine(
        registry, ledger, predictions if predictions is not None else {},
        policy or ModelPolicy(), quiet_hours, tz,
    )
    return engine.scan(corpus, now, mode)
