"""Synthetic repositories: developers, PR plans, and their event streams.

Each PR is planned up front from its own random stream (seed, tranche, index),
so a plan never depends on what happened to other PRs.  A plan is a list of
steps; each step is one actor acting after a log-normal business-hour delay.
A PR with R review rounds runs::

    reviewer comments -> author revises -> ... -> reviewer approves -> author merges

with the last reviewer step being an approval vote.  Every delay is scaled by
a per-PR complexity multiplier tied to churn and project path, and by the
acting developer's speed, so lifetimes are learnable from PR features.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Iterator

import numpy as np

from ..calendar import add_business_hours
from ..events import EventKind, EventRecord, format_timestamp
from .config import AgentProfile, SimConfig

HISTORY = 0
TRIAL = 1
BOT_ID = "BuildBot"
MIN_STEP_HOURS = 1 / 60

AREAS = ("api", "core", "storage", "ui", "auth", "build", "docs", "net", "jobs", "infra")
EXTENSIONS = (".cs", ".cs", ".cs", ".ts", ".py", ".json", ".config", ".csproj", ".md", ".xml")
TITLES = (
    ("Fix crash in {area} handler", "bug"),
    ("Fix bug in {area} retry loop", "bug"),
    ("Add {area} caching feature", "feature"),
    ("Implement {area} pagination", "feature"),
    ("Refactor {area} module", "refactor"),
    ("Cleanup unused {area} helpers", "refactor"),
    ("Deprecate old {area} endpoint", "deprecation"),
    ("Merge release branch into {area}", "merge"),
    ("Update {area} settings", "other"),
    ("Tune {area} timeouts", "other"),
)


@dataclass(frozen=True)
class Developer:
    id: str
    speed: float
    team_joined_at: datetime
    company_joined_at: datetime


@dataclass(frozen=True)
class Step:
    actor: str
    action: str  # comment | approve | revise | merge | abandon
    delay_hours: float
    round: int


@dataclass(frozen=True)
class PrPlan:
    index: int
    pr_id: str
    repo_id: str
    author: str
    reviewers: tuple[str, ...]
    created_at: datetime
    create_payload: dict
    bot_comment: bool
    steps: tuple[Step, ...]
    revise_payloads: tuple[dict, ...]

    @property
    def planned_hours(self) -> float:
        return sum(s.delay_hours for s in self.steps)


def _lognormal_mean_one(rng: np.random.Generator, sigma: float, size=None):
    return rng.lognormal(-sigma ** 2 / 2, sigma, size)


def developers(config: SimConfig) -> list[Developer]:
    rng = np.random.default_rng([config.seed, 7, 0])
    speeds = _lognormal_mean_one(rng, config.speed_sigma, config.n_developers)
    speeds = speeds / speeds.mean()
    out = []
    for i in range(config.n_developers):
        speed = float(speeds[i])
        company_days = float(rng.uniform(30, 3000))
        team_days = float(rng.uniform(10, company_days))
        out.append(Developer(
            f"dev{i:03d}", speed,
            team_joined_at=(config.start - timedelta(days=team_days)).replace(microsecond=0),
            company_joined_at=(config.start - timedelta(days=company_days)).replace(microsecond=0),
        ))
    return out


def path_effects(config: SimConfig) -> dict[str, float]:
    """Fixed log-scale slowness per project path, standardized across paths."""
    rng = np.random.default_rng([config.seed, 7, 1])
    raw = rng.normal(size=len(AREAS))
    raw = (raw - raw.mean()) / raw.std()
    return {area: float(v) for area, v in zip(AREAS, raw)}


def creation_times(config: SimConfig, tranche: int) -> list[datetime]:
    n = config.n_history_prs if tranche == HISTORY else config.n_prs
    rng = np.random.default_rng([config.seed, tranche, 2 ** 31])
    if tranche == HISTORY:
        begin = config.start - timedelta(days=config.history_span_days + config.tail_days)
        span = config.history_span_days
    else:
        begin, span = config.start, config.span_days
    offsets = np.sort(rng.uniform(0, span * 24, n))
    return [(begin + timedelta(hours=float(h))).replace(microsecond=0) for h in offsets]


STALL_SIGMA = 0.5


def _delay(rng: np.random.Generator, profile: AgentProfile, scale: float) -> float:
    hours = float(rng.lognormal(profile.mu, profile.sigma)) * scale
    if rng.random() < profile.stall_probability:
        hours *= float(rng.lognormal(np.log(profile.stall_multiplier) - STALL_SIGMA ** 2 / 2, STALL_SIGMA))
    return hours


def _churn(rng: np.random.Generator, n_files: int) -> dict:
    total = int(max(1, round(rng.lognormal(4.5, 1.1))))
    lines = int(rng.integers(max(1, total // 3), total + 1))
    classes = int(max(1, min(n_files * 2, rng.poisson(1 + total / 150))))
    return {
        "total_churn_lines": total,
        "lines_changed": lines,
        "methods_churned": int(rng.poisson(1 + total / 40)),
        "classes_touched": classes,
        "conditionals_touched": int(rng.poisson(total / 60)),
        "loops_touched": int(rng.poisson(total / 200)),
        "references_changed": int(rng.poisson(0.5)),
    }


def _files(rng: np.random.Generator, areas: list[str], n_files: int) -> list[str]:
    files = set()
    while len(files) < n_files:
        area = areas[int(rng.integers(len(areas)))]
        ext = EXTENSIONS[int(rng.integers(len(EXTENSIONS)))]
        files.add(f"src/{area}/file{int(rng.integers(200))}{ext}")
    return sorted(files)


def plan_pr(
    config: SimConfig,
    tranche: int,
    index: int,
    created_at: datetime,
    devs: list[Developer],
    paths: dict[str, float],
) -> PrPlan:
    rng = np.random.default_rng([config.seed, tranche, index])
    repo_id = f"repo{int(rng.integers(config.n_repos))}"
    author_i = int(rng.integers(len(devs)))
    n_rev = int(rng.choice([1, 2, 3], p=[0.4, 0.4, 0.2]))
    others = [i for i in range(len(devs)) if i != author_i]
    reviewer_is = [others[int(j)] for j in rng.choice(len(others), size=n_rev, replace=False)]
    author = devs[author_i]
    reviewers = [devs[i] for i in reviewer_is]

    n_areas = 1 + int(rng.binomial(2, 0.3))
    areas = sorted({AREAS[int(rng.integers(len(AREAS)))] for _ in range(n_areas)})
    n_files = int(rng.geometric(0.3))
    files = _files(rng, areas, n_files)
    churn = _churn(rng, n_files)
    template, _ = TITLES[int(rng.integers(len(TITLES)))]
    title = template.format(area=areas[0])
    description = " ".join(["change"] * int(rng.integers(0, 60)))

    # log complexity: churn size, path slowness, reviewer count, and noise
    z_churn = (math.log(churn["total_churn_lines"]) - 4.5) / 1.1
    z_path = sum(paths[a] for a in areas) / math.sqrt(len(areas))
    z_rev = (n_rev - 1.8) / 0.75
    z = (0.6 * z_churn + 0.5 * z_path + 0.3 * z_rev + 0.55 * float(rng.normal())) / math.sqrt(0.36 + 0.25 + 0.09 + 0.3025)
    s = config.complexity_sigma
    complexity = math.exp(s * z - s * s / 2)

    rounds = 1 + int(rng.choice(len(config.round_probabilities), p=config.round_probabilities))
    first_reviewer = reviewers[int(rng.integers(n_rev))]
    steps: list[Step] = []
    revise_payloads: list[dict] = []
    for r in range(1, rounds + 1):
        rev_scale = complexity * first_reviewer.speed
        action = "approve" if r == rounds else "comment"
        steps.append(Step(first_reviewer.id, action, _delay(rng, config.reviewer, rev_scale), r))
        auth_scale = complexity * author.speed
        if r < rounds:
            steps.append(Step(author.id, "revise", _delay(rng, config.author, auth_scale), r))
            extra = _files(rng, areas, 1 + int(rng.integers(2)))
            revise_payloads.append({"churn": _churn(rng, len(extra)), "files": extra})
        else:
            steps.append(Step(author.id, "merge", _delay(rng, config.author, auth_scale), r))
    if rng.random() < config.abandon_probability:
        cut = int(rng.integers(len(steps)))
        steps = steps[:cut] + [Step(author.id, "abandon", steps[cut].delay_hours, steps[cut].round)]

    total = sum(st.delay_hours for st in steps)
    factor = 1.0
    if total > config.max_lifetime_hours:
        factor = config.max_lifetime_hours / total
    elif total < config.min_lifetime_hours:
        factor = config.min_lifetime_hours / total
    steps = [Step(st.actor, st.action, max(MIN_STEP_HOURS, st.delay_hours * factor), st.round) for st in steps]

    payload = {
        "title": title,
        "description": description,
        "reviewers": [d.id for d in reviewers],
        "paths": [f"src/{a}" for a in areas],
        "files": files,
        "churn": churn,
        "author_team_joined_at": format_timestamp(author.team_joined_at),
        "author_company_joined_at": format_timestamp(author.company_joined_at),
    }
    prefix = "H" if tranche == HISTORY else "P"
    return PrPlan(
        index=index,
        pr_id=f"{prefix}{index:05d}",
        repo_id=repo_id,
        author=author.id,
        reviewers=tuple(d.id for d in reviewers),
        created_at=created_at,
        create_payload=payload,
        bot_comment=bool(rng.random() < config.bot_comment_probability),
        steps=tuple(steps),
        revise_payloads=tuple(revise_payloads),
    )


def plan_tranche(config: SimConfig, tranche: int) -> list[PrPlan]:
    devs = developers(config)
    paths = path_effects(config)
    return [plan_pr(config, tranche, i, t, devs, paths) for i, t in enumerate(creation_times(config, tranche))]


def advance(start: datetime, hours: float, profile: AgentProfile, tz) -> datetime:
    """Instant an actor acts, ``hours`` of their working time after ``start`` (whole seconds)."""
    if profile.weekend_inactive:
        end = add_business_hours(start, hours, tz)
    else:
        end = start + timedelta(hours=hours)
    end = end.replace(microsecond=0)
    return max(end, start + timedelta(seconds=1))


def create_events(plan: PrPlan) -> list[EventRecord]:
    out = [EventRecord(plan.repo_id, plan.pr_id, EventKind.CREATE, plan.author, plan.created_at,
                       plan.create_payload)]
    if plan.bot_comment:
        out.append(EventRecord(plan.repo_id, plan.pr_id, EventKind.COMMENT, BOT_ID, plan.created_at,
                               {"thread_id": "build", "text": "Build succeeded", "status": "Closed"}))
    return out


def step_events(plan: PrPlan, step: Step, at: datetime) -> list[EventRecord]:
    def ev(kind, payload=None):
        return EventRecord(plan.repo_id, plan.pr_id, kind, step.actor, at, payload or {})

    if step.action == "comment":
        return [ev(EventKind.COMMENT, {"thread_id": f"r{step.round}",
                                       "text": f"Please address the review feedback (round {step.round})",
                                       "status": "Active"})]
    if step.action == "approve":
        return [ev(EventKind.VOTE, {"value": 10})]
    if step.action == "revise":
        return [ev(EventKind.UPDATE_ITERATION, plan.revise_payloads[step.round - 1]),
                ev(EventKind.THREAD_STATUS_CHANGE, {"thread_id": f"r{step.round}", "status": "Resolved"})]
    if step.action == "merge":
        return [ev(EventKind.MERGE)]
    return [ev(EventKind.ABANDON)]


def profile_for(config: SimConfig, plan: PrPlan, step: Step) -> AgentProfile:
    return config.author if step.actor == plan.author else config.reviewer


def expand(config: SimConfig, plan: PrPlan) -> Iterator[EventRecord]:
    """Events of an un-nudged PR, in order."""
    yield from create_events(plan)
    t = plan.created_at
    for step in plan.steps:
        t = advance(t, step.delay_hours, profile_for(config, plan, step), config.timezone)
        yield from step_events(plan, step, t)


def generate_corpus(config: SimConfig, tranche: int = TRIAL) -> list[EventRecord]:
    """Deterministic event log for one tranche with no nudging, ordered by time."""
    events = [ev for plan in plan_tranche(config, tranche) for ev in expand(config, plan)]
    events.sort(key=lambda ev: (ev.timestamp, ev.pr_id, ev.sort_key))
    return events
