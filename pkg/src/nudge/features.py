"""PR feature vectors, historical aggregates, and correlation analysis."""
from __future__ import annotations

import bisect
import csv
import enum
import io
import re
from dataclasses import dataclass, field
from datetime import datetime, time
from typing import Iterable, Sequence

import numpy as np

from .calendar import resolve_tz
from .domain import IntentFlags, PullRequestRecord, lifetime_hours
from .errors import DegenerateInput, UnknownPr
from .store import RepoCorpus, training_window

RETENTION_CUTOFF = 0.008
SECONDS_PER_DAY = 86400.0
BUSINESS_START = time(9)
BUSINESS_END = time(17)


class FeatureKind(str, enum.Enum):
    CATEGORICAL = "Categorical"
    BINARY = "Binary"
    DISCRETE = "Discrete"
    CONTINUOUS = "Continuous"


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: FeatureKind
    reported_correlation: float
    description: str

    @property
    def retained(self) -> bool:
        return abs(self.reported_correlation) > RETENTION_CUTOFF


_C, _B, _D, _N = FeatureKind.CATEGORICAL, FeatureKind.BINARY, FeatureKind.DISCRETE, FeatureKind.CONTINUOUS

# Rows in published order (descending correlation with lifetime).
FEATURE_SPECS: tuple[FeatureSpec, ...] = (
    FeatureSpec("day_of_week", _C, 0.163, "Day of the week the PR was created (Sunday=0)"),
    FeatureSpec("author_avg_lifetime", _N, 0.159, "Average completion time of the author's PRs"),
    FeatureSpec("required_reviewer_count", _D, 0.131, "Number of required reviewers"),
    FeatureSpec("edits_csproj", _B, 0.103, "A .csproj file is modified"),
    FeatureSpec("path_avg_lifetime", _N, 0.089, "Average completion time of PRs touching the same project paths"),
    FeatureSpec("distinct_file_types", _D, 0.084, "Distinct file types modified"),
    FeatureSpec("description_word_count", _D, 0.072, "Word count of the description"),
    FeatureSpec("edits_config", _B, 0.059, "Config files or settings are modified"),
    FeatureSpec("repo_active_pr_count", _D, 0.058, "Active PRs in the repository"),
    FeatureSpec("churn_per_class", _D, 0.055, "Churned lines per class"),
    FeatureSpec("total_churn", _D, 0.039, "Total churn"),
    FeatureSpec("methods_churned", _D, 0.037, "Methods churned"),
    FeatureSpec("is_feature", _B, 0.033, "Introduces a new feature"),
    FeatureSpec("lines_changed", _D, 0.031, "Lines changed"),
    FeatureSpec("distinct_paths", _D, 0.031, "Distinct paths touched"),
    FeatureSpec("conditionals_touched", _D, 0.029, "Conditional statements touched"),
    FeatureSpec("loops_touched", _D, 0.028, "Loops touched"),
    FeatureSpec("classes_touched", _D, 0.021, "Classes added, modified, or deleted"),
    FeatureSpec("is_refactor", _B, 0.021, "Refactors existing code"),
    FeatureSpec("references_changed", _D, 0.017, "References or dependencies changed"),
    FeatureSpec("files_modified", _D, 0.016, "Files modified"),
    FeatureSpec("is_merge_change", _B, 0.008, "Forward or reverse integration merge"),
    FeatureSpec("is_deprecation", _B, -0.001, "Deprecates old code"),
    FeatureSpec("title_word_count", _D, -0.001, "Word count of the title"),
    FeatureSpec("created_in_business_hours", _B, -0.019, "Created 09:00-17:00 Mon-Fri"),
    FeatureSpec("is_bug_fix", _B, -0.028, "Fixes bugs"),
    FeatureSpec("author_team_tenure_days", _N, -0.031, "Days the author has spent in the current team"),
    FeatureSpec("author_repo_tenure_days", _N, -0.046, "Days since the author's first activity in the repository"),
    FeatureSpec("author_company_tenure_days", _N, -0.056, "Days the author has spent at the company"),
)

ALL_FEATURES: tuple[str, ...] = tuple(s.name for s in FEATURE_SPECS)
RETAINED_SPECS: tuple[FeatureSpec, ...] = tuple(s for s in FEATURE_SPECS if s.retained)
RETAINED_FEATURES: tuple[str, ...] = tuple(s.name for s in RETAINED_SPECS)
_RETAINED_IDX = np.array([ALL_FEATURES.index(n) for n in RETAINED_FEATURES])


def feature_table_csv() -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["name", "kind", "reported_correlation", "retained"])
    for fs in FEATURE_SPECS:
        writer.writerow([fs.name, fs.kind.value, f"{fs.reported_correlation:g}", str(fs.retained).lower()])
    return buf.getvalue()


@dataclass(frozen=True)
class FeatureVector:
    pr_id: str
    as_of: datetime
    values: tuple[float, ...]
    missing_mask: tuple[bool, ...]
    names: tuple[str, ...] = RETAINED_FEATURES

    def __post_init__(self):
        if not (len(self.values) == len(self.missing_mask) == len(self.names)):
            raise ValueError("values, missing_mask and names must align")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def __getitem__(self, name: str) -> float:
        return self.values[self.names.index(name)]

    def retained(self) -> "FeatureVector":
        if self.names == RETAINED_FEATURES:
            return self
        idx = [self.names.index(n) for n in RETAINED_FEATURES]
        return FeatureVector(
            self.pr_id, self.as_of,
            tuple(self.values[i] for i in idx), tuple(self.missing_mask[i] for i in idx),
        )


# --- intent heuristic ---------------------------------------------------------

INTENT_KEYWORDS: dict[str, tuple[str, ...]] = {
    "is_bug_fix": ("fix", "bug", "crash", "incident"),
    "is_feature": ("add", "feature", "implement"),
    "is_refactor": ("refactor", "cleanup", "rename"),
    "is_deprecation": ("deprecate", "remove legacy"),
    "is_merge_change": ("merge", "forward integration", "fi", "ri"),
}
_SUFFIXES = ("", "s", "es", "ed", "d", "ing", "er", "ers")
_WORD = re.compile(r"[a-z0-9]+")


def _keyword_pattern(keyword: str) -> re.Pattern:
    words = keyword.split()
    head = r"\s+".join(re.escape(w) for w in words[:-1])
    last = words[-1]
    stems = {last}
    if last.endswith("e"):
        stems.add(last[:-1])
    tail = "(?:" + "|".join(re.escape(s) for s in sorted(stems)) + ")(?:" + "|".join(_SUFFIXES[1:]) + ")?"
    body = (head + r"\s+" + tail) if head else tail
    return re.compile(r"(?<![a-z0-9])" + body + r"(?![a-z0-9])")


_INTENT_PATTERNS = {flag: tuple(_keyword_pattern(k) for k in kws) for flag, kws in INTENT_KEYWORDS.items()}


def classify_intent(title: str, description: str = "") -> IntentFlags:
    """Keyword heuristic for PR intent; each flag is decided independently.

    Keywords match whole words, case-insensitively, allowing common
    inflections ("fixes", "fixed", "deprecating").
    """
    text = f"{title}\n{description}".lower()
    flags = {flag: any(p.search(text) for p in patterns) for flag, patterns in _INTENT_PATTERNS.items()}
    return IntentFlags(**flags)


# --- historical aggregates ----------------------------------------------------

@dataclass
class AggregateCache:
    computed_at: datetime
    author_avg_lifetime: dict[str, float] = field(default_factory=dict)
    path_avg_lifetime: dict[str, float] = field(default_factory=dict)
    repo_active_pr_count: int = 0
    author_first_activity: dict[str, datetime] = field(default_factory=dict)
    author_team_join: dict[str, datetime] = field(default_factory=dict)
    author_company_join: dict[str, datetime] = field(default_factory=dict)
    global_mean_lifetime: float | None = None
    # training-set detail kept for leave-one-out extraction
    pr_lifetimes: dict[str, float] = field(default_factory=dict, repr=False)
    author_counts: dict[str, int] = field(default_factory=dict, repr=False)
    path_counts: dict[str, int] = field(default_factory=dict, repr=False)
    created_times: list[datetime] = field(default_factory=list, repr=False)
    closed_times: list[datetime] = field(default_factory=list, repr=False)

    def active_count_at(self, t: datetime) -> int:
        """PRs created at or before ``t`` and not closed by ``t``."""
        return bisect.bisect_right(self.created_times, t) - bisect.bisect_right(self.closed_times, t)


def refresh_cache(corpus: RepoCorpus, as_of: datetime, window_years: float = 2, tz=None) -> AggregateCache:
    """Recompute every aggregate from scratch using only information up to ``as_of``."""
    training = training_window(corpus, as_of, window_years, tz)
    cache = AggregateCache(computed_at=as_of)

    author_sum: dict[str, float] = {}
    path_sum: dict[str, float] = {}
    for pr in training:
        hours = lifetime_hours(pr, as_of, tz)
        cache.pr_lifetimes[pr.id] = hours
        a = pr.author.id
        author_sum[a] = author_sum.get(a, 0.0) + hours
        cache.author_counts[a] = cache.author_counts.get(a, 0) + 1
        for path in pr.project_paths:
            path_sum[path] = path_sum.get(path, 0.0) + hours
            cache.path_counts[path] = cache.path_counts.get(path, 0) + 1
    cache.author_avg_lifetime = {a: author_sum[a] / cache.author_counts[a] for a in sorted(author_sum)}
    cache.path_avg_lifetime = {p: path_sum[p] / cache.path_counts[p] for p in sorted(path_sum)}
    if training:
        cache.global_mean_lifetime = sum(cache.pr_lifetimes.values()) / len(training)

    if corpus.ingest_watermark is not None and as_of >= corpus.ingest_watermark:
        first = dict(corpus.first_activity)
    else:
        first = {}
        for ev in corpus.all_events():
            if ev.timestamp <= as_of and (ev.actor_id not in first or ev.timestamp < first[ev.actor_id]):
                first[ev.actor_id] = ev.timestamp
    cache.author_first_activity = {a: first[a] for a in sorted(first)}

    created, closed = [], []
    for pr in corpus.prs.values():
        if pr.created_at > as_of:
            continue
        created.append(pr.created_at)
        if pr.closed_at is not None and pr.closed_at <= as_of:
            closed.append(pr.closed_at)
        for attr, target in (("author_team_joined_at", cache.author_team_join),
                             ("author_company_joined_at", cache.author_company_join)):
            joined = getattr(pr, attr)
            if joined is not None and joined <= as_of:
                prev = target.get(pr.author.id)
                if prev is None or joined < prev:
                    target[pr.author.id] = joined
    cache.created_times = sorted(created)
    cache.closed_times = sorted(closed)
    cache.repo_active_pr_count = cache.active_count_at(as_of)
    cache.author_team_join = dict(sorted(cache.author_team_join.items()))
    cache.author_company_join = dict(sorted(cache.author_company_join.items()))
    return cache


# --- extraction -----------------------------------------------------------------

def _days(delta) -> float:
    return delta.total_seconds() / SECONDS_PER_DAY


def _avg_excluding(avg: float, count: int, own: float | None) -> float | None:
    if own is None:
        return avg
    if count <= 1:
        return None
    return (avg * count - own) / (count - 1)


def _mean_tenure(joins: dict[str, datetime], as_of: datetime) -> float:
    known = [_days(as_of - t) for t in joins.values() if t <= as_of]
    return sum(known) / len(known) if known else 0.0


def raw_features(
    pr: PullRequestRecord,
    cache: AggregateCache,
    as_of: datetime,
    tz=None,
    leave_one_out: bool = False,
) -> tuple[dict[str, float], set[str]]:
    """All feature values for a PR snapshot, plus the names that were imputed."""
    tz_ = resolve_tz(tz)
    missing: set[str] = set()
    own = cache.pr_lifetimes.get(pr.id) if leave_one_out else None

    global_mean = cache.global_mean_lifetime
    if own is not None and global_mean is not None:
        n = len(cache.pr_lifetimes)
        global_mean = (global_mean * n - own) / (n - 1) if n > 1 else None
    fallback = global_mean if global_mean is not None else 0.0

    author = pr.author.id
    author_avg = None
    if author in cache.author_avg_lifetime:
        author_avg = _avg_excluding(cache.author_avg_lifetime[author], cache.author_counts[author], own)
    if author_avg is None:
        missing.add("author_avg_lifetime")
        author_avg = fallback

    path_avgs = []
    for path in pr.project_paths:
        if path in cache.path_avg_lifetime:
            value = _avg_excluding(cache.path_avg_lifetime[path], cache.path_counts[path], own)
            if value is not None:
                path_avgs.append(value)
    if path_avgs:
        path_avg = sum(path_avgs) / len(path_avgs)
    else:
        missing.add("path_avg_lifetime")
        path_avg = fallback

    first = cache.author_first_activity.get(author)
    if first is None or first > pr.created_at:
        first = pr.created_at
    tenure = {}
    for name, joins in (("author_team_tenure_days", cache.author_team_join),
                        ("author_company_tenure_days", cache.author_company_join)):
        joined = pr.author_team_joined_at if name == "author_team_tenure_days" else pr.author_company_joined_at
        if joined is None:
            joined = joins.get(author)
        if joined is None or joined > as_of:
            missing.add(name)
            tenure[name] = _mean_tenure(joins, as_of)
        else:
            tenure[name] = _days(as_of - joined)

    created_local = pr.created_at.astimezone(tz_)
    churn = pr.churn
    flags = pr.intent_flags
    values = {
        "day_of_week": float((created_local.weekday() + 1) % 7),
        "author_avg_lifetime": author_avg,
        "required_reviewer_count": float(len(pr.required_reviewers)),
        "edits_csproj": float(churn.edits_csproj),
        "path_avg_lifetime": path_avg,
        "distinct_file_types": float(churn.distinct_file_types),
        "description_word_count": float(len(pr.description.split())),
        "edits_config": float(churn.edits_config),
        "repo_active_pr_count": float(cache.active_count_at(as_of)),
        "churn_per_class": churn.total_churn_lines / max(churn.classes_touched, 1),
        "total_churn": float(churn.total_churn_lines),
        "methods_churned": float(churn.methods_churned),
        "is_feature": float(flags.is_feature),
        "lines_changed": float(churn.lines_changed),
        "distinct_paths": float(churn.distinct_paths),
        "conditionals_touched": float(churn.conditionals_touched),
        "loops_touched": float(churn.loops_touched),
        "classes_touched": float(churn.classes_touched),
        "is_refactor": float(flags.is_refactor),
        "references_changed": float(churn.references_changed),
        "files_modified": float(churn.files_modified),
        "is_merge_change": float(flags.is_merge_change),
        "is_deprecation": float(flags.is_deprecation),
        "title_word_count": float(len(pr.title.split())),
        "created_in_business_hours": float(
            created_local.weekday() < 5 and BUSINESS_START <= created_local.time() < BUSINESS_END
        ),
        "is_bug_fix": float(flags.is_bug_fix),
        "author_team_tenure_days": tenure["author_team_tenure_days"],
        "author_repo_tenure_days": _days(as_of - first),
        "author_company_tenure_days": tenure["author_company_tenure_days"],
    }
    return values, missing


def extract(
    pr: PullRequestRecord | str,
    corpus: RepoCorpus,
    cache: AggregateCache,
    as_of: datetime,
    tz=None,
    retained_only: bool = True,
    leave_one_out: bool = False,
) -> FeatureVector:
    """Feature vector for ``pr`` using only what was known at ``as_of``.

    The PR is re-materialised from its events up to ``as_of`` so later
    updates (new iterations, added reviewers) cannot leak in.
    """
    pr_id = pr if isinstance(pr, str) else pr.id
    if pr_id not in corpus.prs:
        raise UnknownPr(f"PR {pr_id} not in corpus {corpus.repo_id}")
    if cache.computed_at > as_of:
        raise ValueError("cache computed after as_of")
    view = corpus.pr_as_of(pr_id, as_of)
    if view is None:
        raise ValueError(f"PR {pr_id} did not exist at {as_of}")
    values, missing = raw_features(view, cache, as_of, tz, leave_one_out)
    names = RETAINED_FEATURES if retained_only else ALL_FEATURES
    return FeatureVector(
        pr_id=pr_id,
        as_of=as_of,
        values=tuple(float(values[n]) for n in names),
        missing_mask=tuple(n in missing for n in names),
        names=names,
    )


@dataclass
class TrainingSet:
    X: np.ndarray
    y: np.ndarray
    pr_ids: list[str]
    names: tuple[str, ...]
    missing: np.ndarray

    def __len__(self) -> int:
        return len(self.y)


def build_training_set(
    corpus: RepoCorpus,
    as_of: datetime,
    window_years: float = 2,
    tz=None,
    retained_only: bool = True,
    cache: AggregateCache | None = None,
) -> TrainingSet:
    """Rows for every training-window PR, featurised at its creation instant.

    Aggregates come from one cache at ``as_of`` with the PR's own lifetime
    left out of the author and path averages.
    """
    if cache is None:
        cache = refresh_cache(corpus, as_of, window_years, tz)
    prs = training_window(corpus, as_of, window_years, tz)
    names = RETAINED_FEATURES if retained_only else ALL_FEATURES
    rows, masks, ys = [], [], []
    for pr in prs:
        view = corpus.pr_as_of(pr.id, pr.created_at)
        values, missing = raw_features(view, cache, pr.created_at, tz, leave_one_out=True)
        rows.append([values[n] for n in names])
        masks.append([n in missing for n in names])
        ys.append(lifetime_hours(pr, as_of, tz))
    width = len(names)
    return TrainingSet(
        X=np.asarray(rows, dtype=float).reshape(-1, width),
        y=np.asarray(ys, dtype=float),
        pr_ids=[p.id for p in prs],
        names=names,
        missing=np.asarray(masks, dtype=bool).reshape(-1, width),
    )


# --- correlation ----------------------------------------------------------------

@dataclass(frozen=True)
class CorrelationRow:
    name: str
    correlation: float
    degenerate: bool = False


def pearson(x: np.ndarray, y: np.ndarray) -> float | None:
    """Pearson r, or ``None`` when either input is constant."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return None
    r = float(dx @ dy) / np.sqrt(sxx * syy)
    return float(np.clip(r, -1.0, 1.0))


def correlation_report(
    X: np.ndarray | Sequence[Sequence[float]],
    y: Sequence[float],
    names: Sequence[str] = ALL_FEATURES,
) -> list[CorrelationRow]:
    """Pearson correlation of each column of ``X`` with ``y``, sorted descending.

    Constant columns are reported with correlation 0 and ``degenerate=True``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[1] != len(names):
        raise ValueError("X must be (n_samples, len(names)) and match y")
    if len(y) < 3:
        raise DegenerateInput("correlation needs at least 3 samples")
    if np.all(y == y[0]):
        raise DegenerateInput("dependent variable is constant")
    rows = []
    for j, name in enumerate(names):
        r = pearson(X[:, j], y)
        rows.append(CorrelationRow(name, 0.0, True) if r is None else CorrelationRow(name, r))
    rows.sort(key=lambda row: (-row.correlation, row.name))
    return rows


def select_retained(X: np.ndarray) -> np.ndarray:
    """Drop the low-correlation columns from a full-width matrix."""
    return np.asarray(X)[:, _RETAINED_IDX]


def feature_vectors(vectors: Iterable[FeatureVector]) -> np.ndarray:
    return np.vstack([v.as_array() for v in vectors])
