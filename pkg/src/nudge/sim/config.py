"""Simulation configuration and its TOML loader.

Every field can be set in a TOML file; nested tables ``[author]`` and
``[reviewer]`` hold :class:`AgentProfile` fields and ``[arms]`` holds the
arm assignment probabilities.  Example::

    seed = 1
    n_prs = 3000
    nudge_response_factor = 0.3

    [reviewer]
    mean_delay_hours = 8.0
    sigma = 0.5
    stall_probability = 0.15

    [arms]
    None = 0.3333333333
    NudgeLT = 0.3333333333
    NudgeFULL = 0.3333333334
"""
from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping

from ..errors import ConfigInvalid
from ..events import parse_timestamp

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

ARM_NAMES = ("None", "NudgeLT", "NudgeFULL")


@dataclass(frozen=True)
class AgentProfile:
    """How long a simulated developer takes to act, in business hours.

    ``mean_delay_hours`` and ``sigma`` parameterize a log-normal whose mean is
    ``mean_delay_hours``.  With probability ``stall_probability`` a step is
    forgotten and its delay is stretched by a factor averaging
    ``stall_multiplier``.  ``nudge_response_factor`` scales whatever delay is
    left once the developer acts on a notification.
    """

    mean_delay_hours: float = 20.0
    sigma: float = 0.9
    nudge_response_factor: float = 0.3
    weekend_inactive: bool = True
    stall_probability: float = 0.0
    stall_multiplier: float = 1.0

    def __post_init__(self):
        if not (self.mean_delay_hours > 0 and math.isfinite(self.mean_delay_hours)):
            raise ConfigInvalid("mean_delay_hours must be positive")
        if not self.sigma >= 0:
            raise ConfigInvalid("sigma must be non-negative")
        if not 0 < self.nudge_response_factor <= 1:
            raise ConfigInvalid("nudge_response_factor must lie in (0, 1]")
        if not 0 <= self.stall_probability <= 1:
            raise ConfigInvalid("stall_probability must be a probability")
        if not self.stall_multiplier >= 1:
            raise ConfigInvalid("stall_multiplier must be at least 1")

    @property
    def mu(self) -> float:
        return math.log(self.mean_delay_hours) - self.sigma ** 2 / 2

    @property
    def expected_delay_hours(self) -> float:
        """Mean delay including the occasional stall (the PR is forgotten for a while)."""
        return self.mean_delay_hours * (1 + self.stall_probability * (self.stall_multiplier - 1))


@dataclass(frozen=True)
class SimConfig:
    seed: int = 1
    n_repos: int = 3
    n_prs: int = 3000
    n_history_prs: int = 2400
    n_developers: int = 45
    start: datetime = datetime(2024, 1, 1, tzinfo=timezone.utc)
    span_days: float = 120.0
    history_span_days: float = 240.0
    tail_days: float = 60.0
    author: AgentProfile = AgentProfile(mean_delay_hours=6.0, sigma=0.5, stall_probability=0.15, stall_multiplier=15.0)
    reviewer: AgentProfile = AgentProfile(mean_delay_hours=8.0, sigma=0.5, stall_probability=0.15, stall_multiplier=15.0)
    round_probabilities: tuple[float, ...] = (0.4, 0.35, 0.25)
    abandon_probability: float = 0.03
    bot_comment_probability: float = 0.3
    complexity_sigma: float = 0.25
    speed_sigma: float = 0.3
    min_lifetime_hours: float = 1.0
    max_lifetime_hours: float = 500.0
    scan_interval_hours: float = 6.0
    quiet_hours: float = 24.0
    arms: Mapping[str, float] = field(default_factory=lambda: {"None": 1 / 3, "NudgeLT": 1 / 3, "NudgeFULL": 1 / 3})
    model_backend: str = "GradientBoosting"
    n_estimators: int = 100
    timezone: str = "UTC"

    def __post_init__(self):
        for name in ("n_repos", "n_developers"):
            if getattr(self, name) < 1:
                raise ConfigInvalid(f"{name} must be at least 1")
        for name in ("n_prs", "n_history_prs"):
            if getattr(self, name) < 0:
                raise ConfigInvalid(f"{name} must be non-negative")
        if self.n_developers < 4:
            raise ConfigInvalid("need at least 4 developers (an author plus up to 3 reviewers)")
        for name in ("span_days", "history_span_days", "scan_interval_hours"):
            if not getattr(self, name) > 0:
                raise ConfigInvalid(f"{name} must be positive")
        if self.tail_days < 0 or self.quiet_hours < 0:
            raise ConfigInvalid("tail_days and quiet_hours must be non-negative")
        if not 0 < self.min_lifetime_hours < self.max_lifetime_hours:
            raise ConfigInvalid("need 0 < min_lifetime_hours < max_lifetime_hours")
        probs = self.round_probabilities
        if not probs or any(p < 0 for p in probs) or not math.isclose(sum(probs), 1.0, abs_tol=1e-9):
            raise ConfigInvalid("round_probabilities must be non-negative and sum to 1")
        for name in ("abandon_probability", "bot_comment_probability"):
            if not 0 <= getattr(self, name) <= 1:
                raise ConfigInvalid(f"{name} must be a probability")
        if set(self.arms) - set(ARM_NAMES):
            raise ConfigInvalid(f"unknown arms {sorted(set(self.arms) - set(ARM_NAMES))}")
        if any(p < 0 for p in self.arms.values()) or not math.isclose(sum(self.arms.values()), 1.0, abs_tol=1e-6):
            raise ConfigInvalid("arm probabilities must be non-negative and sum to 1")
        if self.start.tzinfo is None:
            raise ConfigInvalid("start must carry a UTC offset")

    @property
    def nudge_response_factor(self) -> float:
        return self.reviewer.nudge_response_factor

    def with_factor(self, factor: float) -> "SimConfig":
        """Same configuration with one response factor for every agent."""
        return dataclasses.replace(
            self,
            author=dataclasses.replace(self.author, nudge_response_factor=factor),
            reviewer=dataclasses.replace(self.reviewer, nudge_response_factor=factor),
        )

    @property
    def expected_rounds(self) -> float:
        return sum((i + 1) * p for i, p in enumerate(self.round_probabilities))

    @property
    def expected_lifetime_hours(self) -> float:
        """Mean business-hour lifetime of a merged PR, before clipping.

        A PR with R review rounds takes R reviewer steps and R author steps
        (R - 1 revisions plus the final merge).
        """
        return self.expected_rounds * (self.reviewer.expected_delay_hours + self.author.expected_delay_hours)


_SCALARS = {f.name for f in dataclasses.fields(SimConfig)} - {"author", "reviewer", "arms", "start",
                                                            "round_probabilities"}


def config_from_mapping(data: Mapping[str, Any]) -> SimConfig:
    unknown = set(data) - {f.name for f in dataclasses.fields(SimConfig)} - {"nudge_response_factor"}
    if unknown:
        raise ConfigInvalid(f"unknown configuration keys {sorted(unknown)}")
    kwargs: dict[str, Any] = {k: data[k] for k in _SCALARS if k in data}
    try:
        for role in ("author", "reviewer"):
            if role in data:
                base = getattr(SimConfig, role)
                kwargs[role] = dataclasses.replace(base, **dict(data[role]))
        if "arms" in data:
            kwargs["arms"] = {str(k): float(v) for k, v in dict(data["arms"]).items()}
        if "round_probabilities" in data:
            kwargs["round_probabilities"] = tuple(float(p) for p in data["round_probabilities"])
        if "start" in data:
            start = data["start"]
            kwargs["start"] = parse_timestamp(start) if isinstance(start, str) else start
        config = SimConfig(**kwargs)
    except ConfigInvalid:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(str(exc)) from None
    if "nudge_response_factor" in data:
        config = config.with_factor(float(data["nudge_response_factor"]))
    return config


def load_config(path: str | Path) -> SimConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigInvalid(f"{path}: {exc}") from None
    return config_from_mapping(data)
