"""Most-recent human activity on a PR and the quiet-period gate."""
from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta

from .domain import PullRequestRecord, is_bot_name

DEFAULT_QUIET_HOURS = 24.0

__all__ = ["ActivitySnapshot", "is_bot_name", "is_quiet", "latest_activity"]


@dataclass(frozen=True)
class ActivitySnapshot:
    last_commit_at: datetime | None = None
    last_comment_at: datetime | None = None
    last_state_change_at: datetime | None = None

    @property
    def last_any(self) -> datetime | None:
        present = [t for t in (self.last_commit_at, self.last_comment_at, self.last_state_change_at) if t]
        return max(present) if present else None


def _latest(times) -> datetime | None:
    times = list(times)
    return max(times) if times else None


def latest_activity(pr: PullRequestRecord) -> ActivitySnapshot:
    """Collaboration-point timestamps; PR creation itself does not count.

    * commits: latest iteration pushed after creation
    * comments: latest human comment or thread-status change
    * state changes: latest vote-event thread
    """
    commits = _latest(it.timestamp for it in pr.iterations if it.timestamp > pr.created_at)
    comments = []
    votes = []
    for thread in pr.threads:
        if thread.is_vote_event:
            votes.append(thread.created_at)
            continue
        comments.extend(c.timestamp for c in thread.comments if not pr.is_bot(c.author))
        comments.extend(s.timestamp for s in thread.status_changes if not pr.is_bot(s.actor))
    return ActivitySnapshot(commits, _latest(comments), _latest(votes))


def is_quiet(pr: PullRequestRecord, now: datetime, quiet_hours: float = DEFAULT_QUIET_HOURS) -> bool:
    """True when no human activity happened in the last ``quiet_hours`` wall-clock hours."""
    last = latest_activity(pr).last_any
    return last is None or now - last >= timedelta(hours=quiet_hours)
