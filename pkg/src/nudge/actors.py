"""Rule-based blocker classification: who is holding a pull request up."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

from .domain import CommentThread, PullRequestRecord
from .errors import TerminalPr

OPEN_THREAD_STATUSES = frozenset({"Active", "Pending"})
APPROVAL_VOTES = frozenset({5, 10})
WAITING_FOR_AUTHOR_VOTE = -5


class BlockerClass(str, enum.Enum):
    UNADDRESSED_COMMENTS = "UnaddressedComments"
    NEEDS_DISCUSSION = "NeedsDiscussion"
    APPROVED_NOT_MERGED = "ApprovedNotMerged"
    REVIEW_NOT_STARTED = "ReviewNotStarted"
    ADDRESSED_NOT_APPROVED = "AddressedNotApproved"


class WaitingOn(str, enum.Enum):
    AUTHOR = "Author"
    REVIEWERS = "Reviewers"


@dataclass(frozen=True)
class BlockerVerdict:
    blocker_class: BlockerClass
    waiting_on: WaitingOn
    actors: tuple[str, ...]

    def __post_init__(self):
        if not self.actors:
            raise ValueError("a verdict must name at least one actor")

    def to_dict(self) -> dict:
        return {"blocker_class": self.blocker_class.value, "waiting_on": self.waiting_on.value,
                "actors": list(self.actors)}

    @classmethod
    def from_dict(cls, data: dict) -> "BlockerVerdict":
        return cls(BlockerClass(data["blocker_class"]), WaitingOn(data["waiting_on"]), tuple(data["actors"]))


@dataclass(frozen=True)
class ReviewFacts:
    """The handful of facts the decision rules look at."""

    author: str
    reviewers: tuple[str, ...]
    votes: dict[str, int]
    reviewer_threads: tuple[CommentThread, ...]

    @classmethod
    def of(cls, pr: PullRequestRecord) -> "ReviewFacts":
        reviewers = tuple(pr.reviewer_ids)
        votes = {r: v for r, v in pr.current_votes.items() if r != pr.author.id and not pr.is_bot(r)}
        threads = tuple(
            t for t in pr.threads
            if not t.is_vote_event and t.author != pr.author.id and not pr.is_bot(t.author)
        )
        return cls(pr.author.id, reviewers, votes, threads)

    @property
    def approved(self) -> bool:
        return any(v in APPROVAL_VOTES for v in self.votes.values())

    @property
    def negative(self) -> bool:
        return any(v < 0 for v in self.votes.values())

    @property
    def open_threads(self) -> bool:
        return any(t.status in OPEN_THREAD_STATUSES for t in self.reviewer_threads)

    @property
    def waiting_vote(self) -> bool:
        return WAITING_FOR_AUTHOR_VOTE in self.votes.values()

    @property
    def nonzero_votes(self) -> bool:
        return any(v != 0 for v in self.votes.values())

    def commenters(self) -> tuple[str, ...]:
        out: list[str] = []
        for t in self.reviewer_threads:
            if t.author not in out:
                out.append(t.author)
        return tuple(out)


def _author(facts: ReviewFacts) -> tuple[WaitingOn, tuple[str, ...]]:
    return WaitingOn.AUTHOR, (facts.author,)


def _all_reviewers(facts: ReviewFacts) -> tuple[WaitingOn, tuple[str, ...]]:
    if not facts.reviewers:
        return _author(facts)
    return WaitingOn.REVIEWERS, facts.reviewers


def _commenting_reviewers(facts: ReviewFacts) -> tuple[WaitingOn, tuple[str, ...]]:
    commenters = facts.commenters()
    if commenters:
        return WaitingOn.REVIEWERS, commenters
    voters = tuple(r for r, v in facts.votes.items() if v != 0)
    if voters:
        return WaitingOn.REVIEWERS, voters
    return _all_reviewers(facts)


@dataclass(frozen=True)
class Branch:
    blocker_class: BlockerClass
    applies: Callable[[ReviewFacts], bool]
    actors: Callable[[ReviewFacts], tuple[WaitingOn, tuple[str, ...]]]


# Evaluated top to bottom; the first matching branch wins.
BRANCHES: tuple[Branch, ...] = (
    Branch(BlockerClass.APPROVED_NOT_MERGED, lambda f: f.approved and not f.negative, _author),
    Branch(BlockerClass.UNADDRESSED_COMMENTS, lambda f: f.open_threads, _author),
    Branch(BlockerClass.NEEDS_DISCUSSION, lambda f: f.waiting_vote and not f.open_threads, _author),
    Branch(BlockerClass.REVIEW_NOT_STARTED,
           lambda f: not f.reviewer_threads and not f.nonzero_votes, _all_reviewers),
    Branch(BlockerClass.ADDRESSED_NOT_APPROVED, lambda f: True, _commenting_reviewers),
)


def matching_branches(pr: PullRequestRecord) -> list[BlockerClass]:
    """Every branch whose condition holds, in evaluation order (diagnostics)."""
    facts = ReviewFacts.of(pr)
    return [b.blocker_class for b in BRANCHES if b.applies(facts)]


def identify(pr: PullRequestRecord) -> BlockerVerdict:
    """Classify why ``pr`` is stalled and name the actors who can unblock it."""
    if pr.is_terminal:
        raise TerminalPr(f"PR {pr.id} is {pr.state.value}")
    facts = ReviewFacts.of(pr)
    for branch in BRANCHES:
        if branch.applies(facts):
            waiting_on, actors = branch.actors(facts)
            return BlockerVerdict(branch.blocker_class, waiting_on, actors)
    raise AssertionError("the final branch always applies")
