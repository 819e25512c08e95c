from __future__ import annotations

from dataclasses import dataclass, field

from .base import TrainedModel


@dataclass
class ModelRegistry:
    """A global model plus optional repository-specific models."""

    global_model: TrainedModel | None = None
    repo_models: dict[str, TrainedModel] = field(default_factory=dict)

    def for_repo(self, repo_id: str) -> TrainedModel | None:
        return self.repo_models.get(repo_id, self.global_model)

    def items(self):
        if self.global_model is not None:
            yield "global", self.global_model
        for repo_id in sorted(self.repo_models):
            yield f"repo-{repo_id}", self.repo_models[repo_id]
