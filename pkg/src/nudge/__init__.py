"""Predict pull request lifetimes and nudge the people a stalled PR is waiting on."""
from .errors import NudgeError

__version__ = "0.1.0"

__all__ = ["NudgeError", "__version__"]
