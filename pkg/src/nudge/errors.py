"""Exception hierarchy shared across the package."""


class NudgeError(Exception):
    """Base class for every error raised by this package."""


class IllegalTransition(NudgeError):
    def __init__(self, message, pr_id=None):
        self.pr_id = pr_id
        if pr_id is not None:
            message = f"PR {pr_id}: {message}"
        super().__init__(message)


class StaleEvent(NudgeError):
    """An event is older than the last event already applied to the PR."""


class InvalidEvent(NudgeError):
    """An event is structurally valid JSON but semantically unusable."""


class ParseError(NudgeError):
    def __init__(self, line_no, message):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class CorruptStore(NudgeError):
    pass


class UnknownPr(NudgeError):
    pass


class DegenerateInput(NudgeError):
    pass


class InsufficientData(NudgeError):
    pass


class NonFiniteInput(NudgeError):
    pass


class SchemaMismatch(NudgeError):
    pass


class CorruptModel(NudgeError):
    pass


class VersionMismatch(CorruptModel):
    pass


class TerminalPr(NudgeError):
    pass


class UnknownNotification(NudgeError):
    pass


class DuplicateNotification(NudgeError):
    pass


class ConfigInvalid(NudgeError):
    pass
