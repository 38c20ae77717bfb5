"""Exception hierarchy shared across the platform."""

from __future__ import annotations


class TippyError(Exception):
    """Base for every domain error; tool handlers surface these in-band."""


class ValidationError(TippyError):
    """Input failed a schema or invariant check; names the offending fields."""

    def __init__(self, message: str, fields: list[str] | None = None):
        super().__init__(message)
        self.fields = fields or []


class NotFoundError(TippyError):
    pass


class PermissionDeniedError(TippyError):
    pass


class IllegalTransitionError(TippyError):
    """Job state machine rejected a transition; carries the current state."""

    def __init__(self, current_state: str, requested: str):
        super().__init__(f"illegal transition: cannot {requested} from state {current_state}")
        self.current_state = current_state


class ApprovalRequiredError(TippyError):
    def __init__(self, job_id: str):
        super().__init__(f"approval required before starting high-stakes job {job_id}")
        self.job_id = job_id


class NoDataError(TippyError):
    pass


class LoadError(TippyError):
    """World or rule snapshot failed to load; names the first violated invariant."""


class PersistenceError(TippyError):
    pass


class SmilesParseError(TippyError):
    """SMILES text rejected; offset is a 0-based character position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.reason = message
        self.offset = offset


class UnknownNameError(TippyError):
    def __init__(self, name: str, candidates: list[str]):
        super().__init__(f"unknown compound name {name!r}; closest: {', '.join(candidates)}")
        self.candidates = candidates


class NoConfidentMatchError(TippyError):
    def __init__(self, query: str, candidates: list[str]):
        super().__init__(f"no confident match for {query!r}; closest: {', '.join(candidates)}")
        self.candidates = candidates


class RegistrationError(TippyError):
    pass


class FrameError(TippyError):
    pass


class RuleLoadError(TippyError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class AdapterError(TippyError):
    """Model adapter violated its contract (transport failure or scoping breach)."""


class RoutingError(TippyError):
    pass


class ConfigurationError(TippyError):
    pass


class TracingError(TippyError):
    pass


class ConflictError(TippyError):
    pass


class ConversationBusyError(TippyError):
    pass


class TurnError(TippyError):
    pass
