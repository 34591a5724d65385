"""
Exception hierarchy for mcrgames.

Every failure raised by the library derives from McrError so that the
command-line layer can map it to exit code 1 with a one-line message.
Well-formedness problems of a game are not exceptions: validate_game
returns them as data.
"""
from typing import Optional, Sequence


class McrError(Exception):
    """Base class for all library errors."""


class ExtCostError(McrError, ArithmeticError):
    """Raised when +inf and -inf are added."""


class GameError(McrError):
    """Ill-formed game, or an unknown player or vertex."""


class PlayError(McrError):
    """A play that is not a path of the game."""


class StrategyError(McrError):
    """A strategy undefined or illegal at a decision point."""


class NotActionVisibleError(McrError):
    """The operation needs an action-visible game."""


class NotTurnBasedError(McrError):
    """The operation needs a turn-based game."""


class UnboundedError(McrError):
    """A transform was requested for a player whose payoffs are unbounded below."""


class SolverError(McrError):
    """A zero-sum solve could not be carried out."""


class BudgetExceededError(McrError):
    """An enumeration would exceed its configured budget."""

    def __init__(self, message: str, required: int, budget: int):
        super().__init__(message)
        self.required = required
        self.budget = budget


class InstanceError(McrError):
    """Invalid micro-grid instance."""


class UnschedulableError(InstanceError):
    """No complete schedule exists for the instance."""


class ScheduleError(McrError):
    """Incomplete or illegal schedule."""

    def __init__(self, message: str, missing: Sequence[str] = ()):
        super().__init__(message)
        self.missing = tuple(missing)


class FormatError(McrError):
    """Syntax, schema or semantic violation in an artifact file."""

    def __init__(self, message: str, offset: Optional[int] = None, line: Optional[int] = None):
        super().__init__(message)
        self.offset = offset
        self.line = line

    def __str__(self) -> str:
        where = []
        if self.line is not None:
            where.append(f"line {self.line}")
        if self.offset is not None:
            where.append(f"byte {self.offset}")
        base = super().__str__()
        return f"{base} ({', '.join(where)})" if where else base
