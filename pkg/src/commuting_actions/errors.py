"""Exception hierarchy shared by all modules."""

from __future__ import annotations

from typing import Any


class CommutingActionsError(Exception):
    """Base class for every error raised by this package."""


class NonFiniteError(CommutingActionsError, ArithmeticError):
    """A function evaluation produced NaN or infinity."""


class SingularJacobian(CommutingActionsError, ArithmeticError):
    """The linearization of a nonlinear system is (numerically) singular."""

    def __init__(self, message: str, condition: float = float("inf")):
        super().__init__(message)
        self.condition = condition


class NotConverged(CommutingActionsError):
    """An iterative solver stopped before reaching its tolerance.

    ``best`` holds the best iterate found (the one with the smallest
    residual), ``diag`` the diagnostics at that iterate.
    """

    def __init__(self, message: str, best: Any = None, diag: Any = None):
        super().__init__(message)
        self.best = best
        self.diag = diag


class ResolutionCapExceeded(CommutingActionsError):
    """Richardson refinement hit the resolution cap before the target tolerance."""

    def __init__(self, message: str, best: Any = None):
        super().__init__(message)
        self.best = best


class TimeHorizonError(CommutingActionsError, ValueError):
    """Requested time is past the guarded horizon of the system (conjugate points)."""


class FlowBlowUp(CommutingActionsError, ArithmeticError):
    """A Hamiltonian flow left the finite numbers."""

    def __init__(self, message: str, last_time: float):
        super().__init__(message)
        self.last_time = last_time


class UnknownSystem(CommutingActionsError, KeyError):
    """No system of the requested name in the catalog."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown system"


class SpecParseError(CommutingActionsError, ValueError):
    """A system-spec document is malformed."""


class InvalidGrid(CommutingActionsError, ValueError):
    """A verification grid is empty or malformed."""


class InvalidParameter(CommutingActionsError, ValueError):
    """A system parameter is outside its admissible range."""
