"""Exception hierarchy shared by the numerical services and the CLI."""

from __future__ import annotations

from typing import Any


class MfmpError(Exception):
    """Base class for every error raised by the toolkit."""


class SpecError(MfmpError):
    """The column description itself is invalid (CLI exit 1)."""


class SpecFileError(SpecError):
    pass


class MassBalanceViolation(SpecError):
    pass


class SignPatternViolation(SpecError):
    pass


class BadAlphas(SpecError):
    pass


class EmptyStream(SpecError):
    pass


class ZeroVapor(SpecError):
    pass


class ThermalStateError(SpecError):
    pass


class NotTernary(SpecError):
    pass


class ModelInfeasible(MfmpError):
    """The spec is well formed but the model admits no operating point (CLI exit 2)."""


class NonpositiveSectionVapor(ModelInfeasible):
    pass


class NonpositiveReflux(ModelInfeasible):
    pass


class NoFeasibleCandidate(ModelInfeasible):
    def __init__(self, message: str, candidates: list[Any] | None = None) -> None:
        super().__init__(message)
        self.candidates = candidates or []


class OptimizationInfeasible(ModelInfeasible):
    pass


class NumericalError(MfmpError):
    pass


class BracketFailure(NumericalError):
    """No sign change where the root structure requires one."""


class RootOutOfInterval(BracketFailure):
    """A root exists but not inside the interval its section pattern assigns."""


class NonpositiveV(NumericalError):
    pass


class MissingRho(NumericalError):
    pass


class PinchOrderViolation(NumericalError):
    pass


class NoActiveRoot(NumericalError):
    pass


class DegenerateSection(NumericalError):
    pass


class NegativeComposition(NumericalError):
    pass


class NotConverged(NumericalError):
    def __init__(self, message: str, iterations: int = 0, residual: float = float("nan")) -> None:
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class ProductMismatch(UserWarning):
    """A decomposed simple-column product is negative or exceeds its feed."""
