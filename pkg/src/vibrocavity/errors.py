"""Exception hierarchy for the vibrocavity engine.

Every failure mode exposed by the library maps to one of these types so
callers (and the CLI) can translate them into stable exit codes.
"""


class VibrocavityError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(VibrocavityError, ValueError):
    """An argument violates a documented precondition."""


class UnsupportedError(VibrocavityError):
    """A request outside the implemented range (e.g. too-high order)."""


class NumericFailureError(VibrocavityError, ArithmeticError):
    """A numerical routine failed to converge or produced non-finite data."""


class DegenerateEigenvalueError(VibrocavityError):
    """Perturbation formulas were requested at a (near-)degenerate level."""


class DegenerateInputError(VibrocavityError):
    """An input field is identically zero where a nonzero field is required."""


class EnvelopeViolationError(VibrocavityError):
    """A boundary displacement exceeds the admissible amplitude envelope."""


class ContractionViolationError(VibrocavityError):
    """Fixed-point correction norms failed to contract."""


class ResonanceSingularityError(VibrocavityError):
    """Closed-form harmonic integral evaluated exactly on resonance."""


class AssumptionViolationError(VibrocavityError):
    """A modelling assumption (e.g. near-uniform curvature) does not hold."""


class ConfigError(VibrocavityError):
    """Invalid configuration file; carries an optional line anchor."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
