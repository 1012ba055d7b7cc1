"""Exception hierarchy.

Validation problems (bad configs, out-of-domain inputs) and numerical failures
are kept apart because the CLI maps them to different exit codes.
"""


class NumericalError(RuntimeError):
    """A computation could not be completed to the required accuracy."""


class ConvergenceError(NumericalError):
    """A series or iteration did not meet its stopping rule."""


class IllConditionedError(NumericalError):
    """A linear system is singular or too ill-conditioned to trust."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class SpectralStructureError(NumericalError):
    """The Gram-matrix spectrum does not have the expected null-space structure.

    ``check`` names the failed test: ``"null_count"``, ``"gap"`` or ``"singular_A"``.
    """

    def __init__(self, check: str, message: str):
        super().__init__(f"{check}: {message}")
        self.check = check


class StepError(NumericalError):
    """Wraps a failure inside ``simulate`` with the step index where it happened."""

    def __init__(self, step: int, cause: Exception):
        super().__init__(f"step {step}: {cause}")
        self.step = step
        self.cause = cause


class ConfigError(ValueError):
    """Invalid run configuration."""
