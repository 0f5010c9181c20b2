"""Exception taxonomy.

Two roots: :class:`InputError` for invalid caller-supplied values or data
(CLI exit code 2) and :class:`NumericalError` for runtime numerical failures
(CLI exit code 3). Everything raised on purpose by this package derives from
one of the two.
"""

from __future__ import annotations


class InputError(ValueError):
    """A caller-supplied argument, matrix, or file failed validation."""


class NumericalError(RuntimeError):
    """A numerical procedure failed at runtime despite valid inputs."""


class ConvergenceError(NumericalError):
    """An eigensolve did not reach the requested residual tolerance.

    Carries the best residual achieved so callers can report how close the
    solve came.
    """

    def __init__(self, message: str, best_residual: float | None = None):
        super().__init__(message)
        self.best_residual = best_residual


class SupportSelectionError(NumericalError):
    """No threshold in the ladder produced an admissible support."""


class QuantizationError(NumericalError):
    """The integer correction step of the quantizer had no valid move."""


class PackingInfeasibleError(NumericalError):
    """Rejection sampling into the low-coherence set essentially never succeeds."""
