"""Exception hierarchy shared by the library and the command line."""

from __future__ import annotations


class ParameterError(ValueError):
    """A model or waveform parameter is outside its valid domain."""


class UnsupportedPhaseError(ValueError):
    """The closed-form charge integral was requested for a phase-shifted drive."""


class SimulationError(RuntimeError):
    pass


class StepSizeError(SimulationError):
    pass


class PositivityError(SimulationError):
    """Device resistance collapsed below the representable floor during a circuit run."""


class AnalysisError(ValueError):
    pass


class InsufficientDataError(AnalysisError):
    pass


class NoPeaksError(AnalysisError):
    pass


class GridMismatchError(AnalysisError):
    pass


class ScenarioError(ValueError):
    """Malformed or invalid scenario document.

    ``line`` and ``column`` are 1-based and may be ``None`` when the problem is
    not tied to a location (e.g. a missing section).
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)
