"""Exception types shared across the toolkit."""

from __future__ import annotations


class LevithermError(Exception):
    """Base class for all toolkit errors."""


class DomainError(LevithermError, ValueError):
    """An input is outside the physical or mathematical domain of an operation."""


class ParseError(LevithermError):
    """A data or config file failed validation.

    Carries the file path and (1-based) line number of the offending content.
    """

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f" [{path}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(message + where)


class FitFailure(LevithermError):
    """A fit could not produce a usable result.

    ``diagnostics`` holds whatever the fitter knew at the point of failure
    (residual norms, detected features, iteration counts).
    """

    def __init__(self, message: str, diagnostics: dict | None = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class StageError(LevithermError):
    """A pipeline stage failed; names the stage and the offending input."""

    def __init__(self, stage: str, message: str, input_name: str | None = None):
        self.stage = stage
        self.input_name = input_name
        tag = f"stage '{stage}'" + (f" on '{input_name}'" if input_name else "")
        super().__init__(f"{tag}: {message}")
