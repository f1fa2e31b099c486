"""Exception types shared across the pipeline.

``DataError`` subclasses map to CLI exit code 3, ``NumericError`` to 4.
"""
from __future__ import annotations


class TafError(Exception):
    pass


class DataError(TafError):
    pass


class ParseError(DataError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class SchemaError(DataError):
    pass


class DegenerateInputError(DataError):
    pass


class SegmentationError(DataError):
    pass


class InsufficientKeyframesError(DataError):
    pass


class CoverageError(DataError):
    pass


class GapError(DataError):
    pass


class FormatError(DataError):
    pass


class ShapeError(DataError):
    pass


class ParameterError(TafError, ValueError):
    pass


class NumericError(TafError, FloatingPointError):
    def __init__(self, message: str, layer: str | None = None):
        self.layer = layer
        super().__init__(f"{layer}: {message}" if layer else message)


class StationaryHandWarning(UserWarning):
    """A hand never moves, so its speed signal is all zeros."""
