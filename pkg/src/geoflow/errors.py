"""Exception hierarchy shared by all geoflow modules.

Every error is either a ValidationError (bad input, CLI exit code 2) or a
NumericalError (the computation itself broke down, CLI exit code 3).
"""

from __future__ import annotations


class GeoflowError(Exception):
    exit_code = 1


class ValidationError(GeoflowError, ValueError):
    exit_code = 2


class NumericalError(GeoflowError, ArithmeticError):
    exit_code = 3


# input validation
class NonFinite(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NotSymmetric(ValidationError):
    pass


class RankMismatch(ValidationError):
    pass


class RankTooHigh(ValidationError):
    pass


class NonPositiveScale(ValidationError):
    pass


class DegenerateData(ValidationError):
    pass


class ZeroRowSum(ValidationError):
    pass


class IndexOutOfRange(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class GridTooCoarse(ValidationError):
    pass


class TooFewGridPoints(ValidationError):
    pass


class VectorsMissing(ValidationError):
    pass


class ZeroVector(ValidationError):
    pass


class DegenerateDesign(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class EmptyCommonSet(ValidationError):
    pass


class RowCountMismatch(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message: str, path: str = "", row: int | None = None, column: int | None = None):
        where = path
        if row is not None:
            where += f":{row}"
            if column is not None:
                where += f":{column}"
        super().__init__(f"{where}: {message}" if where else message)
        self.path = path
        self.row = row
        self.column = column


class ConfigError(ValidationError):
    pass


# numerical breakdowns
class NoConvergence(NumericalError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class NumericalUnderflow(NumericalError):
    pass


class BeamExhausted(NumericalError):
    pass


class AllCommon(NumericalError):
    pass


class AllNonCommon(NumericalError):
    pass


class StageError(GeoflowError):
    """Wraps an error raised inside a pipeline stage, keeping its exit code."""

    def __init__(self, stage: str, cause: GeoflowError):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = cause.exit_code
