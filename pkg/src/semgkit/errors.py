"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class SemgError(Exception):
    """Base class; the CLI maps any subclass to a structured diagnostic."""

    code = "error"

    def diagnostic(self) -> dict:
        return {"error": self.code, "message": str(self)}


# filter design / application
class DesignInfeasible(SemgError, ValueError):
    code = "design_infeasible"


class InvalidOrder(SemgError, ValueError):
    code = "invalid_order"


class TooShort(SemgError, ValueError):
    code = "too_short"


# ingestion
class ParseError(SemgError, ValueError):
    """Ingestion failure tied to a line of the input file."""

    code = "parse_error"

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)

    def diagnostic(self) -> dict:
        d = super().diagnostic()
        d["line"] = self.line
        return d


class MalformedRow(ParseError):
    code = "malformed_row"


class ChannelCountMismatch(ParseError):
    code = "channel_count_mismatch"


class NonFiniteValue(ParseError):
    code = "non_finite_value"


class MalformedHeader(ParseError):
    code = "malformed_header"


class EmptyInput(ParseError):
    code = "empty_input"


class OverlappingIntervals(ParseError):
    code = "overlapping_intervals"

    def __init__(self, i: int, j: int, line: int | None = None):
        self.i, self.j = i, j
        super().__init__(f"intervals {i} and {j} overlap", line)


class UnsortedIntervals(ParseError):
    code = "unsorted_intervals"


class UnknownLabel(ParseError):
    code = "unknown_label"

    def __init__(self, text: str, line: int | None = None):
        self.text = text
        super().__init__(f"unknown label {text!r}", line)


class InvalidSession(SemgError):
    code = "invalid_session"

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))

    def diagnostic(self) -> dict:
        d = super().diagnostic()
        d["violations"] = self.violations
        return d


# activity
class MissingPhase(SemgError, ValueError):
    code = "missing_phase"

    def __init__(self, label):
        self.label = label
        super().__init__(f"no {getattr(label, 'value', label)} phase in annotations")

    def diagnostic(self) -> dict:
        d = super().diagnostic()
        d["label"] = getattr(self.label, "value", self.label)
        return d


class EmptyAfterTrim(SemgError, ValueError):
    code = "empty_after_trim"


class RestBelowFloor(SemgError, ValueError):
    code = "rest_below_floor"


# models
class InsufficientClassRows(SemgError, ValueError):
    code = "insufficient_class_rows"


class SingularCovariance(SemgError, ValueError):
    code = "singular_covariance"


class NonFiniteLoss(SemgError, FloatingPointError):
    code = "non_finite_loss"


class SchemaMismatch(SemgError, ValueError):
    code = "schema_mismatch"


class SameSessionSplit(SemgError, ValueError):
    code = "same_session_split"
