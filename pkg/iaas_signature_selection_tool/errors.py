"""Exception hierarchy for the selection pipeline.

Every failure raised by the library derives from SelectionError. The CLI maps
ConfigError and ArtifactError to exit code 1 and every other SelectionError
to exit code 2.
"""

from dataclasses import dataclass, field


@dataclass
class ErrorDetail:
    """Structured context attached to a SelectionError."""

    kind: str
    timestamps: list[int] = field(default_factory=list)
    attribute: str | None = None
    line_number: int | None = None
    line_content: str | None = None


class SelectionError(Exception):
    """Base exception for every domain failure."""

    kind = "SelectionError"

    def __init__(self, message: str, detail: ErrorDetail | None = None) -> None:
        """Initialize with error message and optional detailed error info.

        Args:
            message: Error message
            detail: Structured error context
        """
        super().__init__(message)
        self.detail = detail if detail is not None else ErrorDetail(kind=self.kind)


class EmptySeries(SelectionError):
    kind = "EmptySeries"


class LengthMismatch(SelectionError):
    kind = "LengthMismatch"


class ZeroRange(SelectionError):
    kind = "ZeroRange"


class ZeroVariance(SelectionError):
    kind = "ZeroVariance"


class TooShort(SelectionError):
    kind = "TooShort"


class NonFiniteValue(SelectionError):
    kind = "NonFiniteValue"


class AttributeMismatch(SelectionError):
    kind = "AttributeMismatch"


class CoverageGap(SelectionError):
    """Raised when some timestamps of the reference period have no observation."""

    kind = "CoverageGap"

    def __init__(self, missing: list[int]) -> None:
        shown = ", ".join(str(t) for t in missing[:20])
        suffix = ", ..." if len(missing) > 20 else ""
        super().__init__(
            f"No observation covers {len(missing)} timestamp(s): {shown}{suffix}",
            ErrorDetail(kind=self.kind, timestamps=list(missing)),
        )
        self.missing = list(missing)


class OutOfRange(SelectionError):
    kind = "OutOfRange"


class EmptyWorkload(SelectionError):
    kind = "EmptyWorkload"


class InvalidWorkload(SelectionError):
    kind = "InvalidWorkload"


class TrialTooLong(SelectionError):
    kind = "TrialTooLong"


class InvalidTrialLength(SelectionError):
    kind = "InvalidTrialLength"


class TooFewWorkloads(SelectionError):
    kind = "TooFewWorkloads"


class NoAttributes(SelectionError):
    kind = "NoAttributes"


class EmptyPlan(SelectionError):
    kind = "EmptyPlan"


class SignatureTooShort(SelectionError):
    kind = "SignatureTooShort"


class ZeroSignatureValue(SelectionError):
    """Raised when SPD would divide by a zero signature value."""

    kind = "ZeroSignatureValue"

    def __init__(self, attribute: str, timestamp: int) -> None:
        super().__init__(
            f"Signature of '{attribute}' is zero at trial timestamp {timestamp}",
            ErrorDetail(kind=self.kind, timestamps=[timestamp], attribute=attribute),
        )


class NotPermutation(SelectionError):
    kind = "NotPermutation"


class NoProviders(SelectionError):
    kind = "NoProviders"


class MixedMethods(SelectionError):
    kind = "MixedMethods"


class HorizonMismatch(SelectionError):
    kind = "HorizonMismatch"


class WindowMismatch(SelectionError):
    kind = "WindowMismatch"


class WorkloadParseError(SelectionError):
    """Raised when a workload CSV line cannot be parsed."""

    kind = "ParseError"

    def __init__(self, message: str, line_number: int, line_content: str) -> None:
        super().__init__(
            f"Error at line {line_number}: {message}",
            ErrorDetail(kind=self.kind, line_number=line_number, line_content=line_content),
        )
        self.line_number = line_number


class MissingCapacity(SelectionError):
    kind = "MissingCapacity"


class ConfigError(SelectionError):
    kind = "ConfigError"


class ArtifactError(SelectionError):
    kind = "ArtifactError"
