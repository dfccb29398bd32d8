"""
Exception hierarchy shared by every Evidence Network module

Library code raises these; only the command line maps them to exit codes.
"""

from typing import Optional


class EvidenceNetworkError(Exception):
    """Base class for all errors raised by this package"""


class InvalidArgumentError(EvidenceNetworkError, ValueError):
    """Shapes, sizes or parameter values outside an operation's contract"""


class ConfigError(InvalidArgumentError):
    """Invalid or unknown run-configuration key"""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class DomainError(EvidenceNetworkError, ValueError):
    """Loss argument outside the valid domain of its loss kind"""

    def __init__(self, kind: str, valid_range: str, detail: str = ""):
        self.kind = kind
        self.valid_range = valid_range
        message = f"{kind} loss requires f in {valid_range}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class NumericError(EvidenceNetworkError, ArithmeticError):
    """Non-finite values or failed factorizations"""

    def __init__(self, message: str, location: Optional[str] = None):
        self.location = location
        super().__init__(f"{message} [at {location}]" if location else message)


class TrainingError(NumericError):
    """Training aborted; carries enough context to find the offending batch"""

    def __init__(
        self,
        message: str,
        epoch: Optional[int] = None,
        batch: Optional[int] = None,
        member: Optional[int] = None,
    ):
        self.reason = message
        self.epoch = epoch
        self.batch = batch
        self.member = member
        parts = []
        if member is not None:
            parts.append(f"member {member}")
        if epoch is not None:
            parts.append(f"epoch {epoch}")
        if batch is not None:
            parts.append(f"batch {batch}")
        super().__init__(message, location=", ".join(parts) or None)

    def for_member(self, member: int) -> "TrainingError":
        """Return a copy annotated with the ensemble member index"""
        return TrainingError(self.reason, self.epoch, self.batch, member)


class DiagnosticError(EvidenceNetworkError, RuntimeError):
    """An oracle or validator could not produce a meaningful answer"""


class CalibrationFailure(DiagnosticError):
    """Coverage test ran but the residual summary is outside the pass thresholds"""
