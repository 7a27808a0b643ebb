"""Exceptions raised by qrwsearch

Every exception knows the module it came from and a short ``kind`` token so the
CLI can print a single machine-parsable line such as::

    error:walk:capacity: n=5 needs 5242880 amplitudes; cap is n <= 4
"""


class QrwsError(Exception):
    """Base class for all qrwsearch errors

    Args:
        message: Human readable description
        module: Name of the module raising the error (e.g. ``coin``)
        kind: Short machine-readable error category
    """

    default_kind = "runtime"

    def __init__(self, message: str, module: str = "qrws", kind: str = ""):
        super().__init__(message)
        self.module = module
        self.kind = kind or self.default_kind

    def line(self) -> str:
        return f"error:{self.module}:{self.kind}: {self}"


class ValidationError(QrwsError, ValueError):
    default_kind = "validation"


class CapacityError(ValidationError):
    default_kind = "capacity"


class FormatError(ValidationError):
    default_kind = "format"


class TrainingError(QrwsError, RuntimeError):
    default_kind = "nonfinite"
