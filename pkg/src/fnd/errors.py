"""Exception hierarchy for the fnd toolkit.

Every error raised on purpose derives from FndError so callers can catch
toolkit failures without swallowing programming errors.
"""


class FndError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(FndError):
    """A parameter, configuration value, or input violates a precondition."""


class DataIOError(FndError):
    """A data or model file could not be read or written."""

    def __init__(self, message: str, path: str):
        super().__init__(f"{message}: {path}")
        self.path = path


class SchemaError(FndError):
    """An input file does not match its expected schema."""


class CsvParseError(FndError):
    """A CSV record is malformed."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class TrainingError(FndError):
    """Model training failed or did not converge."""

    def __init__(self, message: str, dual_objective: float | None = None,
                 kkt_violation: float | None = None):
        if dual_objective is not None:
            message = (f"{message} (dual objective {dual_objective:.6g}, "
                       f"max KKT violation {kkt_violation:.3g})")
        super().__init__(message)
        self.dual_objective = dual_objective
        self.kkt_violation = kkt_violation


class CalibrationError(FndError):
    """Bandwidth calibration could not reach the requested perplexity."""


class StoreFormatError(FndError):
    """A model file does not start with the expected magic tag."""


class StoreVersionError(FndError):
    """A model file was written by a newer format version."""


class StoreCorruptionError(FndError):
    """A model file is truncated or internally inconsistent."""


class PipelineError(FndError):
    """Pipeline stages were combined incompatibly (e.g. feature-space mismatch)."""


class UnsupportedOperationError(FndError):
    """The model does not carry the provenance needed for this operation."""
