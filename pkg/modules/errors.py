"""
Exception hierarchy shared by every stablemix module.

ConfigError      -> usage problems (exit code 2)
ValidationError  -> malformed domain objects (measure, grid, operator, coefficient)
NumericError     -> numeric failures (exit code 3)
"""
from dataclasses import dataclass


class StableMixError(Exception):
    """Root of all stablemix errors."""


# =====================================================
# Configuration
# =====================================================
@dataclass(frozen=True)
class ConfigIssue:
    line: int | None
    key: str
    message: str

    def __str__(self):
        where = f"line {self.line}" if self.line is not None else "config"
        return f"{where}: {self.key}: {self.message}"


class ConfigError(StableMixError):
    def __init__(self, issues):
        if isinstance(issues, str):
            issues = [ConfigIssue(None, "config", issues)]
        self.issues = list(issues)
        super().__init__("; ".join(str(issue) for issue in self.issues))


# =====================================================
# Validation of domain objects
# =====================================================
class ValidationError(StableMixError, ValueError):
    pass


class MeasureError(ValidationError):
    pass


class GridError(ValidationError):
    pass


class OperatorError(ValidationError):
    pass


class CoefficientError(ValidationError):
    pass


# =====================================================
# Numeric failures
# =====================================================
class NumericError(StableMixError):
    pass


class StencilTooLargeError(NumericError):
    pass


class SolverError(NumericError):
    def __init__(self, message, last_residual=None):
        super().__init__(message)
        self.last_residual = last_residual


class NoContractionError(NumericError):
    def __init__(self, message, ratios=()):
        super().__init__(message)
        self.ratios = list(ratios)


class BarrierError(NumericError):
    pass


class UnderResolvedError(NumericError):
    pass


class FitError(NumericError):
    pass


class RegionError(NumericError):
    pass
