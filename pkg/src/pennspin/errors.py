"""Exception hierarchy shared by every pennspin module."""


class PennspinError(Exception):
    """Base class for all library errors."""


# physical model
class NonPositiveInput(PennspinError, ValueError):
    pass


class HierarchyViolation(PennspinError, ValueError):
    """Raised when omega_m << omega_z << omega_c does not hold."""


class ZeroSpacing(PennspinError, ValueError):
    pass


# operator core
class SiteOutOfRange(PennspinError, IndexError):
    pass


class DuplicateSite(PennspinError, ValueError):
    pass


class NotHermitian(PennspinError, ValueError):
    pass


class DimMismatch(PennspinError, ValueError):
    pass


class SpecMismatch(PennspinError, ValueError):
    pass


# pulses
class BadSubset(PennspinError, ValueError):
    pass


class StepFailure(PennspinError, RuntimeError):
    pass


# compiler / verifier
class UnsupportedVariant(PennspinError, ValueError):
    pass


class NonDiagonalSchedule(PennspinError, ValueError):
    pass


class InsufficientPoints(PennspinError, ValueError):
    pass


class RuntimeGuard(PennspinError, RuntimeError):
    """A requested size (N, m) exceeds the configured computational caps."""


# cli
class ConfigError(PennspinError, ValueError):
    pass


class ParseError(PennspinError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SpanTooLong(RuntimeWarning):
    """Warning: J^z t exceeds the range where short-time expansions hold."""
