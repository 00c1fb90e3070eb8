class VolterraLabError(Exception):
    """Base class for every error raised by the library."""


class DomainError(VolterraLabError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ConvergenceError(VolterraLabError):
    """An iterative evaluation did not reach its tolerance within the iteration cap."""


class QuadratureError(VolterraLabError):
    """A quadrature could not certify its relative error tolerance."""


class NotPositiveDefinite(VolterraLabError):
    """A covariance matrix could not be Cholesky factorized even after jitter."""


class UnboundedDrift(VolterraLabError):
    """A drift without a finite sup bound was used where boundedness is required."""


class InsufficientSamples(VolterraLabError):
    """Too few samples (or hits) to form the requested estimate."""


class MismatchedEnsembles(VolterraLabError):
    """Two ensembles that must be paired differ in seeds, paths or grids."""


class IoError(VolterraLabError, OSError):
    """An output file could not be written."""


class ParseError(VolterraLabError):
    """
    A config line could not be parsed.

    Attributes:
        line_number (int): 1-based line number in the config text
    """
    def __init__(self, message: str, line_number: int = None):
        self.line_number = line_number
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(f"{prefix}{message}")


class ValidationError(VolterraLabError):
    """
    A parsed config value violates an invariant.

    Attributes:
        field (str): dotted section.key of the offending value
    """
    def __init__(self, message: str, field: str = None):
        self.field = field
        prefix = f"[{field}] " if field else ""
        super().__init__(f"{prefix}{message}")


class ConfigError(VolterraLabError):
    """
    Aggregates every parse and validation error found in one config.

    Attributes:
        errors (list): ParseError / ValidationError instances in discovery order
    """
    def __init__(self, errors: list):
        self.errors = list(errors)
        joined = "; ".join(str(e) for e in self.errors)
        super().__init__(f"{len(self.errors)} config error(s): {joined}")
