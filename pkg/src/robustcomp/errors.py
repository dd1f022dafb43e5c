"""Exception types shared across the package."""


class EstimatorError(ValueError):
    """Domain error raised by an estimator for inadmissible input."""


class EmptySampleError(EstimatorError):
    """The input multiset was empty."""


class DegenerateInputError(EstimatorError):
    """Input admits no answer (e.g. a line fit with all x equal)."""


class ChainError(ValueError):
    """Composite levels do not chain, or dataset depth does not match."""


class ConfigError(ValueError):
    """Invalid run configuration (ladder, scenario sizes, target set)."""


class ParseError(ValueError):
    """Dataset file could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConvergenceError(RuntimeError):
    """An iterative solver failed to converge; carries the best value seen."""

    def __init__(self, message: str, best: float | None = None):
        self.best = best
        super().__init__(message)
