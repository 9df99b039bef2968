"""Exception hierarchy shared by all filtercast modules."""


class FiltercastError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(FiltercastError, ValueError):
    """An argument is outside its admissible range."""


class DayRangeError(FiltercastError, ValueError):
    """An event falls outside the requested day range."""


class DegenerateSeriesError(FiltercastError, ValueError):
    """The series carries no variation (or no mass) for the requested statistic."""


class LengthError(FiltercastError, ValueError):
    """A series is too short for the requested operation."""


class ParseError(FiltercastError, ValueError):
    """A CSV row could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(FiltercastError, ValueError):
    """A parsed value violates a data invariant (e.g. a score above 100)."""


class AlignmentError(FiltercastError, ValueError):
    """Series that must line up have different lengths."""


class ShapeError(FiltercastError, ValueError):
    """An input array has the wrong shape for the model."""


class ConvergenceError(FiltercastError, RuntimeError):
    """The optimiser hit its iteration cap; ``best`` holds the best-so-far fit."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DivergenceError(FiltercastError, RuntimeError):
    """Training produced a non-finite loss; try a smaller learning rate."""


class GridSearchError(FiltercastError, RuntimeError):
    """Every cell of an order grid failed to fit."""

    def __init__(self, failures):
        self.failures = dict(failures)
        lines = ", ".join(f"{order}: {err}" for order, err in self.failures.items())
        super().__init__(f"all {len(self.failures)} grid cells failed ({lines})")


class LookAheadError(FiltercastError, IndexError):
    """A forecast tried to read a value from its own future."""
