"""Error hierarchy for q-series evaluation.

``ParameterError`` subclasses describe inputs that violate a hypothesis of
the summation theory (the ``qsum`` command exits with status 2), while
``ConvergenceError`` means a term cap or summation window was exhausted
(exit status 1).
"""


class QSeriesError(RuntimeError):
    """Base class for every error raised by the qseries package."""


class ParameterError(QSeriesError, ValueError):
    """Raised when parameters violate a standing assumption."""

    invariant = "parameter validity"


class DomainError(ParameterError):
    """Raised when an argument lies outside the domain of a function (e.g. theta at 0)."""

    invariant = "nonzero argument"


class PoleError(ParameterError):
    """Raised when an evaluation point hits (or comes too close to) a pole spiral."""

    invariant = "pole proximity"

    def __init__(self, message: str, *, index: int | None = None, proximity: float | None = None) -> None:
        super().__init__(message)
        self.index = index
        self.proximity = proximity


class ResonanceError(ParameterError):
    """Raised when a_i / a_j lies in q^Z."""

    invariant = "nonresonant upper parameters"

    def __init__(self, message: str, *, i: int, j: int, m: int) -> None:
        super().__init__(message)
        self.i = i
        self.j = j
        self.m = m


class ForbiddenDirectionError(ParameterError):
    """Raised when the summation anchor lambda lies on [(-1)^k; q]."""

    invariant = "forbidden direction"


class RegionError(ParameterError):
    """Raised when a convergent expansion is requested outside its region."""

    invariant = "expansion region"


class DivergenceError(ParameterError):
    """Raised when a convergent evaluator is asked to sum a divergent series."""

    invariant = "convergent regime"


class BranchError(ParameterError):
    """Raised when the branch condition of the q -> 1 limit is violated."""

    invariant = "branch condition"


class SectorError(ParameterError):
    """Raised when x lies outside the summability sector of the classical Borel sum."""

    invariant = "summability sector"


class ConvergenceError(QSeriesError):
    """Raised when a series, product or Jackson window fails to settle within its cap."""

    invariant = "convergence"
