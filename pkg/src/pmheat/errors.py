"""Exception and warning types shared across the package."""


class PMHeatError(Exception):
    """Base class for all errors raised by pmheat."""


class DomainError(PMHeatError, ValueError):
    """An argument lies outside the domain where a formula is valid."""


class SingularityError(PMHeatError, ValueError):
    """Evaluation requested at a singular point (a pole, or xi = 0)."""


class ShapeError(PMHeatError, ValueError):
    """Fields or grids that must match do not."""


class RefusalError(PMHeatError):
    """The solver refuses to run because the contraction factor is >= 1."""

    def __init__(self, message, tau=None):
        super().__init__(message)
        self.tau = tau


class NonConvergenceError(PMHeatError):
    """Picard iteration hit max_iter before reaching the tolerance."""

    def __init__(self, message, diffs=None):
        super().__init__(message)
        self.diffs = list(diffs) if diffs is not None else []


class AccuracyWarning(UserWarning):
    """A numerical result may be less accurate than usual."""


class GridEdgeWarning(AccuracyWarning):
    """A supremum was attained at the first or last node of a radial grid."""
