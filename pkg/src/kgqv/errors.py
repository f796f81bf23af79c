"""Exception types shared across the package.

The CLI maps these onto exit codes: usage problems exit 2, numeric
failures exit 3, a failed acceptance bound exits 1.
"""


class KgqvError(Exception):
    """Base class for package errors."""


class UsageError(KgqvError):
    """Bad configuration or command-line input."""


class DomainError(KgqvError):
    """A point or index falls outside the domain it must lie in."""


class GridAlignmentError(UsageError):
    """An increment or evaluation point is not aligned with the lattice."""


class CouplingError(KgqvError):
    """Pathwise-coupled fields do not share a grid or noise realization."""


class NumericError(KgqvError):
    """A computed statistic is non-finite or otherwise unusable."""


class QuadratureError(KgqvError):
    """A quadrature did not converge to the requested tolerance."""


class OracleError(KgqvError):
    """The fixed-point oracle failed to contract."""
