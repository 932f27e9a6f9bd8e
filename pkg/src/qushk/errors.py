"""Exception taxonomy for the qushk package.

Everything raised on purpose derives from :class:`QushkError` so callers can
catch one base. Parameter and configuration problems additionally derive from
``ValueError`` so sloppy call sites still fail the familiar way.
"""

from __future__ import annotations


class QushkError(Exception):
    """Base class for all errors raised by qushk."""


class ParameterError(QushkError, ValueError):
    """A numeric argument is outside its documented domain."""


class ConfigurationError(QushkError, ValueError):
    """A config document or spec object is malformed or inconsistent."""


class InsufficientDataError(QushkError):
    """Too few usable samples for the requested statistic."""

    def __init__(self, message: str, *, n_usable: int = 0, n_zeros: int = 0):
        super().__init__(message)
        self.n_usable = n_usable
        self.n_zeros = n_zeros


class DegenerateDataError(QushkError):
    """Input collapses to a point mass; the statistic exists but carries no
    information (X = U = 0), so estimation is impossible.

    The vanished statistics are attached as ``x`` and ``u``.
    """

    def __init__(self, message: str, *, x: float = 0.0, u: float = 0.0):
        super().__init__(message)
        self.x = x
        self.u = u


class NumericalError(QushkError):
    """A quadrature or iteration failed to converge.

    Diagnostics: ``truncation_point`` is where the integral was cut off,
    ``estimated_tail`` bounds the mass beyond it.
    """

    def __init__(
        self,
        message: str,
        *,
        truncation_point: float | None = None,
        estimated_tail: float | None = None,
    ):
        super().__init__(message)
        self.truncation_point = truncation_point
        self.estimated_tail = estimated_tail


class FitError(QushkError):
    """A regression could not be performed on the given rows.

    ``bad_rows`` lists the offending row indices when that is the cause.
    """

    def __init__(self, message: str, *, bad_rows: list[int] | None = None):
        super().__init__(message)
        self.bad_rows = bad_rows if bad_rows is not None else []


class EmptyMapError(QushkError):
    """No window produced a valid estimate; the parametric map is empty."""


class RasterFormatError(QushkError, IOError):
    """Raster file is truncated, has a bad magic, or an unsupported layout."""
