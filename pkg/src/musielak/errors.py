"""Exception hierarchy shared by the numerical modules and the CLI."""


class MusielakError(Exception):
    """Base class for every error raised by this package."""


class DomainError(MusielakError, ValueError):
    """A point lies outside the box on which a field or function is defined."""


class GeometryError(MusielakError, ValueError):
    """A support box escapes the computational domain."""


class UnsupportedOrderError(MusielakError, ValueError):
    """A derivative order is beyond the attached evaluators or stencils."""


class DomainMismatchError(MusielakError, ValueError):
    """Two grid functions live on different grids."""


class PhiRangeError(MusielakError, ArithmeticError):
    """A Phi-function value overflowed to a non-finite number.

    ``index`` is the flat index of the offending node and ``point`` its
    coordinates, when known.
    """

    def __init__(self, message, index=None, point=None):
        super().__init__(message)
        self.index = index
        self.point = point


class ConvergenceError(MusielakError, RuntimeError):
    """An iterative solver hit its iteration cap or could not bracket a root."""


class ConfigError(MusielakError, ValueError):
    """A run configuration is malformed. ``field`` names the offending entry."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field

    def __str__(self):
        base = super().__str__()
        return f"{self.field}: {base}" if self.field else base
