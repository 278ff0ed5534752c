"""Exception hierarchy.

Every numerical failure raised by the package derives from
:class:`IOPseudoError` so callers can trap the whole family at once. The CLI
maps these onto exit codes.
"""


class IOPseudoError(Exception):
    """Base class for all package errors."""


class InvalidSpec(IOPseudoError, ValueError):
    """A model or configuration parameter is out of range."""


class DimensionMismatch(IOPseudoError, ValueError):
    """Matrix shapes do not fit together."""


class SingularMatrix(IOPseudoError):
    """A pivot fell below the singularity threshold.

    For resolvent evaluations this means ``s`` sits (numerically) on the
    spectrum.
    """


class Overflow(IOPseudoError, ArithmeticError):
    """Non-finite entries appeared in a matrix exponential."""


class EmptyLevel(IOPseudoError):
    """No grid cell brackets the requested level."""


class NotBracketed(IOPseudoError):
    """The search window does not bracket the level crossing."""


class DegenerateCurve(IOPseudoError):
    """The polyline has no two-dimensional extent."""


class CurveOpen(IOPseudoError):
    """A closed contour was required."""


class NotEnclosing(IOPseudoError):
    """The contour misses part of the input-output spectrum."""


class Unbounded(IOPseudoError):
    """The resolvent blows up in the right half-plane."""


class QuadratureFail(IOPseudoError):
    """Adaptive quadrature did not reach tolerance."""


class InvalidA(IOPseudoError, ValueError):
    """The semicircle radius factor must exceed one."""


class DecayTooSlow(IOPseudoError):
    """The transfer function does not decay faster than 1/|s|."""


class NotConverged(IOPseudoError):
    """The transient trace was still growing at the horizon."""


class HorizonTooShort(IOPseudoError):
    """The truncated Laplace integral has a non-negligible tail."""
