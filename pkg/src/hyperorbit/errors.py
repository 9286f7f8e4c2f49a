"""Exception taxonomy shared across the package."""

from __future__ import annotations


class HyperorbitError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(HyperorbitError):
    """Operands have incompatible shapes or stage indices."""


class FieldMismatch(HyperorbitError):
    """Mixed real/complex operands where a single scalar field is required."""


class ZeroModulus(HyperorbitError):
    """A nonzero scalar was required (log-magnitude sentinel hit)."""


class UnitModulusDenominator(HyperorbitError):
    """log-ratio denominator has modulus 1, so the ratio is undefined."""


class SpectralOrderViolation(HyperorbitError):
    """Diagonal moduli are not strictly ordered as required."""


class StageOutOfRange(HyperorbitError):
    """Stage index s outside 1..n-1."""


class SeedFirstCoordinateZero(HyperorbitError):
    """Steering requires a seed with nonzero first coordinate."""


class ZeroFirstCoordinate(HyperorbitError):
    """The projective chart needs a vector with nonzero first coordinate."""


class PhiDivergence(HyperorbitError):
    """Projective chart evaluated at a vector with (near-)zero first coordinate."""


class PrecViolation(HyperorbitError):
    """A required strict precedence between generating pairs does not hold."""


class SingularAminusI(HyperorbitError):
    """A - I is singular; the affine fixed-point column is undefined."""


class BudgetExceeded(HyperorbitError):
    """An enumeration or search would exceed its configured budget."""


class SteerNotFound(HyperorbitError):
    """No admissible word/exponent pair found within the search budget.

    A normal outcome for tight tolerances; carries diagnostics for reports.
    """

    def __init__(self, message: str, *, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class MalformedInput(HyperorbitError):
    """A file or literal failed schema validation."""
