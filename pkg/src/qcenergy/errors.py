"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract: configuration/usage
problems exit 1, data-level failures (degeneracy, range, coverage,
pairing, ...) exit 2, and failed verification verdicts exit 3.
"""


class QcError(Exception):
    """Base class for all package errors."""


class ConfigurationError(QcError):
    """Invalid construction parameters or malformed spec strings."""


class UsageError(ConfigurationError):
    """Bad command-line invocation."""


class DataError(QcError):
    """Non-finite or otherwise unusable input data."""


class DegeneracyError(DataError):
    """Too many nodes with non-positive Jacobian.

    Carries the offending fraction in ``fraction``.
    """

    def __init__(self, fraction, message=None):
        self.fraction = float(fraction)
        super().__init__(message or f"degenerate fraction {self.fraction:.3%} exceeds threshold")


class DomainValidationError(DataError):
    """Input outside the mathematical domain of an operation (e.g. |mu| >= 1)."""


class RangeError(DataError):
    """A value fell outside an admissible range.

    ``detail`` optionally carries the limiting quantity (e.g. the branch
    limit M of the F-inverse, or offending image points).
    """

    def __init__(self, message, detail=None):
        self.detail = detail
        super().__init__(message)


class PairingError(DataError):
    """Two fields that must be mutually consistent (inverses, shared boundary) are not."""


class CoverageError(DataError):
    """Too few valid nodes to evaluate a diagnostic."""


class TruncationError(DataError):
    """Half-plane truncation too small for the requested conjugation."""


class PoleError(DataError):
    """Evaluation at (or too close to) a pole of a Moebius map."""


class InvertibilityError(DataError):
    """Discrete inversion of a mapping failed to converge."""


class StallError(QcError):
    """Descent could not take a single admissible step."""


class UnsupportedBranchError(ConfigurationError):
    """Closed form or branch not available for the requested sign of lambda."""
