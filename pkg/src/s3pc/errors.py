"""Exception hierarchy shared by every layer of the package."""


class S3PCError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(S3PCError, ValueError):
    """Operand dimensions do not chain."""


class NonFiniteError(S3PCError, ValueError):
    """A matrix contains NaN or Inf."""


class SingularMatrixError(S3PCError, ArithmeticError):
    """Pivot fell below the singularity threshold during inversion."""


class DegenerateMatrixError(S3PCError, ArithmeticError):
    """Full-rank decomposition requested for an all-zero matrix."""


class UnsupportedDimensionsError(S3PCError, ValueError):
    """Dimensions too small to satisfy a disguising-rank constraint."""


class WireFormatError(S3PCError, ValueError):
    """Bytes do not decode to a valid envelope."""


class TransportError(S3PCError):
    """A message could not be delivered or was never received."""

    def __init__(self, message, *, session=None, step=None, role=None):
        ctx = []
        if session is not None:
            ctx.append(f"session={session}")
        if step is not None:
            ctx.append(f"step={step}")
        if role is not None:
            ctx.append(f"role={role}")
        if ctx:
            message = f"{message} ({', '.join(ctx)})"
        super().__init__(message)
        self.session = session
        self.step = step
        self.role = role


class UnknownSessionError(S3PCError, KeyError):
    """The ledger has no record of the requested session."""


class MetricError(S3PCError, ValueError):
    """A metric is undefined for the given inputs (zero norm, length mismatch)."""
