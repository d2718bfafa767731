"""Exception hierarchy shared by all wmsync modules."""


class WmsyncError(Exception):
    """Base class for every error raised by this package."""


class InvalidMatrixError(WmsyncError, ValueError):
    """A matrix or probability row violates stochasticity constraints."""


class DegenerateRowError(InvalidMatrixError):
    """A row cannot be renormalised because its remaining mass is zero."""


class NumericError(WmsyncError, ArithmeticError):
    """A numerical routine failed (singular system, no unique solution)."""


class MatrixNotFoundError(WmsyncError, RuntimeError):
    """Rejection sampling ran out of attempts.

    The closest candidate seen is kept on ``best`` as ``(a4, a3, entropy)``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConfigError(WmsyncError, ValueError):
    """Inconsistent decoder or experiment configuration."""


class DecoderFailure(WmsyncError, RuntimeError):
    """A lattice column lost all probability mass."""
