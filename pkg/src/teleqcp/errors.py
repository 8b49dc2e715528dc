"""Exception hierarchy shared by all teleqcp modules."""


class TeleqcpError(Exception):
    """Base class for all errors raised by this package."""


class DimensionOverflow(TeleqcpError):
    """Requested chain length exceeds the configured memory budget."""


class NoBracket(TeleqcpError):
    """A root could not be bracketed inside the allowed search interval."""


class NonConvergence(TeleqcpError):
    """An iterative solver exhausted its iteration budget."""


class UnsupportedRegime(TeleqcpError):
    """The requested transition does not exist for the given parameters."""


class QuadratureNonConvergence(TeleqcpError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class NotPositive(TeleqcpError):
    """An assembled density matrix has a significantly negative eigenvalue."""


class InvalidForModel(TeleqcpError):
    """Correlator data violates a symmetry required by the target model."""


class ZeroProbabilityOutcome(TeleqcpError):
    """Conditioning on a measurement outcome of (numerically) zero probability."""


class SeriesTooShort(TeleqcpError):
    """Not enough grid points for the requested finite-difference stencil."""


class EmptyWindow(TeleqcpError):
    """A search window contains no grid points."""


class InsufficientPoints(TeleqcpError):
    """Too few data points for the requested regression."""


class SingularFit(TeleqcpError):
    """The regression design matrix is singular or ill-conditioned."""


class IncompatibleBackend(TeleqcpError):
    """The chosen correlator backend cannot handle the chosen model family."""
