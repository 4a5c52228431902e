"""Exception types shared across the package."""


class JCLatticeError(Exception):
    """Base class for all package-specific errors."""


class NoCrossingError(JCLatticeError):
    """Bisection target function has no sign change on the search interval.

    Carries the endpoint values so callers can report why the search failed.
    """

    def __init__(self, message: str, f_lo: float, f_hi: float):
        super().__init__(message)
        self.f_lo = f_lo
        self.f_hi = f_hi


class CapacityError(JCLatticeError):
    """Requested exact-diagonalization problem exceeds the hard size limit."""


class ConvergenceError(JCLatticeError):
    """Iterative eigensolver failed to converge; carries the last residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class StiffnessError(JCLatticeError):
    """Adaptive integrator step size underflowed."""


class IntegrationQualityError(JCLatticeError):
    """Evolved density matrix violated physicality diagnostics beyond tolerance."""
