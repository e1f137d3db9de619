"""Exception types raised across the toolkit."""


class DomainError(ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class NoRootInUnitInterval(ValueError):
    """The Laplace exponent does not change sign on (0, 1)."""

    def __init__(self, psi_half):
        self.psi_half = psi_half
        super().__init__(f"psi has no sign change on (0, 1); psi(1/2) = {psi_half!r}")


class ConvergenceFailure(RuntimeError):
    """An adaptive limit did not reach its residual target."""


class SlowDecay(RuntimeError):
    """The Mellin integrand does not decay fast enough for a truncated inversion."""


class IllConditioned(RuntimeError):
    """A moment-based quadrature rule came out with invalid nodes or weights."""


class IdentityViolation(AssertionError):
    """Two independent computations of the same object disagree."""


class NegativeNormResidual(ArithmeticError):
    """A squared norm came out negative beyond rounding; raise the precision."""


class ClockOverrun(RuntimeError):
    """The simulated Lamperti clock does not reach the requested time."""
