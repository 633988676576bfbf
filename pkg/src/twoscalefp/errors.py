"""Exception types for numerical failures (as opposed to rejected inputs)."""


class QuadratureError(RuntimeError):
    """A quadrature self-check did not converge to the requested tolerance."""


class NumericsError(RuntimeError):
    """A numerical invariant was violated during a computation."""
