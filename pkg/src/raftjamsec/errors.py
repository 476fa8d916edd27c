"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


class UnsupportedExponentError(DomainError):
    """Pathloss exponent alpha <= 2, where the interference integral diverges."""


class DegenerateGeometryError(DomainError):
    """A receiver coincides with a transmitter, or the network has no followers."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance.

    The best estimate and its error bound are kept so callers can decide
    whether the partial result is still usable.
    """

    def __init__(self, message, estimate, error):
        super().__init__(f"{message} (estimate={estimate!r}, error={error!r})")
        self.estimate = estimate
        self.error = error
