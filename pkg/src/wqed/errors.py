"""Exception types shared across the library."""


class WqedError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(WqedError):
    """A physical parameter is outside its allowed range."""


class DegenerateRootsError(WqedError):
    """The two bound-state roots coincide (lambda1 == lambda2).

    This happens only on a measure-zero parameter set; callers may nudge
    omega_rabi by ~1e-9 and retry.
    """


class QuadratureError(WqedError):
    """Adaptive quadrature failed to reach the requested tolerance.

    Carries the best estimate and the achieved error so callers can decide
    whether to accept the partial result.
    """

    def __init__(self, message, estimate=None, achieved_error=None):
        super().__init__(message)
        self.estimate = estimate
        self.achieved_error = achieved_error
