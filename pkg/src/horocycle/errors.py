"""Exception and warning types."""


class HorocycleError(Exception):
    """Base class for numerical failures raised by this package."""


class NonIntegrableError(HorocycleError):
    """The transform integrand does not decay fast enough to be integrated."""


class NaNEncountered(HorocycleError, FloatingPointError):
    pass


class DecayOverflowError(HorocycleError, OverflowError):
    pass


class DiagonalDegeneracyError(HorocycleError):
    """First-kind kernel vanishes (numerically) on the diagonal."""


class IncompatibleDataError(HorocycleError):
    """Right-hand side violates ``f(a) = 0`` for a first-kind equation."""


class SingularStepError(HorocycleError):
    pass


class DataTooCoarseError(HorocycleError):
    pass


class SupportClaimError(HorocycleError, ValueError):
    """A function claimed to vanish below some height does not."""


class TruncationWarning(UserWarning):
    """A truncated integral has a tail bound above the requested tolerance."""


class OrderLossWarning(UserWarning):
    """Numerical differentiation lowered the expected order of accuracy."""
