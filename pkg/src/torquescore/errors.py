"""Exception hierarchy shared by all torquescore modules."""


class TorqueScoreError(Exception):
    """Base class for every error raised by this package."""


class ParseError(TorqueScoreError):
    pass


class ValidationError(TorqueScoreError):
    pass


class DimensionMismatch(TorqueScoreError, ValueError):
    pass


class SingularEulerMap(TorqueScoreError):
    """Euler-rate map is (numerically) singular, i.e. gimbal lock."""


class TooShort(TorqueScoreError):
    pass


class NonIntegerStride(TorqueScoreError):
    pass


class EmptyStack(TorqueScoreError):
    pass


class AllDegenerate(TorqueScoreError):
    pass


class LengthMismatch(TorqueScoreError):
    pass


class TooFewRecords(TorqueScoreError):
    pass


class EmptyStratum(TorqueScoreError):
    pass


class DegenerateVariance(TorqueScoreError):
    pass
