"""Exceptions raised by the qdfolner modules.

Every error carries the process exit code the command line maps it to:
2 for a rejected spec file, 3 for anything that goes wrong while computing.
"""


class QdError(Exception):
    exit_code = 3


class InvalidSpec(QdError):
    exit_code = 2


class WeightUndefined(QdError):
    pass


class UnboundedSupport(QdError):
    pass


class WindowTooSmall(QdError):
    pass


class NumericalFailure(QdError):
    pass


class TooFewSamples(QdError):
    pass


class NotQuasidiagonalAlongFamily(QdError):
    pass


class SelectorOutOfRange(QdError):
    pass


class NotHermitian(QdError):
    pass


class RankStall(QdError):
    pass


class NotNormal(QdError):
    pass


class NonOrthogonalRanges(QdError):
    pass


class NonHermitianCompression(QdError):
    pass


class DegreeExceedsWindow(QdError):
    pass
