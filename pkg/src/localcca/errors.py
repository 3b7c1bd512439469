"""Exception types raised across the package."""


class LocalCCAError(ValueError):
    """Base class for all errors raised by localcca."""


class SampleCountMismatch(LocalCCAError):
    pass


class DimensionMismatch(LocalCCAError):
    pass


class ZeroMatrix(LocalCCAError):
    pass


class NotSymmetric(LocalCCAError):
    pass


class InsufficientSamples(LocalCCAError):
    pass


class EmptyNeighborhood(LocalCCAError):
    pass


class EmptyAnchors(LocalCCAError):
    pass


class NegativeMetric(LocalCCAError):
    """A quadratic form came out clearly negative (beyond round-off)."""


class DegenerateMetric(LocalCCAError):
    pass


class DegenerateKernel(LocalCCAError):
    pass


class TooManyComponents(LocalCCAError):
    pass


class ZeroTensor(LocalCCAError):
    pass
