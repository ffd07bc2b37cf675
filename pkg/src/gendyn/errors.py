"""Exception hierarchy shared by all gendyn modules."""


class GendynError(Exception):
    """Base class for every error raised by gendyn."""


# rmt
class EmptyRegion(GendynError, ValueError):
    pass


class NotDetectable(GendynError, ValueError):
    """A training-data singular value sits inside (or at the edge of) the MP bulk."""


# dynamics
class InvalidInit(GendynError, ValueError):
    pass


class NonPositiveMode(GendynError, ValueError):
    pass


class OutOfRange(GendynError, ValueError):
    pass


# theory
class ConfigInvalid(GendynError, ValueError):
    pass


class BelowThreshold(GendynError, ValueError):
    pass


class RegimeError(GendynError, ValueError):
    pass


# simulator
class DimError(GendynError, ValueError):
    pass


class ModeError(GendynError, ValueError):
    pass


class MissingDataset(GendynError, ValueError):
    pass


class Divergence(GendynError, FloatingPointError):
    """Training blew up; the learning rate is too large."""


# shrinkage
class NoiseScaleUnknown(GendynError, ValueError):
    pass


class TooFewModes(GendynError, ValueError):
    pass


# transfer
class SingularGram(GendynError, ValueError):
    pass


class AspectError(GendynError, ValueError):
    pass


# harness
class ConfigParse(GendynError, ValueError):
    pass


class UnknownFigure(GendynError, KeyError):
    pass
