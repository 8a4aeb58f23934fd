"""Exception hierarchy shared by all ksflow modules."""


class KSFlowError(Exception):
    """Base class for every error raised by ksflow."""


class ZeroBasePoint(KSFlowError, ValueError):
    """The KS transform was asked to lift or project the origin."""


class DegenerateFiber(KSFlowError, ValueError):
    """Two quaternions lie on (numerically) the same Hopf fiber."""


class AtSingularity(KSFlowError, ValueError):
    """A potential was evaluated on top of a singular site."""


class BadIndex(KSFlowError, IndexError):
    pass


class WrongFamily(KSFlowError, ValueError):
    pass


class StepRejected(KSFlowError, RuntimeError):
    """The adaptive integrator could not make progress."""


class LiftFailure(KSFlowError, RuntimeError):
    pass


class EventOverflow(KSFlowError, RuntimeError):
    pass


class BudgetExceeded(KSFlowError, RuntimeError):
    pass


class NoRadiusFound(KSFlowError, RuntimeError):
    pass


class EmptyShell(KSFlowError, ValueError):
    pass


class GridTooSmall(KSFlowError, ValueError):
    pass


class ConfigError(KSFlowError, ValueError):
    """Malformed scenario or potential document."""
