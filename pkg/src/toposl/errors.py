"""Exception types raised across the package."""


class ToposlError(Exception):
    """Base class for all package errors."""


class InvariantViolation(ToposlError):
    """A computed quantity broke an inequality or structural invariant."""


class NumericFailure(ToposlError):
    """An integration or decomposition produced unusable numbers."""


# graph
class DisconnectedGraph(ToposlError):
    pass


# transport
class UnbalancedInput(ToposlError):
    pass


class NonPositiveLambda(ToposlError):
    pass


class LengthMismatch(ToposlError):
    pass


# numerics
class NonFiniteState(NumericFailure):
    pass


class TooFewSamples(ToposlError):
    pass


class NotHermitian(ToposlError):
    pass


class NoConvergence(NumericFailure):
    pass


# flow dynamics
class NegativeMassBlowup(NumericFailure):
    pass


class ExternalFlowsPresent(ToposlError):
    pass


# reaction networks
class NegativeConcentration(ToposlError):
    pass


class NonPositiveEntry(ToposlError):
    pass


class EmptyImbalance(ToposlError):
    pass


class ZeroFlux(ToposlError):
    pass


class NetworkParseError(ToposlError):
    pass


# quantum
class DimensionMismatch(ToposlError):
    pass


class DimensionCap(ToposlError):
    pass


class IncompleteProjectors(ToposlError):
    pass


class DegenerateSpectrum(ToposlError):
    pass


class UnpairedJump(ToposlError):
    pass


# cli
class ConfigError(ToposlError):
    pass


class ScenarioError(ToposlError):
    pass


class IoError(ToposlError):
    pass
