"""Exception hierarchy shared by every module."""


class FlasError(Exception):
    """Base class for all errors raised by the package."""


# simulator
class ScalingInProgress(FlasError):
    pass


class AtMinimum(FlasError):
    pass


class Unsatisfiable(FlasError):
    pass


# metrics
class EmptyWindow(FlasError):
    pass


# forecasting
class TooShort(FlasError):
    pass


class BadWindow(FlasError):
    pass


class RankDeficient(FlasError):
    pass


class InsufficientData(FlasError):
    pass


class NonStationary(FlasError):
    pass


class InsufficientHistory(FlasError):
    pass


class TooFewRows(FlasError):
    pass


# decider
class DecisionUnavailable(FlasError):
    pass


# workload / evaluation
class InvalidSpec(FlasError):
    pass


class NoScalingEventsRecorded(FlasError):
    pass


class MismatchedRuns(FlasError):
    pass


class EmptyTrace(FlasError):
    pass


class ConfigError(FlasError):
    pass


class SimulationError(FlasError):
    """Wraps a failure inside a run with the tick at which it happened."""

    def __init__(self, tick, cause):
        super().__init__(f"tick {tick}: {cause}")
        self.tick = tick
        self.cause = cause
