"""Exception hierarchy shared by the simulator modules."""


class DesyncError(Exception):
    """Base class for every error raised by ircdesync."""


# topology
class TopologyError(DesyncError, ValueError):
    pass


class CycleDetected(TopologyError):
    pass


class Disconnected(TopologyError):
    pass


class DuplicateName(TopologyError):
    pass


class UnknownServer(TopologyError, KeyError):
    pass


class UnknownClient(TopologyError, KeyError):
    pass


class UnknownLink(TopologyError, KeyError):
    pass


# channel
class UnknownChannel(DesyncError, ValueError):
    pass


# engine
class TimeInPast(DesyncError, ValueError):
    pass


class BudgetExceeded(DesyncError, RuntimeError):
    pass


class Unreachable(DesyncError, RuntimeError):
    pass


# desync placement / detection
class NotOnPath(DesyncError, ValueError):
    pass


class NotOp(DesyncError, ValueError):
    pass


class MeetingTimeTooEarly(DesyncError, ValueError):
    pass


class ProbeInconclusive(DesyncError, RuntimeError):
    pass


# netsplit / netjoin
class EdgeStillPresent(DesyncError, ValueError):
    pass


# scenarios
class ScenarioError(DesyncError):
    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


class ScenarioSyntaxError(ScenarioError):
    pass


class UnknownName(ScenarioError):
    pass


class TimeNonMonotonic(ScenarioError):
    pass


class MaxAttemptsExceeded(DesyncError, RuntimeError):
    pass
