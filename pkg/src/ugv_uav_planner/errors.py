"""Exception types raised by the planner core."""


class PlannerError(Exception):
    """Base class for all planner errors."""


class GraphFormatError(PlannerError):
    """A graph document could not be parsed or failed validation."""


class StatusTransitionError(PlannerError):
    """An edge status change left a terminal state."""


class InstanceValidationError(PlannerError):
    """An instance document does not match its road network."""


class ConfigurationError(PlannerError, ValueError):
    """Invalid strategy or run parameters."""


class DisconnectedGraphError(PlannerError):
    """A computation that needs a connected graph received a disconnected one."""
