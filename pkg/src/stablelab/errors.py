"""Exception hierarchy shared by all stablelab modules."""


class StableLabError(Exception):
    """Base class for all stablelab errors."""


class DomainError(StableLabError):
    """An argument violates a structural invariant (bad index, malformed marriage, ...)."""


class ParameterError(StableLabError):
    """A numeric or configuration parameter is out of its admissible range."""


class CapacityError(StableLabError):
    """A brute-force oracle was asked to run beyond its configured size bound."""


class QueryError(StableLabError):
    """A preference query is malformed or unsupported for the market's model."""


class ProtocolError(StableLabError):
    """A two-party protocol misbehaved (deadlock, output disagreement, bad message)."""


class ContractViolation(StableLabError):
    """A certified claim failed its oracle check. Should never happen on valid inputs."""
