"""Exception types shared across engines, simulator, and relay."""


class CoEditError(Exception):
    """Base class for all workbench errors."""


class RangeError(CoEditError):
    """An edit's position/length falls outside the current document."""


class CausalityError(CoEditError):
    """A remote operation was handed over before its causal predecessors."""


class PreconditionError(CoEditError):
    """An identifier-based op references objects not present in the sequence."""


class OrderError(CoEditError):
    """Identifier allocation was asked for a non-increasing interval."""


class StaleRevisionError(CoEditError):
    """A client cited a server revision newer than the server has."""


class ConfigError(CoEditError):
    """Engine/policy/topology combination is not runnable."""


class DeliveryStall(CoEditError):
    """A pending-delivery buffer never drained; a gating precondition is wrong."""


class SizeError(CoEditError):
    """Exhaustive enumeration was asked for more ops than the factorial guard."""


class SequenceGapError(CoEditError):
    """A client submitted a non-contiguous per-site sequence number."""


class UnknownSession(CoEditError):
    """Message referenced a session id the relay does not know."""
