"""Exception types shared across the package."""


class CongestedTransportError(Exception):
    """Base class for all package errors."""


class EmptyDomain(CongestedTransportError):
    """The mask admits no active cell."""


class DisconnectedDomain(CongestedTransportError):
    """The active cells do not form a connected 8-neighbor subgraph."""


class OutsideDomain(CongestedTransportError):
    """A point or segment does not meet the active part of the domain."""


class ZeroMass(CongestedTransportError):
    """Attempt to normalize a measure with zero total mass."""


class NegativeDensity(CongestedTransportError):
    """A density argument was negative."""


class NegativeMetric(CongestedTransportError):
    """A metric field value was negative."""


class InvalidPath(CongestedTransportError):
    """A node sequence does not follow edges of the domain."""


class UnbalancedMarginals(CongestedTransportError):
    """Marginal total masses disagree beyond tolerance."""


class InfiniteCost(CongestedTransportError):
    """A required transport cost is not finite."""


class InconsistentMarginals(CongestedTransportError):
    """A flow or plan does not reproduce the configured marginals."""


class TooLarge(CongestedTransportError):
    """Instance exceeds the size limits of the brute-force oracle."""


class ConfigError(CongestedTransportError):
    """Run configuration is invalid; the message names the offending key."""
