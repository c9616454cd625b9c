"""stablelab: a stable-marriage laboratory.

Solvers and stability predicates over marriage markets, disjointness
embeddings with checkable contracts, bit-metered two-party protocols,
and query-metered oracle algorithms, all verified against brute-force
enumeration at desk scale.
"""

from .errors import (
    CapacityError,
    ContractViolation,
    DomainError,
    ParameterError,
    ProtocolError,
    QueryError,
    StableLabError,
)
from .market import (
    FULL,
    PARTIAL,
    Marriage,
    MarriageMarket,
    Participant,
    Side,
    blocking_pairs,
    deferred_acceptance,
    distance_to_stability,
    divorce_distance,
    enumerate_stable,
    identity_marriage,
    is_blocking_pair,
    is_stable,
    married_sets,
    prefers,
    random_market,
    weakly_prefers,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "ContractViolation",
    "DomainError",
    "ParameterError",
    "ProtocolError",
    "QueryError",
    "StableLabError",
    "FULL",
    "PARTIAL",
    "Marriage",
    "MarriageMarket",
    "Participant",
    "Side",
    "blocking_pairs",
    "deferred_acceptance",
    "distance_to_stability",
    "divorce_distance",
    "enumerate_stable",
    "identity_marriage",
    "is_blocking_pair",
    "is_stable",
    "married_sets",
    "prefers",
    "random_market",
    "weakly_prefers",
    "__version__",
]
