"""Exact abstraction and module-invariance analysis for linear dynamic networks."""

__version__ = "0.1.0"

from .abstraction import (
    AbstractionResult,
    Partition,
    abstract,
    abstract_by_substitution,
    abstract_by_transformation,
    check_indirect_observations,
    immersion,
)
from .errors import NetworkError
from .network import (
    FrequencyGrid,
    NetworkModel,
    NoiseRep,
    SelectionMatrix,
    check_abstraction,
    check_equivalence,
    validate_model,
)
from .ratfun import Polynomial, RationalFunction, TransferMatrix

__all__ = [
    "AbstractionResult",
    "FrequencyGrid",
    "NetworkError",
    "NetworkModel",
    "NoiseRep",
    "Partition",
    "Polynomial",
    "RationalFunction",
    "SelectionMatrix",
    "TransferMatrix",
    "abstract",
    "abstract_by_substitution",
    "abstract_by_transformation",
    "check_abstraction",
    "check_equivalence",
    "check_indirect_observations",
    "immersion",
    "validate_model",
]
