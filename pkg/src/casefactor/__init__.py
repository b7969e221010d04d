"""Case-factor diagrams: compilation from fields and grammars, and inference."""

from .diagram import EMPTY, UNIT, CfdStore, ConstraintViolation
from .inference import (ConditionInfeasible, EnergyFn, InfeasibleAssignment,
                        all_marginals, conditioned_z, inside, marginal, outside,
                        probability, viterbi, z)

__version__ = "0.1.0"

__all__ = [
    "EMPTY", "UNIT", "CfdStore", "ConstraintViolation",
    "ConditionInfeasible", "EnergyFn", "InfeasibleAssignment",
    "all_marginals", "conditioned_z", "inside", "marginal", "outside",
    "probability", "viterbi", "z",
]
