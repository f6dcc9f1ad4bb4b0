"""Detection and handling of reflection symmetries in small MINLPs."""
from .model import (Constraint, Minlp, ReflectionCenters, SignedPermutation, Variable,
                    VariableType, apply_reflection, compose, compute_centers,
                    enumerate_symmetries_bruteforce, is_symmetry_oracle, variable_type)
from .auto import detect_symmetries
from .groups import analyze_group
from .handle import build_plan

__version__ = "0.1.0"

__all__ = [
    "Constraint", "Minlp", "ReflectionCenters", "SignedPermutation", "Variable",
    "VariableType", "apply_reflection", "compose", "compute_centers",
    "enumerate_symmetries_bruteforce", "is_symmetry_oracle", "variable_type",
    "detect_symmetries", "analyze_group", "build_plan",
]
