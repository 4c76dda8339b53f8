"""Numerical verification of superposition-input attacks on ideal
two-party classical computation boxes."""

from .attacks import (
    AttackReport,
    attack_deterministic_3x3,
    attack_nondet_one_sided,
    attack_nondet_two_sided,
    attack_oblivious_transfer,
    sweep_all_3x3,
    verify_counterexample,
)
from .blackbox import StateFamily, output_family
from .discrim import (
    DiscriminationResult,
    Povm,
    certify_optimal,
    helstrom,
    honest_probability,
    optimize_povm,
    povm_success,
    square_root_measurement,
)
from .funcspec import (
    CanonicalForm3x3,
    FunctionSpec,
    canonicalize_3x3,
    enumerate_valid_3x3,
    parse_function_file,
    validate_conditions,
)
from .qmat import DensityState, partial_trace, tensor

__version__ = "0.1.0"

__all__ = [
    "AttackReport",
    "CanonicalForm3x3",
    "DensityState",
    "DiscriminationResult",
    "FunctionSpec",
    "Povm",
    "StateFamily",
    "attack_deterministic_3x3",
    "attack_nondet_one_sided",
    "attack_nondet_two_sided",
    "attack_oblivious_transfer",
    "canonicalize_3x3",
    "certify_optimal",
    "enumerate_valid_3x3",
    "helstrom",
    "honest_probability",
    "optimize_povm",
    "output_family",
    "parse_function_file",
    "partial_trace",
    "povm_success",
    "square_root_measurement",
    "sweep_all_3x3",
    "tensor",
    "validate_conditions",
    "verify_counterexample",
]
