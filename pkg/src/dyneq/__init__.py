"""Equivalence checking for quantum circuits with mid-circuit measurements, resets and classical control."""
from .circuit import (
    Builder, Circuit, CircuitError, ClassicControlled, Control, Gate, Measure, PiFraction, Reset,
    Unitary, ValidationError, append, compose, count_classic_controls, count_measurements,
    count_resets, gate_matrix, inverse, is_dynamic, pi_frac, structurally_equal, validate,
)
from .equivalence import (
    CheckConfig, EquivalenceError, EquivalenceResult, build_unitary, check_distribution, check_full,
    measurement_alignment, total_variation,
)
from .extract import ExtractConfig, ExtractError, enumerate_forced, extract
from .qasm import ParseError, QasmError, parse, serialize
from .reconstruct import ReconstructError, WireMap, defer_measurements, reconstruct_unitary, substitute_resets
from .statevec import (
    OutcomeDistribution, SimConfig, SimulationError, StateVector, apply, init_basis,
    outcome_distribution_static, prob_one, prob_zero, project,
)

__version__ = "0.1.0"

__all__ = [
    "Builder",
    "Circuit",
    "CircuitError",
    "ClassicControlled",
    "Control",
    "Gate",
    "Measure",
    "PiFraction",
    "Reset",
    "Unitary",
    "ValidationError",
    "append",
    "compose",
    "count_classic_controls",
    "count_measurements",
    "count_resets",
    "gate_matrix",
    "inverse",
    "is_dynamic",
    "pi_frac",
    "structurally_equal",
    "validate",
    "CheckConfig",
    "EquivalenceError",
    "EquivalenceResult",
    "build_unitary",
    "check_distribution",
    "check_full",
    "measurement_alignment",
    "total_variation",
    "ExtractConfig",
    "ExtractError",
    "enumerate_forced",
    "extract",
    "ParseError",
    "QasmError",
    "parse",
    "serialize",
    "ReconstructError",
    "WireMap",
    "defer_measurements",
    "reconstruct_unitary",
    "substitute_resets",
    "OutcomeDistribution",
    "SimConfig",
    "SimulationError",
    "StateVector",
    "apply",
    "init_basis",
    "outcome_distribution_static",
    "prob_one",
    "prob_zero",
    "project",
]
