"""Numerical simulator of a trapped ion in a cavity running a three-pulse CNOT.

The control qubit lives in the ion's vibrational mode, the target in its
internal state; the cavity mediates the conditional phase.  The package
builds the lab-frame and interaction-picture Hamiltonians, propagates pure
states and density matrices, analyzes the resulting gate against the ideal
CNOT, and evaluates decoherence-limited feasibility.
"""

from .core import (DensityMatrix, ModeLayout, Operator, StateVector,
                   basis_state, embed, fidelity, ion_operators, ladder_pair)
from .hamiltonians import (CARRIER, INTERACTION_TERMS, PHASE_GATE,
                           HamiltonianFactory, PhysParams, ResonanceMode,
                           apply_resonance, custom_resonance, default_params,
                           h_hadamard, h_interaction, h_lab, h_phase,
                           lamb_dicke_ops, position_operator)
from .propagation import (NumericalError, TimeGrid, expm_unitary,
                          propagate_master, propagate_td, recommended_steps)
from .gates import (CNOT_LOGICAL, GateReport, PulseSequence, PulseStep,
                    cnot_sequence, hadamard_pulse, local_equivalence_fidelity,
                    local_phase_fit, makhlin_invariants, phase_pulse,
                    run_sequence, truth_table)
from .noise import (MICROWAVE, OPTICAL, FeasibilityReport, NoiseParams,
                    NoiseScenario, collapse_ops, feasibility_report,
                    noisy_gate_fidelity)

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix", "ModeLayout", "Operator", "StateVector", "basis_state",
    "embed", "fidelity", "ion_operators", "ladder_pair",
    "CARRIER", "INTERACTION_TERMS", "PHASE_GATE", "HamiltonianFactory",
    "PhysParams", "ResonanceMode", "apply_resonance", "custom_resonance",
    "default_params", "h_hadamard", "h_interaction", "h_lab", "h_phase",
    "lamb_dicke_ops", "position_operator",
    "NumericalError", "TimeGrid", "expm_unitary", "propagate_master",
    "propagate_td", "recommended_steps",
    "CNOT_LOGICAL", "GateReport", "PulseSequence", "PulseStep",
    "cnot_sequence", "hadamard_pulse", "local_equivalence_fidelity",
    "local_phase_fit", "makhlin_invariants", "phase_pulse", "run_sequence",
    "truth_table",
    "MICROWAVE", "OPTICAL", "FeasibilityReport", "NoiseParams",
    "NoiseScenario", "collapse_ops", "feasibility_report",
    "noisy_gate_fidelity",
]
