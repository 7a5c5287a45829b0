"""Pulse schedule and gate-equivalence analysis.

Known-answer facts used here (derivable by hand from the effective
generators): the carrier π/2 pulse is exp(−iπσ_x/4); the composite
three-pulse gate therefore equals blockdiag(−iσ_x, σ_z) on the logical
basis, which has CNOT's Makhlin invariants (0, 1) but zero overlap with
CNOT itself even after Z-phase fitting — only the local-equivalence tier
reaches 1.
"""

import math

import numpy as np
import pytest

from ioncavity.core import ModeLayout, basis_state, fidelity
from ioncavity.gates import (CNOT_LOGICAL, PulseSequence, PulseStep,
                             cnot_sequence, hadamard_pulse,
                             local_equivalence_fidelity, local_phase_fit,
                             makhlin_invariants, phase_pulse, run_sequence,
                             truth_table, _su2)
from ioncavity.hamiltonians import (CARRIER, custom_resonance, default_params)

LAYOUT = ModeLayout(5, 5)

# the effective composite on the logical basis, derived by hand
COMPOSITE = np.array(
    [[0, -1j, 0, 0],
     [-1j, 0, 0, 0],
     [0, 0, 1, 0],
     [0, 0, 0, -1]], dtype=complex)


def test_pulse_durations():
    p = default_params()
    assert hadamard_pulse(p).duration == 1.25e-6   # π/(4Ω), exact in floats
    assert abs(phase_pulse(p).duration - 1e-4) < 1e-19
    assert hadamard_pulse(p).resonance is CARRIER
    with pytest.raises(ValueError):
        hadamard_pulse(default_params(), model="nope")


def test_pulse_step_validation():
    with pytest.raises(ValueError):
        PulseStep(CARRIER, -1e-6)
    PulseStep(CARRIER, 0.0)    # zero duration allowed (no-op)
    with pytest.raises(ValueError):
        PulseSequence((), LAYOUT, default_params())


def test_pulse_requires_coupling():
    from dataclasses import replace
    with pytest.raises(ValueError):
        hadamard_pulse(replace(default_params(), Omega=0.0))
    with pytest.raises(ValueError):
        phase_pulse(replace(default_params(), g=0.0))


def test_cnot_sequence_structure():
    seq = cnot_sequence(default_params(), LAYOUT)
    assert len(seq.steps) == 3
    kinds = [s.resonance.kind for s in seq.steps]
    assert kinds == ["carrier", "phase_gate", "carrier"]
    assert seq.total_duration == pytest.approx(2 * 1.25e-6 + 1e-4)


def test_effective_phase_pulse_signs():
    p = default_params()
    seq = PulseSequence((phase_pulse(p),), LAYOUT, p)
    # (e,1,0) completes a 2π exchange through (g,0,1): amplitude −1
    out = run_sequence(seq, basis_state("e", 1, 0, LAYOUT))
    assert out.amplitudes[LAYOUT.index_of("e", 1, 0)] == pytest.approx(-1.0, abs=1e-12)
    # (g,1,0) is dark: untouched
    out = run_sequence(seq, basis_state("g", 1, 0, LAYOUT))
    assert out.amplitudes[LAYOUT.index_of("g", 1, 0)] == pytest.approx(1.0, abs=1e-12)


def test_effective_phase_pulse_leakage_diagnostic():
    # (e,2,0) exchanges at sqrt(2) the resonant rate: amplitude cos(sqrt(2) π)
    p = default_params()
    seq = PulseSequence((phase_pulse(p),), LAYOUT, p)
    out = run_sequence(seq, basis_state("e", 2, 0, LAYOUT))
    amp = out.amplitudes[LAYOUT.index_of("e", 2, 0)]
    assert amp == pytest.approx(-0.26625534204141565, abs=1e-10)


def test_zero_duration_steps_are_skipped():
    p = default_params()
    step = PulseStep(CARRIER, 0.0)
    seq = PulseSequence((step, phase_pulse(p), step), LAYOUT, p)
    out = run_sequence(seq, basis_state("e", 1, 0, LAYOUT))
    assert out.amplitudes[LAYOUT.index_of("e", 1, 0)] == pytest.approx(-1.0, abs=1e-12)


def test_effective_model_rejects_custom_resonance():
    p = default_params()
    step = PulseStep(custom_resonance(p.omega0), 1e-6, model="effective")
    seq = PulseSequence((step,), LAYOUT, p)
    with pytest.raises(ValueError, match="custom"):
        run_sequence(seq, basis_state("g", 0, 0, LAYOUT))


def test_effective_truth_table_is_the_derived_composite():
    seq = cnot_sequence(default_params(), LAYOUT)
    report = truth_table(seq)
    assert np.max(np.abs(report.logical_matrix - COMPOSITE)) < 1e-10
    assert np.all(report.leakage_per_input < 1e-10)
    # raw and Z-phase-fitted overlap with CNOT both vanish identically
    assert report.raw_fidelity < 1e-12
    assert report.phase_fitted_fidelity < 1e-12
    # ... yet the gate is locally equivalent to CNOT
    assert report.local_equiv_fidelity > 1 - 1e-6
    g1, g2 = report.makhlin
    assert abs(g1) < 1e-9 and abs(g2 - 1.0) < 1e-9


def test_full_model_truth_table_close_to_effective():
    seq = cnot_sequence(default_params(), LAYOUT, model="full")
    with pytest.warns(UserWarning):
        report = truth_table(seq)
    assert np.all(report.leakage_per_input < 1e-4)
    assert report.local_equiv_fidelity > 0.999
    g1, g2 = report.makhlin
    assert abs(g1) < 1e-3 and abs(g2 - 1.0) < 1e-3
    assert np.max(np.abs(report.logical_matrix - COMPOSITE)) < 5e-3


def test_run_sequence_batches_match_single_runs():
    seq = cnot_sequence(default_params(), LAYOUT)
    report = truth_table(seq)
    out = run_sequence(seq, basis_state("e", 1, 0, LAYOUT))   # logical |11>
    col = report.logical_matrix[:, 3]
    idx = [LAYOUT.index_of(ion, n_v, 0) for n_v in (0, 1) for ion in ("g", "e")]
    assert np.allclose(col, out.amplitudes[idx], atol=1e-12)


def test_local_phase_fit_identity_and_global_phase():
    f, phases = local_phase_fit(CNOT_LOGICAL, CNOT_LOGICAL)
    assert f == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(phases, 0.0, atol=1e-6)
    f, phases = local_phase_fit(np.exp(0.4j) * CNOT_LOGICAL, CNOT_LOGICAL)
    assert f == pytest.approx(1.0, abs=1e-12)
    assert phases[0] == pytest.approx(-0.4, abs=1e-6)


def test_local_phase_fit_recovers_z_dressing():
    z = lambda phi: np.diag([1.0, np.exp(1j * phi)])
    dressed = np.kron(z(0.3), z(-0.7)) @ CNOT_LOGICAL @ np.kron(z(1.1), z(0.2))
    f, _ = local_phase_fit(dressed, CNOT_LOGICAL)
    assert f > 1 - 1e-10


def test_local_phase_fit_cannot_fix_the_composite():
    f, _ = local_phase_fit(COMPOSITE, CNOT_LOGICAL)
    assert f < 1e-12


def test_makhlin_reference_gates():
    g1, g2 = makhlin_invariants(np.eye(4, dtype=complex))
    assert abs(g1 - 1.0) < 1e-12 and abs(g2 - 3.0) < 1e-12
    g1, g2 = makhlin_invariants(CNOT_LOGICAL)
    assert abs(g1) < 1e-12 and abs(g2 - 1.0) < 1e-12
    swap = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]],
                    dtype=complex)
    g1, g2 = makhlin_invariants(swap)
    assert abs(g1 + 1.0) < 1e-12 and abs(g2 + 3.0) < 1e-12


def test_makhlin_invariant_under_local_rotations():
    rng = np.random.default_rng(5)
    for _ in range(5):
        locals_ = [_su2(rng.uniform(-math.pi, math.pi, 3)) for _ in range(4)]
        dressed = (np.kron(locals_[0], locals_[1]) @ CNOT_LOGICAL
                   @ np.kron(locals_[2], locals_[3]))
        g1, g2 = makhlin_invariants(dressed)
        assert abs(g1) < 1e-9
        assert abs(g2 - 1.0) < 1e-9


def test_makhlin_rejects_non_unitary():
    with pytest.raises(ValueError, match="unitary"):
        makhlin_invariants(0.9 * CNOT_LOGICAL)


def test_local_equivalence_oracle_values():
    rng = np.random.default_rng(9)
    locals_ = [_su2(rng.uniform(-math.pi, math.pi, 3)) for _ in range(4)]
    dressed = (np.kron(locals_[0], locals_[1]) @ CNOT_LOGICAL
               @ np.kron(locals_[2], locals_[3]))
    assert local_equivalence_fidelity(dressed, CNOT_LOGICAL) > 1 - 1e-6
    cz = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
    assert local_equivalence_fidelity(cz, CNOT_LOGICAL) > 1 - 1e-6
    # identity is NOT in the CNOT class; the ceiling is 1/sqrt(2)
    best = local_equivalence_fidelity(np.eye(4, dtype=complex), CNOT_LOGICAL)
    assert best == pytest.approx(0.7071067811865476, abs=1e-6)
