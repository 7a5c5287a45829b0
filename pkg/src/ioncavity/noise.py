"""Open-system gate evaluation: cavity decay, spontaneous emission, heating.

Three Lindblad channels cover the named decoherence sources: cavity energy
decay √κ b, ionic spontaneous emission √γ σ− (bare, no momentum recoil —
that is second order in the Lamb-Dicke parameters), and motional heating
modeled as the symmetric infinite-temperature pair √h a†, √h a so that
⟨a†a⟩ grows at the heating rate from vacuum and coherence decays on ≈ 1/h.

The headline comparison: an optical cavity (photon lifetime ≈ 1 μs) cannot
host the 2π phase pulse, whose duration π/(η_c g) is far longer, while a
microwave cavity (lifetime ≈ 0.2 s) comfortably can.  `feasibility_report`
tabulates the pulse timings against each scenario's rates and flags schedules
longer than the cavity lifetime.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .core import (DensityMatrix, ModeLayout, Operator, embed, ion_operators,
                   ladder_pair)
from .gates import (PulseSequence, _effective_generator, _logical_indices,
                    _run_batch, _step_factory, cnot_sequence)
from .hamiltonians import PhysParams, apply_resonance, default_params
from .propagation import TimeGrid, propagate_master, recommended_steps

__all__ = [
    "NoiseParams",
    "NoiseScenario",
    "OPTICAL",
    "MICROWAVE",
    "ScenarioResult",
    "FeasibilityReport",
    "collapse_ops",
    "noisy_gate_fidelity",
    "feasibility_report",
]

_INPUT_LABELS = ("00", "01", "10", "11")


@dataclass(frozen=True)
class NoiseParams:
    """Decoherence rates, all in 1/s.  kappa: cavity energy decay (1/photon
    lifetime); gamma: ionic spontaneous emission; heating_rate: motional
    quanta gained per second."""

    kappa: float = 0.0
    gamma: float = 0.0
    heating_rate: float = 0.0

    def __post_init__(self) -> None:
        for name in ("kappa", "gamma", "heating_rate"):
            value = getattr(self, name)
            if not value >= 0:
                raise ValueError(f"{name} must be >= 0, got {value}")


@dataclass(frozen=True)
class NoiseScenario:
    name: str
    noise: NoiseParams


OPTICAL = NoiseScenario("optical", NoiseParams(kappa=1e6))
MICROWAVE = NoiseScenario("microwave", NoiseParams(kappa=5.0))


def collapse_ops(noise: NoiseParams, layout: ModeLayout) -> list[Operator]:
    """Collapse operators for the non-zero rates, embedded on the full space."""
    ops = []
    if noise.kappa > 0:
        lower_c, _ = ladder_pair(layout.cav_cutoff)
        ops.append(math.sqrt(noise.kappa) * embed(lower_c, "cav", layout))
    if noise.gamma > 0:
        _, sigma_minus, _ = ion_operators()
        ops.append(math.sqrt(noise.gamma) * embed(sigma_minus, "ion", layout))
    if noise.heating_rate > 0:
        lower_v, raise_v = ladder_pair(layout.vib_cutoff)
        root = math.sqrt(noise.heating_rate)
        ops.append(root * embed(raise_v, "vib", layout))
        ops.append(root * embed(lower_v, "vib", layout))
    return ops


def _ideal_outputs(seq: PulseSequence, columns: np.ndarray) -> np.ndarray:
    """Closed-system effective-model outputs for the reference fidelity."""
    eff_steps = tuple(dataclasses.replace(step, model="effective")
                      for step in seq.steps)
    eff_seq = PulseSequence(eff_steps, seq.layout, seq.params)
    return _run_batch(eff_seq, columns)


def _master_through_schedule(seq: PulseSequence, collapses: list[Operator],
                             rho: DensityMatrix, grid_policy: int) -> DensityMatrix:
    damp_scale = sum(float(np.linalg.norm(c.entries.conj().T @ c.entries, 2))
                     for c in collapses)
    t_offset = 0.0
    for step in seq.steps:
        if step.duration == 0.0:
            continue
        tuned = apply_resonance(seq.params, step.resonance)
        if step.model == "effective":
            h = _effective_generator(tuned, step.resonance, seq.layout)
            omega = max(float(np.linalg.norm(h.entries, 2)), damp_scale)
        else:
            h = _step_factory(step, tuned, seq.layout)
            omega = max(h.max_phase_frequency,
                        float(np.linalg.norm(h.matrix(t_offset), 2)),
                        damp_scale)
        steps = recommended_steps(omega, step.duration, grid_policy)
        grid = TimeGrid(t_offset, t_offset + step.duration, steps)
        rho = propagate_master(h, collapses, grid, rho)
        t_offset += step.duration
    return rho


def noisy_gate_fidelity(seq: PulseSequence, noise: NoiseParams,
                        grid_policy: int = 20) -> tuple[np.ndarray, float]:
    """Master-equation fidelities for the four logical inputs.

    Each input is propagated as a density matrix through the schedule with
    the step Hamiltonians and the collapse operators of `noise`; the
    fidelity is ⟨ψ|ρ_out|ψ⟩ against the closed-system effective-model
    output ψ.  Returns (four fidelities, their mean).
    """
    layout = seq.layout
    idx = _logical_indices(layout)
    columns = np.zeros((layout.total_dim, 4), dtype=np.complex128)
    for j, index in enumerate(idx):
        columns[index, j] = 1.0
    ideal = _ideal_outputs(seq, columns)
    collapses = collapse_ops(noise, layout)
    fidelities = np.empty(4)
    for j in range(4):
        rho0 = DensityMatrix(layout, np.outer(columns[:, j], columns[:, j].conj()))
        rho = _master_through_schedule(seq, collapses, rho0, grid_policy)
        psi = ideal[:, j]
        fidelities[j] = float(np.real(psi.conj() @ rho.entries @ psi))
    return fidelities, float(np.mean(fidelities))


@dataclass(frozen=True)
class ScenarioResult:
    scenario: NoiseScenario
    kappa_t: float
    gamma_t: float
    heating_t: float
    fidelities: np.ndarray
    mean_fidelity: float
    cavity_lifetime: float   # 1/κ, inf for a lossless cavity
    infeasible: bool         # schedule outlasts the cavity lifetime


@dataclass(frozen=True)
class FeasibilityReport:
    tau_hadamard: float
    tau_phase: float
    t_total: float
    results: tuple

    def to_json_dict(self) -> dict:
        return {
            "tau_hadamard": self.tau_hadamard,
            "tau_phase": self.tau_phase,
            "t_total": self.t_total,
            "scenarios": [
                {
                    "name": r.scenario.name,
                    "kappa": r.scenario.noise.kappa,
                    "gamma": r.scenario.noise.gamma,
                    "heating_rate": r.scenario.noise.heating_rate,
                    "kappa_t": r.kappa_t,
                    "gamma_t": r.gamma_t,
                    "heating_t": r.heating_t,
                    "fidelities": {label: float(f) for label, f
                                   in zip(_INPUT_LABELS, r.fidelities)},
                    "mean_fidelity": r.mean_fidelity,
                    "cavity_lifetime": r.cavity_lifetime,
                    "infeasible": r.infeasible,
                }
                for r in self.results
            ],
        }

    def csv_rows(self) -> list[list]:
        """Flat rows (one per scenario × input) for external plotting."""
        rows = [["scenario", "input", "kappa", "gamma", "heating_rate",
                 "kappa_t", "gamma_t", "heating_t", "fidelity",
                 "mean_fidelity", "infeasible"]]
        for r in self.results:
            for label, fid in zip(_INPUT_LABELS, r.fidelities):
                rows.append([r.scenario.name, label, r.scenario.noise.kappa,
                             r.scenario.noise.gamma,
                             r.scenario.noise.heating_rate,
                             r.kappa_t, r.gamma_t, r.heating_t, float(fid),
                             r.mean_fidelity, r.infeasible])
        return rows


def feasibility_report(params: PhysParams | None = None,
                       scenarios: tuple = (OPTICAL, MICROWAVE),
                       *, layout: ModeLayout | None = None,
                       grid_policy: int = 60) -> FeasibilityReport:
    """Pulse timings vs. decoherence for each scenario.

    Uses the effective-model schedule (the timing argument is about pulse
    durations, not integration fidelity of the fast terms).  A scenario is
    flagged infeasible when the total schedule time exceeds the cavity
    lifetime 1/κ.
    """
    params = default_params() if params is None else params
    layout = ModeLayout(5, 5) if layout is None else layout
    tau_had = math.pi / (4.0 * params.Omega)
    tau_pha = math.pi / (params.eta_c * params.g)
    t_total = 2.0 * tau_had + tau_pha
    seq = cnot_sequence(params, layout, model="effective")

    results = []
    for scenario in scenarios:
        fids, mean = noisy_gate_fidelity(seq, scenario.noise, grid_policy)
        lifetime = math.inf if scenario.noise.kappa == 0 else 1.0 / scenario.noise.kappa
        results.append(ScenarioResult(
            scenario=scenario,
            kappa_t=scenario.noise.kappa * t_total,
            gamma_t=scenario.noise.gamma * t_total,
            heating_t=scenario.noise.heating_rate * t_total,
            fidelities=fids,
            mean_fidelity=mean,
            cavity_lifetime=lifetime,
            infeasible=t_total > lifetime,
        ))
    return FeasibilityReport(tau_hadamard=tau_had, tau_phase=tau_pha,
                             t_total=t_total, results=tuple(results))
