"""Propagators: exact exponentials, midpoint-exponential stepping, RK4 Lindblad.

Closed-system evolution is kept structurally unitary: constant Hamiltonians
are exponentiated through their eigendecomposition, and time-dependent ones
are stepped with the midpoint-exponential rule

    ψ ← exp(−i H(t + dt/2) dt) ψ

whose one-step map is exactly unitary and whose global error is O(dt²).
When a factory declares an exact drive period commensurate with dt (see
:class:`~ioncavity.hamiltonians.HamiltonianFactory`), the stepper builds one
period's unitary once and reuses it — the composed map is the same product of
midpoint exponentials, just evaluated with fewer eigendecompositions.  The
claim H(t + T) = H(t) is verified numerically before the shortcut is taken.

The master equation dρ/dt = −i[H,ρ] + Σ_k (C_k ρ C_k† − ½{C_k†C_k, ρ}) uses
classic fixed-step RK4 with Hermiticity restored by symmetrization after every
step.  The right-hand side is traceless, so trace is conserved to rounding; a
trace or norm blow-up (e.g. an RK4-unstable grid) raises
:class:`NumericalError`.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import DensityMatrix, ModeLayout, Operator, StateVector

__all__ = [
    "TimeGrid",
    "NumericalError",
    "recommended_steps",
    "expm_unitary",
    "propagate_td",
    "propagate_master",
]

TWO_PI = 2.0 * math.pi


class NumericalError(RuntimeError):
    """A propagation lost its conserved quantity (norm/trace) or went non-finite."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of ``steps`` intervals covering [t0, t1]."""

    t0: float
    t1: float
    steps: int

    def __post_init__(self) -> None:
        if not isinstance(self.steps, (int, np.integer)) or isinstance(self.steps, bool):
            raise ValueError(f"steps must be an integer, got {self.steps!r}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if not self.t1 > self.t0:
            raise ValueError(f"need t1 > t0, got t0={self.t0}, t1={self.t1}")

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / self.steps


def recommended_steps(max_angular_frequency: float, duration: float,
                      steps_per_period: int = 20) -> int:
    """Step count so the fastest phase advances 2π/steps_per_period per step."""
    if steps_per_period < 1:
        raise ValueError(f"steps_per_period must be >= 1, got {steps_per_period}")
    if duration < 0:
        raise ValueError(f"duration must be >= 0, got {duration}")
    return max(1, math.ceil(duration * max_angular_frequency * steps_per_period / TWO_PI))


def _hermitian_defect(mat: np.ndarray) -> float:
    return float(np.max(np.abs(mat - mat.conj().T)))


def expm_unitary(h: Operator, t: float) -> Operator:
    """U = exp(−i H t) for Hermitian H, via eigendecomposition.

    Unitary to better than 1e-11 in max |U†U − I| entry.  Raises ValueError
    if H is not Hermitian within 1e-10 relative to its largest entry.
    """
    mat = h.entries
    if not h.hermitian_hint:
        scale = max(1.0, float(np.max(np.abs(mat))) if mat.size else 1.0)
        if _hermitian_defect(mat) > 1e-10 * scale:
            raise ValueError("expm_unitary requires a Hermitian operator")
    vals, vecs = np.linalg.eigh(mat)
    u = (vecs * np.exp(-1j * vals * t)) @ vecs.conj().T
    return Operator(h.layout, u)


def _resolve_factory(h_factory, layout: ModeLayout):
    """Normalize the supported Hamiltonian inputs to a raw-matrix callable.

    Returns (matrix_fn, max_phase, period, static_only).  Accepts a
    HamiltonianFactory, a constant Operator, None (free evolution, H = 0),
    or any callable t -> Operator/ndarray.
    """
    if h_factory is None:
        dim = layout.total_dim
        zero = np.zeros((dim, dim), dtype=np.complex128)
        return (lambda t: zero), 0.0, None, True
    if isinstance(h_factory, Operator):
        mat = np.asarray(h_factory.entries)
        return (lambda t: mat), 0.0, None, True
    if hasattr(h_factory, "matrix"):
        return (h_factory.matrix,
                getattr(h_factory, "max_phase_frequency", 0.0),
                getattr(h_factory, "period", None),
                getattr(h_factory, "static_only", False))

    def matrix_fn(t: float) -> np.ndarray:
        out = h_factory(t)
        return np.asarray(out.entries if isinstance(out, Operator) else out)

    return matrix_fn, getattr(h_factory, "max_phase_frequency", 0.0), None, False


def _step_expm_apply(hmat: np.ndarray, dt: float, psi: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(hmat)
    phase = np.exp(-1j * vals * dt)
    if psi.ndim == 1:
        return vecs @ (phase * (vecs.conj().T @ psi))
    return vecs @ (phase[:, None] * (vecs.conj().T @ psi))


def _periodic_block(matrix_fn, t0: float, dt: float, steps_in_period: int,
                    dim: int) -> np.ndarray:
    """Product of one period's midpoint exponentials (later steps leftmost)."""
    u = np.eye(dim, dtype=np.complex128)
    for k in range(steps_in_period):
        t_mid = t0 + (k + 0.5) * dt
        vals, vecs = np.linalg.eigh(matrix_fn(t_mid))
        u = (vecs * np.exp(-1j * vals * dt)) @ (vecs.conj().T @ u)
    return u


def _propagate_matrix(h_factory, grid: TimeGrid, psi: np.ndarray,
                      layout: ModeLayout, use_period: bool = True,
                      observables=None, trajectory_path=None,
                      record_every: int = 1) -> np.ndarray:
    """Shared stepping core; ``psi`` is (dim,) or (dim, n_columns)."""
    matrix_fn, max_phase, period, static_only = _resolve_factory(h_factory, layout)
    dt = grid.dt
    if max_phase * dt > 0.1:
        warnings.warn(
            f"time step leaves the fastest phase advancing {max_phase * dt:.3f} rad "
            f"(> 0.1 rad) per step; consider >= "
            f"{recommended_steps(max_phase, grid.t1 - grid.t0, 63)} steps",
            stacklevel=2)

    recording = observables is not None or trajectory_path is not None
    if recording and psi.ndim != 1:
        raise ValueError("trajectory recording supports single states only")

    initial_norms = np.linalg.norm(psi, axis=0)
    out = psi.astype(np.complex128, copy=True)

    if static_only and not recording:
        out = _step_expm_apply(matrix_fn(grid.t0), grid.t1 - grid.t0, out)
        _check_norms(out, initial_norms)
        return out

    steps_done = 0
    if use_period and period is not None and not recording:
        per_steps_f = period / dt
        per_steps = int(round(per_steps_f))
        fits = (per_steps >= 1 and abs(per_steps_f - per_steps) < 1e-6 * per_steps
                and grid.steps >= 2 * per_steps)
        if fits:
            h_start = matrix_fn(grid.t0)
            h_shift = matrix_fn(grid.t0 + period)
            scale = max(1.0, float(np.max(np.abs(h_start))))
            if np.max(np.abs(h_start - h_shift)) < 1e-9 * scale:
                u_period = _periodic_block(matrix_fn, grid.t0, dt, per_steps,
                                           out.shape[0])
                repeats = grid.steps // per_steps
                for _ in range(repeats):
                    out = u_period @ out
                steps_done = repeats * per_steps

    rows = []
    if recording:
        rows.append(_record_row(grid.t0, out, observables))
    for k in range(steps_done, grid.steps):
        t_mid = grid.t0 + (k + 0.5) * dt
        out = _step_expm_apply(matrix_fn(t_mid), dt, out)
        if recording and ((k + 1) % record_every == 0 or k + 1 == grid.steps):
            rows.append(_record_row(grid.t0 + (k + 1) * dt, out, observables))

    if trajectory_path is not None:
        _write_trajectory(trajectory_path, observables, rows)
    _check_norms(out, initial_norms)
    return out


def _record_row(t: float, psi: np.ndarray, observables) -> list[float]:
    row = [t]
    for obs in (observables or {}).values():
        mat = obs.entries if isinstance(obs, Operator) else np.asarray(obs)
        row.append(float(np.real(np.vdot(psi, mat @ psi))))
    return row


def _write_trajectory(path, observables, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + list((observables or {}).keys()))
        for row in rows:
            writer.writerow([f"{v:.12g}" for v in row])


def _check_norms(psi: np.ndarray, initial_norms) -> None:
    norms = np.linalg.norm(psi, axis=0)
    ok = np.all(np.isfinite(norms)) and np.all(
        np.abs(norms - initial_norms) <= 1e-6 * np.maximum(initial_norms, 1.0))
    if not ok:
        raise NumericalError(
            f"propagation lost norm: |psi| drifted from {initial_norms} to {norms}")


def propagate_td(h_factory, grid: TimeGrid, psi: StateVector, *,
                 observables=None, trajectory_path=None, record_every: int = 1,
                 use_period: bool = True) -> StateVector:
    """Evolve a pure state under a (possibly time-dependent) Hamiltonian.

    Parameters
    ----------
    h_factory : HamiltonianFactory, Operator, or callable t -> Operator/ndarray
        Hamiltonian in rad/s (ħ = 1).  Constant inputs are exponentiated once.
    grid : TimeGrid
        Absolute start/end times; interaction-picture phases are evaluated at
        absolute t, so consecutive pulses stay phase-coherent.
    observables : mapping name -> Operator, optional
        When given (or ``trajectory_path`` is set), real expectation values
        are recorded every ``record_every`` steps and written as CSV rows
        (t, value...) with a header declaring the column names.

    A warning (not an error) is issued when the step leaves the fastest drive
    phase advancing more than 0.1 rad.
    """
    out = _propagate_matrix(h_factory, grid, psi.amplitudes, psi.layout,
                            use_period=use_period, observables=observables,
                            trajectory_path=trajectory_path,
                            record_every=record_every)
    return StateVector(psi.layout, out)


def _collapse_matrices(collapses) -> list[np.ndarray]:
    mats = []
    for c in collapses or []:
        mats.append(np.asarray(c.entries if isinstance(c, Operator) else c,
                               dtype=np.complex128))
    return mats


def propagate_master(h_factory, collapses, grid: TimeGrid,
                     rho: DensityMatrix) -> DensityMatrix:
    """RK4 integration of the Lindblad master equation.

    ``h_factory`` follows the same conventions as :func:`propagate_td` (None
    means free dissipative evolution).  ``collapses`` is a list of Operators
    (or raw matrices) already scaled by the square root of their rates.  The
    state is symmetrized (ρ+ρ†)/2 after every step; a trace drift beyond 1e-9
    or a non-finite entry raises :class:`NumericalError`.
    """
    matrix_fn, _, _, static_only = _resolve_factory(h_factory, rho.layout)
    c_mats = _collapse_matrices(collapses)
    c_dags = [c.conj().T for c in c_mats]
    # damping part of the no-jump generator: A(t) = -iH(t) - (1/2) Σ C†C
    damp = sum((cd @ c for c, cd in zip(c_mats, c_dags)),
               np.zeros_like(rho.entries)) * 0.5

    a_static = (-1j) * matrix_fn(grid.t0) - damp if static_only else None

    def rhs(t: float, state: np.ndarray) -> np.ndarray:
        a = a_static if a_static is not None else (-1j) * matrix_fn(t) - damp
        out = a @ state + state @ a.conj().T
        for c, cd in zip(c_mats, c_dags):
            out += c @ state @ cd
        return out

    dt = grid.dt
    state = rho.entries.astype(np.complex128, copy=True)
    for k in range(grid.steps):
        t = grid.t0 + k * dt
        k1 = rhs(t, state)
        k2 = rhs(t + dt / 2, state + (dt / 2) * k1)
        k3 = rhs(t + dt / 2, state + (dt / 2) * k2)
        k4 = rhs(t + dt, state + dt * k3)
        state += (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        state = (state + state.conj().T) / 2

    trace_defect = abs(state.trace() - 1.0)
    if not trace_defect < 1e-9:
        raise NumericalError(
            f"master-equation propagation lost trace (defect {trace_defect:.3e}); "
            "the time grid is most likely too coarse for the given rates")
    return DensityMatrix(rho.layout, state)
