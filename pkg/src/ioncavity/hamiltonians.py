"""Hamiltonians for a laser-driven trapped ion coupled to a single cavity mode.

Three model tiers, all in units of ħ = 1 (energies are angular frequencies in
rad/s, durations in seconds):

``h_lab``
    Lab-frame Hamiltonian: trap and cavity oscillators, the bare ionic
    splitting, the classical laser drive with its full exp[iη_L(a†+a)]
    recoil factor, and the cavity coupling g(σ₊+σ₋)(b†+b)sin[η_c(a†+a)].
    The exponential and sine of the position-like operator X = a†+a are
    evaluated exactly through the spectral decomposition of X, not by series.

``h_interaction``
    Interaction-picture Hamiltonian after linearizing both Lamb-Dicke factors,
    written as exactly seven monomial drive terms (labels "i".."vii"):

        i    iη_LΩ σ₊a  e^{i(δ_aL−ν)t}  − h.c.      red-sideband laser drive
        ii   η_c g σ₊a†b e^{i(δ_ac+ν)t}  + h.c.      anti-JC exchange (the
                                                     phase-gate generator when
                                                     δ_ac = −ν)
        iii  iη_LΩ σ₊a† e^{i(δ_aL+ν)t}  − h.c.      blue-sideband laser drive
        iv   η_c g σ₊a†b† e^{i(δ_ac+ν+2ω_c)t} + h.c. counter-rotating
        v    η_c g σ₊ab†  e^{i(δ_ac−ν+2ω_c)t} + h.c. counter-rotating
        vi   η_c g σ₊ab   e^{i(δ_ac−ν)t}  + h.c.     JC-type exchange
        vii  Ω σ₊ e^{iδ_aL t} + h.c.                 carrier drive

    with δ_aL = ω₀−ω_L and δ_ac = ω₀−ω_c.  Each term can be toggled through a
    term mask for rotating-wave diagnostics.

``h_hadamard`` / ``h_phase``
    The two static resonance limits: Ω(σ₊+σ₋) at carrier resonance
    (δ_aL = 0) and η_c g(σ₊a†b + σ₋ab†) at δ_ac = −ν.

Resonance switching is modeled as instantaneous retuning of ω₀ (Stark-style);
by default the laser is silenced (Ω = 0) while the phase-gate resonance is
active.  Time-dependent factories report their fastest phase frequency and —
when all active phases are commensurate — an exact period, which the
propagator may exploit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import ModeLayout, Operator, ion_operators, ladder_pair

__all__ = [
    "PhysParams",
    "ResonanceMode",
    "CARRIER",
    "PHASE_GATE",
    "custom_resonance",
    "apply_resonance",
    "default_params",
    "HamiltonianFactory",
    "h_lab",
    "h_interaction",
    "h_hadamard",
    "h_phase",
    "lamb_dicke_ops",
    "position_operator",
    "INTERACTION_TERMS",
]

TWO_PI = 2.0 * math.pi

INTERACTION_TERMS = ("i", "ii", "iii", "iv", "v", "vi", "vii")


@dataclass(frozen=True)
class PhysParams:
    """Physical frequencies and couplings, all angular (rad/s).

    Attributes
    ----------
    nu : trap (vibrational) frequency
    omega0 : ionic transition frequency
    omega_c : cavity frequency
    omega_L : laser frequency
    Omega : laser Rabi coupling (0 allowed: laser off)
    g : ion-cavity coupling (0 allowed)
    eta_L, eta_c : Lamb-Dicke parameters of laser and cavity mode
    """

    nu: float
    omega0: float
    omega_c: float
    omega_L: float
    Omega: float
    g: float
    eta_L: float
    eta_c: float

    def __post_init__(self) -> None:
        for name in ("nu", "omega0", "omega_c", "omega_L"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("Omega", "g"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("eta_L", "eta_c"):
            value = getattr(self, name)
            # 0 is tolerated (decoupled limit); >= 1 is outside the Lamb-Dicke regime.
            if not 0 <= value < 1:
                raise ValueError(f"{name} must lie in (0,1), got {value}")

    @property
    def delta_aL(self) -> float:
        """Ion-laser detuning ω₀ − ω_L."""
        return self.omega0 - self.omega_L

    @property
    def delta_ac(self) -> float:
        """Ion-cavity detuning ω₀ − ω_c."""
        return self.omega0 - self.omega_c


def default_params() -> PhysParams:
    """Desk-scale defaults: ν = 2π·10 MHz, Ω = g = 2π·100 kHz, η = 0.05.

    ω_c and ω_L are integer multiples of 2π·1 MHz so that every
    interaction-picture phase frequency is commensurate (the drive is exactly
    periodic) and the carrier and phase-gate resonances stay well separated:
    at carrier resonance the anti-JC term is detuned by 2π·4 MHz ≈ 800 η_c g.
    """
    return PhysParams(
        nu=TWO_PI * 10e6,
        omega0=TWO_PI * 19e6,
        omega_c=TWO_PI * 25e6,
        omega_L=TWO_PI * 19e6,
        Omega=TWO_PI * 1e5,
        g=TWO_PI * 1e5,
        eta_L=0.05,
        eta_c=0.05,
    )


@dataclass(frozen=True)
class ResonanceMode:
    """Which resonance condition a pulse is tuned to.

    ``carrier`` pins ω₀ := ω_L (δ_aL = 0, laser on); ``phase_gate`` pins
    ω₀ := ω_c − ν (δ_ac = −ν) and silences the laser; ``custom`` overrides
    ω₀ explicitly and chooses the laser state.
    """

    kind: str
    omega0: float | None = None
    laser_on: bool = True

    def __post_init__(self) -> None:
        if self.kind not in ("carrier", "phase_gate", "custom"):
            raise ValueError(f"unknown resonance kind {self.kind!r}")
        if self.kind == "custom" and self.omega0 is None:
            raise ValueError("custom resonance requires an omega0 override")


CARRIER = ResonanceMode("carrier")
PHASE_GATE = ResonanceMode("phase_gate", laser_on=False)


def custom_resonance(omega0: float, laser_on: bool = True) -> ResonanceMode:
    return ResonanceMode("custom", omega0=omega0, laser_on=laser_on)


def apply_resonance(params: PhysParams, mode: ResonanceMode) -> PhysParams:
    """Retune ``params`` to the given resonance (returns a new PhysParams)."""
    if mode.kind == "carrier":
        return replace(params, omega0=params.omega_L)
    if mode.kind == "phase_gate":
        return replace(params, omega0=params.omega_c - params.nu, Omega=0.0)
    new = replace(params, omega0=mode.omega0)
    if not mode.laser_on:
        new = replace(new, Omega=0.0)
    return new


# --------------------------------------------------------------------------
# spectral helpers


def position_operator(cutoff: int) -> np.ndarray:
    """X = a† + a on a single truncated mode, as a real symmetric block."""
    lower, raise_ = ladder_pair(cutoff)
    return np.real(lower + raise_)


def _spectral_map(x: np.ndarray, func, hermitize: bool = True) -> np.ndarray:
    """func(X) for real-symmetric X via eigendecomposition.

    ``hermitize`` cleans rounding asymmetry and is only valid when func is
    real-valued (e.g. sin); complex maps such as exp(i·) must skip it.
    """
    vals, vecs = np.linalg.eigh(x)
    out = (vecs * func(vals)) @ vecs.conj().T
    if hermitize:
        out = (out + out.conj().T) / 2.0
    return out


def lamb_dicke_ops(eta: float, cutoff: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Exact versus linearized sine of the position operator.

    Returns ``(exact_sin, linearized, error_norm)`` on a single mode:
    ``exact_sin`` = sin(ηX) evaluated spectrally, ``linearized`` = ηX, and
    ``error_norm`` the largest singular value of their difference.  Since both
    matrices are Hermitian with common eigenvectors, the error equals
    max_λ |sin(ηλ) − ηλ| and is bounded by the cubic Taylor remainder
    max_λ |ηλ|³/6 over the eigenvalues λ of X.
    """
    if not 0 < eta < 1:
        raise ValueError(f"eta must lie in (0,1), got {eta}")
    x = position_operator(cutoff)
    exact_sin = _spectral_map(x, lambda lam: np.sin(eta * lam)).real
    linearized = eta * x
    error_norm = float(np.linalg.norm(exact_sin - linearized, 2))
    return exact_sin, linearized, error_norm


# --------------------------------------------------------------------------
# time-dependent factory


def _approx_gcd(values: list[float], rel_tol: float = 1e-9) -> float | None:
    """Approximate positive GCD of floats, or None if they look incommensurate."""
    vals = sorted(abs(v) for v in values if abs(v) > 0)
    if not vals:
        return None
    tol = rel_tol * vals[-1]
    g = vals[0]
    for v in vals[1:]:
        a, b = v, g
        while b > tol:
            r = math.fmod(a, b)
            r = min(r, abs(b - r))
            a, b = b, r
        g = a
    if g < vals[-1] * 1e-6:  # implausibly small base: treat as incommensurate
        return None
    for v in vals:
        ratio = v / g
        if abs(ratio - round(ratio)) > 1e-6:
            return None
    return g


class HamiltonianFactory:
    """Time-dependent Hamiltonian H(t) = H_static + Σ_k c_k(t) M_k + h.c.

    with c_k(t) = α_k exp(iφ_k t).  Calling the factory returns an
    :class:`~ioncavity.core.Operator`; ``matrix(t)`` returns the raw ndarray
    (the propagators' fast path).  ``max_phase_frequency`` is the fastest
    |φ_k| among active terms; ``period`` is the exact common period of all
    active phases when they are commensurate, else None.
    """

    def __init__(self, layout: ModeLayout, static: np.ndarray,
                 monomials: np.ndarray, alphas: np.ndarray, phases: np.ndarray,
                 labels: tuple[str, ...] = ()):
        self.layout = layout
        self._static = np.ascontiguousarray(static, dtype=np.complex128)
        self._monomials = np.ascontiguousarray(monomials, dtype=np.complex128)
        self._alphas = np.asarray(alphas, dtype=np.complex128)
        self._phases = np.asarray(phases, dtype=np.float64)
        self.labels = tuple(labels)
        active = np.abs(self._alphas) > 0
        live_phases = np.abs(self._phases[active]) if active.any() else np.array([])
        self.max_phase_frequency = float(live_phases.max()) if live_phases.size else 0.0
        self.static_only = bool(live_phases.size == 0 or live_phases.max() == 0.0)
        base = _approx_gcd(list(live_phases)) if not self.static_only else None
        self.period = TWO_PI / base if base else None
        self._constant_cache: np.ndarray | None = None

    def matrix(self, t: float) -> np.ndarray:
        if self.static_only:
            if self._constant_cache is None:
                z = np.tensordot(self._alphas, self._monomials, axes=1)
                self._constant_cache = self._static + z + z.conj().T
            return self._constant_cache
        coeffs = self._alphas * np.exp(1j * self._phases * t)
        z = np.tensordot(coeffs, self._monomials, axes=1)
        return self._static + z + z.conj().T

    def __call__(self, t: float) -> Operator:
        return Operator(self.layout, self.matrix(t), hermitian_hint=True)


def _snap_zero(phi: float, scale: float) -> float:
    """Collapse a rounding-level phase residue to an exact zero.

    Retuning ω₀ := ω_c − ν leaves δ_ac + ν a few ulp away from 0; an exactly
    resonant term must be exactly static, so residues below 64 eps · scale
    are treated as 0.
    """
    if abs(phi) < 64.0 * np.finfo(float).eps * scale:
        return 0.0
    return phi


def _normalize_terms(terms) -> tuple[str, ...]:
    if terms is None:
        return INTERACTION_TERMS
    out = []
    for term in terms:
        if isinstance(term, str):
            name = term.lower()
            if name not in INTERACTION_TERMS:
                raise ValueError(f"unknown interaction term {term!r}")
        else:
            idx = int(term)
            if not 1 <= idx <= 7:
                raise ValueError(f"interaction term index {term!r} outside 1..7")
            name = INTERACTION_TERMS[idx - 1]
        out.append(name)
    return tuple(dict.fromkeys(out))  # dedupe, keep order


def h_interaction(params: PhysParams, layout: ModeLayout,
                  terms=None) -> HamiltonianFactory:
    """Seven-term interaction-picture Hamiltonian factory (see module notes).

    ``terms`` restricts the sum to a subset of ("i", .., "vii"), or 1-based
    indices; None keeps all seven.  An empty iterable yields H(t) = 0.
    """
    keep = _normalize_terms(terms)
    sp, _, _ = ion_operators()
    lower_v, raise_v = ladder_pair(layout.vib_cutoff)
    lower_c, raise_c = ladder_pair(layout.cav_cutoff)
    eye_c = np.eye(layout.cav_cutoff, dtype=np.complex128)
    eye_v = np.eye(layout.vib_cutoff, dtype=np.complex128)

    d_al, d_ac, nu = params.delta_aL, params.delta_ac, params.nu
    side = 1j * params.eta_L * params.Omega
    exch = params.eta_c * params.g
    scale = max(params.nu, params.omega0, params.omega_c, params.omega_L)

    catalog = {
        "i":   (side, d_al - nu,                    (sp, lower_v, eye_c)),
        "ii":  (exch, d_ac + nu,                    (sp, raise_v, lower_c)),
        "iii": (side, d_al + nu,                    (sp, raise_v, eye_c)),
        "iv":  (exch, d_ac + nu + 2 * params.omega_c, (sp, raise_v, raise_c)),
        "v":   (exch, d_ac - nu + 2 * params.omega_c, (sp, lower_v, raise_c)),
        "vi":  (exch, d_ac - nu,                    (sp, lower_v, lower_c)),
        "vii": (params.Omega + 0j, d_al,            (sp, eye_v, eye_c)),
    }

    dim = layout.total_dim
    mono = np.zeros((len(keep), dim, dim), dtype=np.complex128)
    alphas = np.zeros(len(keep), dtype=np.complex128)
    phases = np.zeros(len(keep), dtype=np.float64)
    for row, name in enumerate(keep):
        alpha, phi, (fi, fv, fc) = catalog[name]
        mono[row] = np.kron(np.kron(fi, fv), fc)
        alphas[row] = alpha
        phases[row] = _snap_zero(phi, scale)
    static = np.zeros((dim, dim), dtype=np.complex128)
    return HamiltonianFactory(layout, static, mono, alphas, phases, labels=keep)


def h_lab(params: PhysParams, layout: ModeLayout) -> HamiltonianFactory:
    """Lab-frame Hamiltonian factory with exact recoil operators.

    H(t) = ν a†a + ω_c b†b + (ω₀/2)σ_z
         + Ω σ₊ exp[iη_L(a†+a)] e^{−iω_L t} + h.c.
         + g (σ₊+σ₋)(b†+b) sin[η_c(a†+a)]
    """
    sp, sm, sz = ion_operators()
    lower_c, raise_c = ladder_pair(layout.cav_cutoff)
    x_vib = position_operator(layout.vib_cutoff)
    n_vib = np.diag(np.arange(layout.vib_cutoff)).astype(np.complex128)
    n_cav = np.diag(np.arange(layout.cav_cutoff)).astype(np.complex128)
    eye_i = np.eye(2, dtype=np.complex128)
    eye_v = np.eye(layout.vib_cutoff, dtype=np.complex128)
    eye_c = np.eye(layout.cav_cutoff, dtype=np.complex128)

    static = (
        params.nu * np.kron(np.kron(eye_i, n_vib), eye_c)
        + params.omega_c * np.kron(np.kron(eye_i, eye_v), n_cav)
        + (params.omega0 / 2.0) * np.kron(np.kron(sz, eye_v), eye_c)
    )
    if params.g:
        sin_x = _spectral_map(x_vib, lambda lam: np.sin(params.eta_c * lam)).real
        static = static + params.g * np.kron(np.kron(sp + sm, sin_x),
                                             np.real(lower_c + raise_c))
    static = (static + static.conj().T) / 2.0

    if params.Omega:
        recoil = _spectral_map(x_vib, lambda lam: np.exp(1j * params.eta_L * lam),
                               hermitize=False)
        mono = np.kron(np.kron(sp, recoil), eye_c)[np.newaxis]
        alphas = np.array([params.Omega], dtype=np.complex128)
        phases = np.array([-params.omega_L])
        labels = ("laser",)
    else:
        dim = layout.total_dim
        mono = np.zeros((0, dim, dim), dtype=np.complex128)
        alphas = np.zeros(0, dtype=np.complex128)
        phases = np.zeros(0)
        labels = ()
    return HamiltonianFactory(layout, static, mono, alphas, phases, labels=labels)


def h_hadamard(params: PhysParams, layout: ModeLayout) -> Operator:
    """Carrier-resonance generator H = Ω(σ₊+σ₋), identity on both modes."""
    sp, sm, _ = ion_operators()
    eye_v = np.eye(layout.vib_cutoff, dtype=np.complex128)
    eye_c = np.eye(layout.cav_cutoff, dtype=np.complex128)
    full = params.Omega * np.kron(np.kron(sp + sm, eye_v), eye_c)
    return Operator(layout, full, hermitian_hint=True)


def h_phase(params: PhysParams, layout: ModeLayout) -> Operator:
    """Anti-Jaynes-Cummings generator H = η_c g (σ₊a†b + σ₋ab†).

    Annihilates every |g, n_v, 0⟩ and |e, 0, 0⟩; on the pair
    {|e,1,0⟩, |g,0,1⟩} it is a 2x2 exchange of strength η_c g.
    """
    sp, _, _ = ion_operators()
    lower_v, raise_v = ladder_pair(layout.vib_cutoff)
    lower_c, raise_c = ladder_pair(layout.cav_cutoff)
    up = np.kron(np.kron(sp, raise_v), lower_c)
    full = params.eta_c * params.g * (up + up.conj().T)
    return Operator(layout, full, hermitian_hint=True)
