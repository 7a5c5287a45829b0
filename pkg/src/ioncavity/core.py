"""Finite-dimensional Hilbert-space algebra for the ion ⊗ vibration ⊗ cavity system.

The composite space is ordered ion-slowest / cavity-fastest: the basis index of
the product state ``|s⟩_ion |n_v⟩_vib |n_c⟩_cav`` is

    index = s * N_v * N_c + n_v * N_c + n_c,      s ∈ {g=0, e=1}

with ``N_v``/``N_c`` the Fock-space truncation cutoffs of the vibrational and
cavity modes.  All matrices are dense ``complex128``; the total dimension at
desk scale stays at or below 2*8*8 = 128, so sparsity machinery is deliberately
avoided.  Truncation artifacts are confined to the top Fock level of each mode;
callers should keep at least two unpopulated levels of headroom.

Everything here is immutable after construction (arrays are marked read-only),
so values can be shared freely between concurrent simulations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModeLayout",
    "StateVector",
    "DensityMatrix",
    "Operator",
    "ladder_pair",
    "ion_operators",
    "embed",
    "basis_state",
    "fidelity",
]

ION_LABELS = {"g": 0, "e": 1, 0: 0, 1: 1}


def _frozen(arr: np.ndarray) -> np.ndarray:
    """Return a read-only complex128 copy of ``arr``."""
    out = np.array(arr, dtype=np.complex128, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ModeLayout:
    """Truncation cutoffs and index ordering of the composite space.

    Parameters
    ----------
    vib_cutoff : int
        Number of vibrational Fock states kept (levels 0 .. vib_cutoff-1).
    cav_cutoff : int
        Number of cavity Fock states kept.
    """

    vib_cutoff: int
    cav_cutoff: int

    def __post_init__(self) -> None:
        for name in ("vib_cutoff", "cav_cutoff"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
                raise ValueError(f"{name} must be an integer, got {value!r}")
            if value < 2:
                raise ValueError(f"{name} must be >= 2, got {value}")

    @property
    def total_dim(self) -> int:
        return 2 * self.vib_cutoff * self.cav_cutoff

    def index_of(self, ion, n_v: int, n_c: int) -> int:
        """Basis index of |ion, n_v, n_c⟩ (ion slowest, cavity fastest)."""
        s = _ion_index(ion)
        if not 0 <= n_v < self.vib_cutoff:
            raise ValueError(f"n_v={n_v} out of range [0, {self.vib_cutoff})")
        if not 0 <= n_c < self.cav_cutoff:
            raise ValueError(f"n_c={n_c} out of range [0, {self.cav_cutoff})")
        return (s * self.vib_cutoff + n_v) * self.cav_cutoff + n_c

    def labels_of(self, index: int) -> tuple[int, int, int]:
        """Inverse of :meth:`index_of`: index -> (s, n_v, n_c)."""
        if not 0 <= index < self.total_dim:
            raise ValueError(f"index {index} out of range [0, {self.total_dim})")
        index, n_c = divmod(index, self.cav_cutoff)
        s, n_v = divmod(index, self.vib_cutoff)
        return s, n_v, n_c


def _ion_index(ion) -> int:
    try:
        return ION_LABELS[ion]
    except (KeyError, TypeError):
        raise ValueError(f"ion label must be 'g', 'e', 0 or 1, got {ion!r}") from None


@dataclass(frozen=True)
class StateVector:
    """Pure state on a :class:`ModeLayout` space."""

    layout: ModeLayout
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = _frozen(self.amplitudes)
        if amps.shape != (self.layout.total_dim,):
            raise ValueError(
                f"amplitudes shape {amps.shape} does not match "
                f"layout dimension {self.layout.total_dim}"
            )
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "StateVector") -> complex:
        """⟨self|other⟩."""
        _check_same_layout(self.layout, other.layout)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def normalized(self) -> "StateVector":
        return StateVector(self.layout, self.amplitudes / self.norm())

    def to_density_matrix(self) -> "DensityMatrix":
        amps = self.amplitudes
        return DensityMatrix(self.layout, np.outer(amps, amps.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    """Mixed state on a :class:`ModeLayout` space.

    Hermiticity (1e-10) and unit trace (1e-9) are checked at construction.
    Positivity is not checked here (it costs a full eigendecomposition); the
    master-equation propagator validates it on its outputs instead.
    """

    layout: ModeLayout
    entries: np.ndarray

    def __post_init__(self) -> None:
        mat = _frozen(self.entries)
        dim = self.layout.total_dim
        if mat.shape != (dim, dim):
            raise ValueError(
                f"entries shape {mat.shape} does not match layout dimension {dim}"
            )
        herm_defect = np.max(np.abs(mat - mat.conj().T))
        if not herm_defect < 1e-10:
            raise ValueError(f"density matrix not Hermitian: max |rho - rho^†| = {herm_defect:.3e}")
        trace_defect = abs(mat.trace() - 1.0)
        if not trace_defect < 1e-9:
            raise ValueError(f"density matrix trace differs from 1 by {trace_defect:.3e}")
        object.__setattr__(self, "entries", mat)

    def expectation(self, op: "Operator") -> complex:
        _check_same_layout(self.layout, op.layout)
        return complex(np.trace(op.entries @ self.entries))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])


@dataclass(frozen=True)
class Operator:
    """Dense operator tagged with its layout.

    ``hermitian_hint=True`` asserts (and checks, to 1e-12 on the maximum
    entry) that the matrix is Hermitian; propagators use the hint to skip
    re-verification in inner loops.
    """

    layout: ModeLayout
    entries: np.ndarray
    hermitian_hint: bool = field(default=False)

    def __post_init__(self) -> None:
        mat = _frozen(self.entries)
        dim = self.layout.total_dim
        if mat.shape != (dim, dim):
            raise ValueError(
                f"entries shape {mat.shape} does not match layout dimension {dim}"
            )
        if self.hermitian_hint:
            defect = np.max(np.abs(mat - mat.conj().T))
            if not defect < 1e-12:
                raise ValueError(
                    f"hermitian_hint set but max |A - A^†| entry is {defect:.3e}"
                )
        object.__setattr__(self, "entries", mat)

    def apply(self, state: StateVector) -> StateVector:
        _check_same_layout(self.layout, state.layout)
        return StateVector(self.layout, self.entries @ state.amplitudes)

    def dagger(self) -> "Operator":
        return Operator(self.layout, self.entries.conj().T, self.hermitian_hint)

    def expectation(self, state: StateVector) -> complex:
        _check_same_layout(self.layout, state.layout)
        return complex(np.vdot(state.amplitudes, self.entries @ state.amplitudes))

    def __matmul__(self, other: "Operator") -> "Operator":
        _check_same_layout(self.layout, other.layout)
        return Operator(self.layout, self.entries @ other.entries)

    def __add__(self, other: "Operator") -> "Operator":
        _check_same_layout(self.layout, other.layout)
        hint = self.hermitian_hint and other.hermitian_hint
        return Operator(self.layout, self.entries + other.entries, hint)

    def __mul__(self, scalar) -> "Operator":
        return Operator(self.layout, complex(scalar) * self.entries)

    __rmul__ = __mul__


def _check_same_layout(a: ModeLayout, b: ModeLayout) -> None:
    if a != b:
        raise ValueError(f"layout mismatch: {a} vs {b}")


def ladder_pair(cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    """Truncated bosonic ladder operators on a single mode.

    Returns ``(lower, raise_)`` as plain ``cutoff x cutoff`` blocks with
    ``lower[n-1, n] = sqrt(n)`` and ``raise_ = lower^†`` exactly.  Use
    :func:`embed` to lift a block onto the full composite space.  Truncation
    makes ``raise_ @ lower != lower @ raise_`` only in the top Fock level.
    """
    if not isinstance(cutoff, (int, np.integer)) or isinstance(cutoff, bool):
        raise ValueError(f"cutoff must be an integer, got {cutoff!r}")
    if cutoff < 2:
        raise ValueError(f"cutoff must be >= 2, got {cutoff}")
    lower = np.zeros((cutoff, cutoff), dtype=np.complex128)
    ns = np.arange(1, cutoff)
    lower[ns - 1, ns] = np.sqrt(ns)
    return lower, lower.conj().T


def ion_operators() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """2x2 ion blocks ``(sigma_plus, sigma_minus, sigma_z)``.

    Basis order (|g⟩, |e⟩): σ+|g⟩=|e⟩, σ-|e⟩=|g⟩, σ_z = diag(-1, +1).
    """
    sigma_plus = np.array([[0, 0], [1, 0]], dtype=np.complex128)
    sigma_minus = np.array([[0, 1], [0, 0]], dtype=np.complex128)
    sigma_z = np.array([[-1, 0], [0, 1]], dtype=np.complex128)
    return sigma_plus, sigma_minus, sigma_z


_SLOT_ORDER = ("ion", "vib", "cav")


def embed(op_block: np.ndarray, slot: str, layout: ModeLayout) -> Operator:
    """Lift a single-slot block to the full space: identity on the other slots.

    ``slot`` is one of ``"ion"``, ``"vib"``, ``"cav"``; the block dimension
    must match that slot (2, vib_cutoff, cav_cutoff respectively).
    """
    if slot not in _SLOT_ORDER:
        raise ValueError(f"slot must be one of {_SLOT_ORDER}, got {slot!r}")
    dims = {"ion": 2, "vib": layout.vib_cutoff, "cav": layout.cav_cutoff}
    block = np.asarray(op_block, dtype=np.complex128)
    if block.shape != (dims[slot], dims[slot]):
        raise ValueError(
            f"block shape {block.shape} does not match {slot} slot dimension {dims[slot]}"
        )
    factors = [block if name == slot else np.eye(dims[name], dtype=np.complex128)
               for name in _SLOT_ORDER]
    full = np.kron(np.kron(factors[0], factors[1]), factors[2])
    hermitian = bool(np.max(np.abs(block - block.conj().T)) < 1e-12)
    return Operator(layout, full, hermitian_hint=hermitian)


def basis_state(ion, n_v: int, n_c: int, layout: ModeLayout) -> StateVector:
    """Product basis state |ion, n_v, n_c⟩ as a unit StateVector."""
    amps = np.zeros(layout.total_dim, dtype=np.complex128)
    amps[layout.index_of(ion, n_v, n_c)] = 1.0
    return StateVector(layout, amps)


def fidelity(psi: StateVector, phi: StateVector) -> float:
    """|⟨ψ|φ⟩|² for normalized pure states; symmetric, global-phase invariant."""
    _check_same_layout(psi.layout, phi.layout)
    return float(abs(np.vdot(psi.amplitudes, phi.amplitudes)) ** 2)
