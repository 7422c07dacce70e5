"""Collective-spin description of N identical two-level ions.

The symmetric internal states of N ions are the spin-J multiplet with J = N/2;
|J, M> holds N_e = M + N/2 excited ions.  All vectors and matrices use ascending
M ordering (index 0 is M = -J, the all-ground state).  hbar = 1 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SpinBasis:
    n_ions: int
    m_values: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n_ions) != self.n_ions or self.n_ions < 1:
            raise ValueError(f"n_ions must be a positive integer, got {self.n_ions!r}")
        j = self.n_ions / 2
        object.__setattr__(self, "m_values", np.arange(-j, j + 1.0))

    @property
    def j(self) -> float:
        return self.n_ions / 2

    @property
    def dimension(self) -> int:
        return self.n_ions + 1


@dataclass(frozen=True)
class CollectiveOperators:
    basis: SpinBasis
    j_plus: np.ndarray
    j_minus: np.ndarray
    j_x: np.ndarray
    j_z: np.ndarray


@dataclass(frozen=True)
class QuadraticDrive:
    """Pair drive H = 4 chi Jx^2 applied for ``duration``."""

    chi: float
    duration: float

    def __post_init__(self):
        if not self.chi > 0:
            raise ValueError(f"chi must be positive, got {self.chi}")


@dataclass(frozen=True)
class LinearDrive:
    """Resonant carrier drive H = 4 xi Jx applied for ``duration``."""

    xi: float
    duration: float

    def __post_init__(self):
        if not self.xi > 0:
            raise ValueError(f"xi must be positive, got {self.xi}")


@dataclass(frozen=True)
class GhzTarget:
    phi_g: float
    phi_e: float
    amplitudes: np.ndarray


def build_ladder(basis: SpinBasis | int) -> CollectiveOperators:
    """Return J+, J-, Jx and Jz for the spin-N/2 multiplet.

    J+ raises M by one, so in ascending-M ordering its matrix elements
    sqrt((J+M+1)(J-M)) sit directly below the diagonal.
    """
    if not isinstance(basis, SpinBasis):
        basis = SpinBasis(basis)
    j = basis.j
    m = basis.m_values
    raise_elems = np.sqrt((j + m[:-1] + 1) * (j - m[:-1]))
    j_plus = np.diag(raise_elems, -1).astype(complex)
    j_minus = j_plus.conj().T
    j_x = (j_plus + j_minus) / 2
    j_z = np.diag(m).astype(complex)
    return CollectiveOperators(basis, j_plus, j_minus, j_x, j_z)


def _jx_eigensystem(ops: CollectiveOperators) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(ops.j_x)
    # exact spectrum is -J..J; snap away eigh round-off so phases stay exact
    return np.round(w * 2) / 2, v


def _propagator_from_phases(v: np.ndarray, phases: np.ndarray) -> np.ndarray:
    return (v * phases) @ v.conj().T


def quadratic_propagator(ops: CollectiveOperators, drive: QuadraticDrive) -> np.ndarray:
    """exp(-i 4 chi t Jx^2), built in the Jx eigenbasis."""
    w, v = _jx_eigensystem(ops)
    return _propagator_from_phases(v, np.exp(-4j * drive.chi * drive.duration * w**2))


def linear_propagator(ops: CollectiveOperators, drive: LinearDrive) -> np.ndarray:
    """exp(-i 4 xi t Jx), built in the Jx eigenbasis."""
    w, v = _jx_eigensystem(ops)
    return _propagator_from_phases(v, np.exp(-4j * drive.xi * drive.duration * w))


def combined_propagator(ops: CollectiveOperators, chi: float, xi: float, t: float) -> np.ndarray:
    """exp(-i (4 chi Jx^2 + 4 xi Jx) t); either coupling may be zero."""
    w, v = _jx_eigensystem(ops)
    return _propagator_from_phases(v, np.exp(-4j * t * (chi * w**2 + xi * w)))


def ground_state(n_ions: int) -> np.ndarray:
    psi = np.zeros(n_ions + 1, dtype=complex)
    psi[0] = 1.0
    return psi


def evolve_quadratic(n_ions: int, chi: float, times, initial: np.ndarray | None = None) -> np.ndarray:
    """States exp(-i 4 chi Jx^2 t)|initial> for every t in ``times``.

    Returns an array of shape (len(times), N+1).
    """
    ops = build_ladder(n_ions)
    w, v = _jx_eigensystem(ops)
    psi0 = ground_state(n_ions) if initial is None else np.asarray(initial, dtype=complex)
    coeffs = v.conj().T @ psi0
    times = np.atleast_1d(np.asarray(times, dtype=float))
    phases = np.exp(-4j * chi * np.outer(times, w**2))
    return (phases * coeffs) @ v.T


def ghz_target(n_ions: int) -> GhzTarget:
    """GHZ state with the phases reached by the pair drive at t = pi/(8 chi).

    Only defined for even N; odd N needs the extra linear drive and the
    resulting phases are not fixed in advance.
    """
    if n_ions < 1:
        raise ValueError("n_ions must be positive")
    if n_ions % 2:
        raise ValueError(
            f"GHZ phases are only fixed for even N (got N={n_ions}); "
            "use ghz_fidelity_phase_optimized instead"
        )
    phi_g = -np.pi / 4
    phi_e = np.pi / 4 + n_ions * np.pi / 2
    amps = np.zeros(n_ions + 1, dtype=complex)
    amps[0] = np.exp(1j * phi_g) / np.sqrt(2)
    amps[-1] = np.exp(1j * phi_e) / np.sqrt(2)
    return GhzTarget(phi_g, phi_e, amps)


def extremal_populations(state: np.ndarray) -> tuple[float, float]:
    """Populations of |M=-N/2> (all ground) and |M=+N/2> (all excited)."""
    state = np.asarray(state)
    return float(abs(state[..., 0]) ** 2), float(abs(state[..., -1]) ** 2)


def ghz_fidelity_phase_optimized(state: np.ndarray) -> float:
    """Best overlap with (e^{i a}|-J> + e^{i b}|+J>)/sqrt(2) over a and b."""
    state = np.asarray(state)
    c_g, c_e = state[0], state[-1]
    value = 0.5 * (abs(c_g) ** 2 + abs(c_e) ** 2) + abs(c_g * np.conj(c_e))
    return float(min(max(value, 0.0), 1.0))


def ghz_phases(state: np.ndarray) -> tuple[float, float]:
    """Phases of the all-ground and all-excited amplitudes, in (-pi, pi]."""
    state = np.asarray(state)
    return float(np.angle(state[0])), float(np.angle(state[-1]))


def prepare_odd_ghz(n_ions: int, chi: float, xi: float, linear_first: bool = False) -> np.ndarray:
    """Apply the pair drive for pi/(8 chi) and the linear drive for pi/(8 xi) to |g..g>."""
    ops = build_ladder(n_ions)
    uq = quadratic_propagator(ops, QuadraticDrive(chi, np.pi / (8 * chi)))
    ul = linear_propagator(ops, LinearDrive(xi, np.pi / (8 * xi)))
    psi = ground_state(n_ions)
    if linear_first:
        return uq @ (ul @ psi)
    return ul @ (uq @ psi)
