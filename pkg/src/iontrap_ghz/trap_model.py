"""Microscopic model: N two-level ions sharing the centre-of-mass mode.

Composite state vectors are indexed ``s * (n_max + 1) + n`` where ``s`` is the
internal bitstring (bit i set means ion i is excited) and ``n`` the Fock level.
Internally states are handled as arrays of shape (..., 2**N, n_max + 1).

Evolution is carried out in the interaction picture with respect to the bare
trap + atom Hamiltonian, with nu = 1 and hbar = 1.  The two laser fields at
w_eg -/+ delta then contribute the factor e^{+i delta t} + e^{-i delta t}, and
the Lamb-Dicke factor becomes the Fock-phase-rotated displacement
D(t) = F D F^dagger with F = diag(exp(-i n nu t)), i.e.
exp(i eta (a e^{i nu t} + a^dagger e^{-i nu t})).

Both laser beams carry a common optical phase ``laser_phase`` multiplying
sigma_+.  It only fixes the phase origin of the internal rotating frame; the
default -pi/2 orients the effective pair coupling along Jx, so the model maps
onto the collective-spin Hamiltonian 4 chi Jx^2 including the sign of the
ground/excited coherence.  With 0 the same dynamics appears rotated about z.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import NumericalError

log = logging.getLogger(__name__)

NORM_ABORT = 1e-4
MAX_DT = 0.02


@dataclass(frozen=True)
class TrapParams:
    """Trap and laser parameters, frequencies in units of the trap frequency nu."""

    delta: float = 0.9
    omega_rabi: float = 0.1
    eta: float = 0.1
    n_ions: int = 4
    n_max: int = 40
    nu: float = 1.0
    laser_phase: float = -np.pi / 2

    def __post_init__(self):
        if not 0 < self.delta < self.nu:
            raise ValueError(f"need 0 < delta < nu, got delta={self.delta}, nu={self.nu}")
        if self.omega_rabi < 0:
            raise ValueError("omega_rabi must be non-negative")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")
        if int(self.n_ions) != self.n_ions or self.n_ions < 1:
            raise ValueError("n_ions must be a positive integer")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError("n_max must be an integer >= 1")
        if self.eta * np.sqrt(self.n_max) >= 1:
            log.warning("eta*sqrt(n_max) = %.3g >= 1: far outside the Lamb-Dicke regime",
                        self.eta * np.sqrt(self.n_max))

    @property
    def internal_dim(self) -> int:
        return 2 ** self.n_ions

    @property
    def fock_dim(self) -> int:
        return self.n_max + 1

    @property
    def dimension(self) -> int:
        return self.internal_dim * self.fock_dim


def effective_chi(params: TrapParams) -> float:
    """Pair coupling chi = eta^2 Omega^2 nu / (2 (nu^2 - delta^2))."""
    p = params
    return p.eta**2 * p.omega_rabi**2 * p.nu / (2 * (p.nu**2 - p.delta**2))


def gate_time(chi: float) -> float:
    return np.pi / (8 * chi)


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 0.01
    record_stride: int = 100
    method: str = "rk4"

    def __post_init__(self):
        if not 0 < self.dt <= MAX_DT:
            raise ValueError(f"dt must lie in (0, {MAX_DT}], got {self.dt}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError("record_stride must be a positive integer")
        if self.method != "rk4":
            raise ValueError(f"unknown integration method {self.method!r}")


@dataclass(frozen=True)
class LambDickeCoupling:
    eta: float
    displacement_plus: np.ndarray


def build_fock_ladder(n_max: int) -> tuple[np.ndarray, np.ndarray]:
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    a = np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1).astype(complex)
    return a, a.conj().T


def build_displacement(eta: float, n_max: int) -> LambDickeCoupling:
    """exp(i eta (a + a^dagger)) on the truncated Fock space, to all orders in eta."""
    if eta < 0:
        raise ValueError("eta must be non-negative")
    a, ad = build_fock_ladder(n_max)
    return LambDickeCoupling(eta, expm(1j * eta * (a + ad)))


def collective_raising(n_ions: int) -> np.ndarray:
    """Sum of sigma_+ over all ions in the 2**N bitstring basis."""
    dim = 2**n_ions
    s_plus = np.zeros((dim, dim))
    for s in range(dim):
        for i in range(n_ions):
            if not (s >> i) & 1:
                s_plus[s | (1 << i), s] += 1.0
    return s_plus


def fock_phases(t: float, params: TrapParams) -> np.ndarray:
    """Diagonal of F = diag(exp(-i n nu t))."""
    return np.exp(-1j * params.nu * t * np.arange(params.fock_dim))


def rotated_displacement(t: float, params: TrapParams, coupling: LambDickeCoupling | None = None) -> np.ndarray:
    coupling = coupling or build_displacement(params.eta, params.n_max)
    f = fock_phases(t, params)
    return f[:, None] * coupling.displacement_plus * f.conj()[None, :]


def hamiltonian_at(t: float, params: TrapParams) -> np.ndarray:
    """Dense interaction-picture Hamiltonian on the composite space.

    H(t) = sum_i sum_{s=+1,-1} (Omega/2) sigma_+i D(t) e^{i s delta t} + h.c.
    """
    s_plus = collective_raising(params.n_ions)
    d_t = rotated_displacement(t, params)
    envelope = params.omega_rabi / 2 * (np.exp(1j * params.delta * t) + np.exp(-1j * params.delta * t))
    envelope *= np.exp(1j * params.laser_phase)
    h_up = envelope * np.kron(s_plus, d_t)
    return h_up + h_up.conj().T


class TrapDynamics:
    """Structured right-hand side of the Schrodinger equation.

    ``rhs(t, psi)`` returns -i H_eff(t) psi for a batch of states of shape
    (K, 2**N, n_max + 1).  ``fock_decay`` is an optional real vector k(n) that
    adds the non-Hermitian term -(i/2) diag(k) on the Fock factor.
    """

    def __init__(self, params: TrapParams, fock_decay: np.ndarray | None = None):
        self.params = params
        s_plus = collective_raising(params.n_ions) * np.exp(1j * params.laser_phase)
        self._s_stack = np.vstack([s_plus, s_plus.conj().T])
        disp = build_displacement(params.eta, params.n_max).displacement_plus
        # psi @ D(t)^T = ((psi F*) @ D^T) F  and  psi @ conj(D(t)) = ((psi F*) @ conj(D)) F
        self._d_stack = np.vstack([disp.T, disp.conj()])
        self._n = np.arange(params.fock_dim)
        self._dim = params.internal_dim
        self.fock_decay = None if fock_decay is None else -0.5 * np.asarray(fock_decay, dtype=float)

    def rhs(self, t: float, psi: np.ndarray) -> np.ndarray:
        p = self.params
        k, dim, nf = psi.shape
        if p.omega_rabi == 0:
            if self.fock_decay is None:
                return np.zeros_like(psi)
            return self.fock_decay * psi
        coeff = -1j * p.omega_rabi * np.cos(p.delta * t)
        ph = np.exp(-1j * p.nu * t * self._n)
        lifted = np.matmul(self._s_stack, psi) * ph.conj()
        lifted = lifted.reshape(k, 2, dim, nf).transpose(0, 2, 1, 3).reshape(k, dim, 2 * nf)
        out = np.matmul(lifted, self._d_stack)
        out *= coeff * ph
        if self.fock_decay is not None:
            out += self.fock_decay * psi
        return out

    def rk4_step(self, t: float, psi: np.ndarray, dt: float) -> np.ndarray:
        if self.params.omega_rabi == 0:
            # time-independent diagonal generator: RK4 reduces to a fixed multiplier
            if self.fock_decay is None:
                return psi.copy()
            x = dt * self.fock_decay
            return psi * (1 + x * (1 + x / 2 * (1 + x / 3 * (1 + x / 4))))
        half = 0.5 * dt
        k1 = self.rhs(t, psi)
        k2 = self.rhs(t + half, psi + half * k1)
        k3 = self.rhs(t + half, psi + half * k2)
        k4 = self.rhs(t + dt, psi + dt * k3)
        return psi + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def step_count(t0: float, t1: float, dt: float) -> int:
    if not t1 > t0:
        raise ValueError(f"need t1 > t0, got t0={t0}, t1={t1}")
    return max(1, int(round((t1 - t0) / dt)))


@dataclass
class IntegrationResult:
    times: np.ndarray
    states: np.ndarray  # (n_records, dimension)
    params: TrapParams

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def integrate(state: np.ndarray, t0: float, t1: float, params: TrapParams,
              cfg: IntegratorConfig = IntegratorConfig()) -> IntegrationResult:
    """Fixed-step RK4 integration of the closed-system dynamics.

    The step count is round((t1 - t0)/dt); snapshots are taken at t0, every
    ``record_stride`` steps and at the final step.
    """
    psi0 = np.asarray(state, dtype=complex).reshape(1, params.internal_dim, params.fock_dim)
    norm0 = np.vdot(psi0, psi0).real
    if abs(norm0 - 1) > 1e-9:
        raise ValueError(f"initial state is not normalized (|psi|^2 = {norm0})")
    dyn = TrapDynamics(params)
    n_steps = step_count(t0, t1, cfg.dt)
    psi = psi0
    times, states = [t0], [psi[0].ravel().copy()]
    for step in range(1, n_steps + 1):
        psi = dyn.rk4_step(t0 + (step - 1) * cfg.dt, psi, cfg.dt)
        if step % cfg.record_stride == 0 or step == n_steps:
            t = t0 + step * cfg.dt
            drift = abs(np.vdot(psi, psi).real - 1)
            if drift > NORM_ABORT:
                raise NumericalError(
                    f"norm drift {drift:.3g} at t={t:.6g}: reduce dt (now {cfg.dt}) "
                    f"or raise n_max (now {params.n_max})"
                )
            times.append(t)
            states.append(psi[0].ravel().copy())
    return IntegrationResult(np.array(times), np.array(states), params)


def thermal_weights(n_th: float, n_max: int) -> np.ndarray:
    """Thermal occupation p(n) ~ (n_th/(n_th+1))^n for n = 0..n_max, renormalized."""
    if n_th < 0:
        raise ValueError("n_th must be non-negative")
    if n_th == 0:
        w = np.zeros(n_max + 1)
        w[0] = 1.0
        return w
    w = (n_th / (n_th + 1)) ** np.arange(n_max + 1)
    return w / w.sum()


@dataclass(frozen=True)
class FockEnsemble:
    """All ions in g with the Fock level drawn from ``weights`` per trajectory."""

    n_ions: int
    weights: np.ndarray

    def state_for_level(self, n: int) -> np.ndarray:
        return fock_product_state(self.n_ions, len(self.weights) - 1, n)


def fock_product_state(n_ions: int, n_max: int, n: int) -> np.ndarray:
    if not 0 <= n <= n_max:
        raise ValueError(f"Fock level {n} outside 0..{n_max}")
    psi = np.zeros((2**n_ions, n_max + 1), dtype=complex)
    psi[0, n] = 1.0
    return psi.ravel()


def initial_composite(n_ions: int, fock_weights, n_max: int | None = None):
    """All ions in g; a pure state for a single Fock level, else an ensemble spec.

    ``fock_weights`` is either an integer Fock level or a weight vector over
    levels 0..len-1.  With ``n_max`` given, weight beyond n_max is rejected and
    the vector is zero-padded up to n_max.
    """
    if np.isscalar(fock_weights) and float(fock_weights).is_integer():
        n = int(fock_weights)
        if n_max is None:
            n_max = max(n, 1)
        return fock_product_state(n_ions, n_max, n)
    w = np.asarray(fock_weights, dtype=float)
    if w.ndim != 1 or np.any(w < 0):
        raise ValueError("Fock weights must be a non-negative vector")
    if abs(w.sum() - 1) > 1e-9:
        raise ValueError(f"Fock weights must sum to 1 (sum={w.sum()})")
    if n_max is not None:
        if np.any(w[n_max + 1:] > 0):
            raise ValueError(f"Fock weight beyond n_max={n_max}")
        w = np.pad(w[: n_max + 1], (0, max(0, n_max + 1 - len(w))))
    nonzero = np.flatnonzero(w)
    if len(nonzero) == 1:
        return fock_product_state(n_ions, len(w) - 1, int(nonzero[0]))
    return FockEnsemble(n_ions, w)
