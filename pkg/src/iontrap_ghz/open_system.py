"""Monte Carlo wave-function trajectories for the thermally coupled trap mode.

The centre-of-mass mode exchanges quanta with a bath through the jump
operators c1 = sqrt(G (n_th+1)) a and c2 = sqrt(G n_th) a^dagger.  Between
jumps each state evolves under H(t) - (i/2)(c1^dag c1 + c2^dag c2) without
renormalization; a jump fires once the squared norm falls to a uniform random
threshold.  The jump time is resolved to the integration step.

Random numbers: every trajectory owns a PCG64 generator seeded by
``SeedSequence(master_seed, spawn_key=(trajectory_index,))``.  Its first draw
picks the initial Fock level (ensembles only), the following draws alternate
between jump thresholds and channel choices.  All trajectories of an ensemble
are stepped together as one batch; no state is shared between them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analysis import internal_observables
from .errors import NumericalError
from .trap_model import (
    FockEnsemble,
    IntegratorConfig,
    TrapDynamics,
    TrapParams,
    build_fock_ladder,
    step_count,
)

OBSERVABLES = ("p_ground", "p_excited", "rho_eg", "n_mean", "leakage", "purity", "norm2")
NORM_FLOOR = 1e-300


@dataclass(frozen=True)
class BathParams:
    gamma: float = 1e-4
    n_th: float = 5.0

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if self.n_th < 0:
            raise ValueError("n_th must be non-negative")


@dataclass(frozen=True)
class TrajectoryConfig:
    master_seed: int = 0
    n_trajectories: int = 10
    dt: float = 0.01
    record_stride: int = 100

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be >= 1")
        IntegratorConfig(self.dt, self.record_stride)

    @property
    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(self.dt, self.record_stride)


@dataclass
class TrajectoryResult:
    trajectory_index: int
    initial_level: int | None
    times: np.ndarray
    observables: dict[str, np.ndarray]
    jump_log: list[tuple[float, int]] = field(default_factory=list)
    final_state: np.ndarray | None = None
    states: np.ndarray | None = None


@dataclass
class EnsembleResult:
    times: np.ndarray
    mean: dict[str, np.ndarray]
    stderr: dict[str, np.ndarray]
    trajectories: list[TrajectoryResult]


def jump_operators(bath: BathParams, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    a, ad = build_fock_ladder(n_max)
    return np.sqrt(bath.gamma * (bath.n_th + 1)) * a, np.sqrt(bath.gamma * bath.n_th) * ad


def jump_rates(bath: BathParams, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Diagonals of c1^dag c1 and c2^dag c2 in the truncated Fock basis."""
    c1, c2 = jump_operators(bath, n_max)
    return np.real(np.diag(c1.conj().T @ c1)), np.real(np.diag(c2.conj().T @ c2))


def effective_hamiltonian_term(bath: BathParams, n_max: int) -> np.ndarray:
    """-(i/2)(c1^dag c1 + c2^dag c2) on the Fock factor.

    Built from the truncated ladder matrices, so the top level carries no
    up-jump rate (a^dagger annihilates |n_max> after truncation).
    """
    r1, r2 = jump_rates(bath, n_max)
    return np.diag(-0.5j * (r1 + r2))


def trajectory_rng(master_seed: int, trajectory_index: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(trajectory_index,)))
    )


def _propagate(psi0, params: TrapParams, bath: BathParams, t0: float, t1: float,
               cfg: IntegratorConfig, rngs, store_states: bool):
    """Step a batch of trajectories in lockstep; returns times, records, logs, final."""
    r1, r2 = jump_rates(bath, params.n_max)
    dyn = TrapDynamics(params, fock_decay=r1 + r2 if bath.gamma > 0 else None)
    sqrt_r1, sqrt_r2 = np.sqrt(r1), np.sqrt(r2)
    psi = np.array(psi0, dtype=complex)
    k = psi.shape[0]
    thresholds = np.array([rng.random() for rng in rngs]) if bath.gamma > 0 else np.zeros(k)
    logs: list[list[tuple[float, int]]] = [[] for _ in range(k)]
    n_steps = step_count(t0, t1, cfg.dt)

    times = [t0]
    records = [_record(psi, params.n_ions)]
    snaps = [psi.copy()] if store_states else None
    for step in range(1, n_steps + 1):
        t = t0 + step * cfg.dt
        psi = dyn.rk4_step(t0 + (step - 1) * cfg.dt, psi, cfg.dt)
        if bath.gamma > 0:
            norm2 = np.einsum("ksn,ksn->k", psi, psi.conj()).real
            if norm2.min() < NORM_FLOOR:
                raise NumericalError(f"norm underflow at t={t:.6g} without a resolved jump")
            for j in np.flatnonzero(norm2 <= thresholds):
                psi[j] = _jump(psi[j], sqrt_r1, sqrt_r2, rngs[j], logs[j], t)
                thresholds[j] = rngs[j].random()
        if step % cfg.record_stride == 0 or step == n_steps:
            times.append(t)
            records.append(_record(psi, params.n_ions))
            if store_states:
                snaps.append(psi.copy())
            if bath.gamma == 0:
                drift = np.abs(records[-1]["norm2"] - 1).max()
                if drift > 1e-4:
                    raise NumericalError(f"norm drift {drift:.3g} at t={t:.6g}; reduce dt or raise n_max")
    stacked = {name: np.array([r[name] for r in records]).T for name in OBSERVABLES}
    return np.array(times), stacked, logs, psi, (np.array(snaps).transpose(1, 0, 2, 3) if store_states else None)


def _record(psi: np.ndarray, n_ions: int) -> dict[str, np.ndarray]:
    obs = internal_observables(psi, n_ions)
    obs["norm2"] = np.einsum("ksn,ksn->k", psi, psi.conj()).real
    return obs


def _jump(psi: np.ndarray, sqrt_r1, sqrt_r2, rng, log, t: float) -> np.ndarray:
    # interaction-picture jump operators differ from a, a^dag only by a global phase
    # c1 psi and c2 psi as Fock shifts: (a psi)[n] = sqrt(n+1) psi[n+1]
    down = np.zeros_like(psi)
    down[:, :-1] = psi[:, 1:] * sqrt_r1[1:]
    up = np.zeros_like(psi)
    up[:, 1:] = psi[:, :-1] * sqrt_r2[:-1]
    w_down = np.vdot(down, down).real
    w_up = np.vdot(up, up).real
    total = w_down + w_up
    if not total > NORM_FLOOR:
        raise NumericalError(f"jump requested at t={t:.6g} but both channels have zero weight")
    if rng.random() * total < w_down:
        channel, new, weight = 1, down, w_down
    else:
        channel, new, weight = 2, up, w_up
    log.append((t, channel))
    return new / np.sqrt(weight)


def run_trajectory(initial: np.ndarray, params: TrapParams, bath: BathParams, cfg: TrajectoryConfig,
                   trajectory_index: int = 0, t0: float = 0.0, t1: float = 1600.0,
                   store_states: bool = False) -> TrajectoryResult:
    """One quantum trajectory from a pure composite state."""
    psi0 = np.asarray(initial, dtype=complex).reshape(1, params.internal_dim, params.fock_dim)
    if abs(np.vdot(psi0, psi0).real - 1) > 1e-9:
        raise ValueError("initial state is not normalized")
    rng = trajectory_rng(cfg.master_seed, trajectory_index)
    times, obs, logs, final, snaps = _propagate(psi0, params, bath, t0, t1, cfg.integrator, [rng], store_states)
    return TrajectoryResult(
        trajectory_index, None, times, {k: v[0] for k, v in obs.items()}, logs[0],
        final[0].ravel(), None if snaps is None else snaps[0].reshape(len(times), -1),
    )


def run_ensemble(initial_spec, params: TrapParams, bath: BathParams, cfg: TrajectoryConfig,
                 t0: float = 0.0, t1: float = 1600.0, store_states: bool = False) -> EnsembleResult:
    """Run ``cfg.n_trajectories`` trajectories and average their observables.

    ``initial_spec`` is a pure composite state or a :class:`FockEnsemble`; for
    an ensemble each trajectory draws its Fock level from its own stream.
    """
    k = cfg.n_trajectories
    rngs = [trajectory_rng(cfg.master_seed, i) for i in range(k)]
    levels: list[int | None]
    if isinstance(initial_spec, FockEnsemble):
        if len(initial_spec.weights) != params.fock_dim:
            raise ValueError("ensemble weights must cover Fock levels 0..n_max")
        if initial_spec.n_ions != params.n_ions:
            raise ValueError("ensemble and trap disagree on n_ions")
        levels = [int(rng.choice(params.fock_dim, p=initial_spec.weights)) for rng in rngs]
        psi0 = np.array([initial_spec.state_for_level(n) for n in levels])
    else:
        psi = np.asarray(initial_spec, dtype=complex).ravel()
        if abs(np.vdot(psi, psi).real - 1) > 1e-9:
            raise ValueError("initial state is not normalized")
        levels = [None] * k
        psi0 = np.tile(psi, (k, 1))
    psi0 = psi0.reshape(k, params.internal_dim, params.fock_dim)
    times, obs, logs, final, snaps = _propagate(psi0, params, bath, t0, t1, cfg.integrator, rngs, store_states)
    trajectories = [
        TrajectoryResult(i, levels[i], times, {name: v[i] for name, v in obs.items()}, logs[i],
                         final[i].ravel(), None if snaps is None else snaps[i].reshape(len(times), -1))
        for i in range(k)
    ]
    mean = {name: v.mean(axis=0) for name, v in obs.items()}
    if k > 1:
        stderr = {name: v.std(axis=0, ddof=1) / np.sqrt(k) for name, v in obs.items()}
    else:
        stderr = {name: np.zeros_like(v[0], dtype=float) for name, v in obs.items()}
    return EnsembleResult(times, mean, stderr, trajectories)
