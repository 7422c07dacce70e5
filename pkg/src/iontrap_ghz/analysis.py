"""Internal-state observables and spin-model comparison.

The reported coherence is rho[e..e, g..g] = sum_n psi[e..e, n] psi*[g..g, n],
taken in the frame rotating at w_eg (the frame the trap model evolves in).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.optimize import curve_fit

from . import spin_model

HERMITIAN_TOL = 1e-10


def _as_batch(state, n_ions: int) -> np.ndarray:
    psi = np.asarray(state, dtype=complex)
    dim = 2**n_ions
    if psi.ndim == 1:
        psi = psi[None]
    return psi.reshape(psi.shape[0], dim, -1)


def trace_out_vibration(state, n_ions: int, weights=None) -> np.ndarray:
    """Reduced internal density matrix, averaged over an ensemble if given.

    ``state`` is a composite vector, or a stack of them (one per row) whose
    reduced matrices are averaged with ``weights`` (uniform by default).
    """
    psi = _as_batch(state, n_ions)
    rho = np.einsum("ksn,ktn->kst", psi, psi.conj())
    if weights is None:
        rho = rho.mean(axis=0)
    else:
        w = np.asarray(weights, dtype=float)
        rho = np.tensordot(w / w.sum(), rho, axes=1)
    return 0.5 * (rho + rho.conj().T)


def check_density_matrix(rho: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    if np.abs(rho - rho.conj().T).max() > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1) > tol:
        raise ValueError(f"density matrix trace {np.trace(rho).real} != 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise ValueError("density matrix has a negative eigenvalue")


def dicke_vectors(n_ions: int) -> np.ndarray:
    """Rows are the normalized symmetric states |J=N/2, M>, ascending M."""
    dim = 2**n_ions
    counts = np.array([bin(s).count("1") for s in range(dim)])
    w = np.zeros((n_ions + 1, dim))
    for k in range(n_ions + 1):
        w[k, counts == k] = 1 / np.sqrt(comb(n_ions, k))
    return w


def project_symmetric(rho: np.ndarray) -> tuple[np.ndarray, float]:
    """Block of rho on the symmetric subspace, and the weight outside it."""
    n_ions = int(np.log2(rho.shape[0]))
    w = dicke_vectors(n_ions)
    block = w @ rho @ w.T
    return block, float(1 - np.trace(block).real)


def internal_observables(psi: np.ndarray, n_ions: int) -> dict[str, np.ndarray]:
    """Observables of each (normalized) state in a (K, 2**N, n_max+1) batch."""
    norm2 = np.einsum("ksn,ksn->k", psi, psi.conj()).real
    g, e = psi[:, 0, :], psi[:, -1, :]
    fock_pop = np.einsum("ksn,ksn->kn", psi, psi.conj()).real
    sym = np.einsum("ms,ksn->kmn", dicke_vectors(n_ions), psi)
    overlap = np.einsum("ksn,ktn->kst", psi.conj(), psi)  # psi^dagger psi, Fock x Fock
    return {
        "p_ground": np.einsum("kn,kn->k", g, g.conj()).real / norm2,
        "p_excited": np.einsum("kn,kn->k", e, e.conj()).real / norm2,
        "rho_eg": np.einsum("kn,kn->k", e, g.conj()) / norm2,
        "n_mean": fock_pop @ np.arange(psi.shape[2]) / norm2,
        "leakage": 1 - np.einsum("kmn,kmn->k", sym, sym.conj()).real / norm2,
        "purity": np.einsum("kst,kst->k", overlap, overlap.conj()).real / norm2**2,
    }


@dataclass
class Fig3Observables:
    times: np.ndarray
    p_ground: np.ndarray
    p_excited: np.ndarray
    rho_eg: np.ndarray

    @property
    def re_rho_eg(self) -> np.ndarray:
        return self.rho_eg.real

    @property
    def im_rho_eg(self) -> np.ndarray:
        return self.rho_eg.imag

    def curves(self) -> dict[str, np.ndarray]:
        """The four reported curves, in CSV column order."""
        return {
            "P_ground": self.p_ground,
            "Im_rho_eg": self.im_rho_eg,
            "P_excited": self.p_excited,
            "Re_rho_eg": self.re_rho_eg,
        }

    def check(self, tol: float = 1e-9) -> None:
        for name in ("p_ground", "p_excited"):
            v = getattr(self, name)
            if v.min() < -tol or v.max() > 1 + tol:
                raise ValueError(f"{name} leaves [0, 1]")
        bound = np.sqrt(np.clip(self.p_ground * self.p_excited, 0, None)) + tol
        if np.any(np.abs(self.rho_eg) > bound):
            raise ValueError("coherence exceeds sqrt(P_g P_e)")


def fig3_from_states(times, states, n_ions: int) -> Fig3Observables:
    obs = internal_observables(_as_batch(states, n_ions), n_ions)
    return Fig3Observables(np.asarray(times), obs["p_ground"], obs["p_excited"], obs["rho_eg"])


def spin_reference(times, chi: float, n_ions: int) -> Fig3Observables:
    """Curves of the collective-spin model 4 chi Jx^2 started in |g..g>."""
    psi = spin_model.evolve_quadratic(n_ions, chi, times)
    return Fig3Observables(
        np.asarray(times, dtype=float),
        np.abs(psi[:, 0]) ** 2,
        np.abs(psi[:, -1]) ** 2,
        psi[:, -1] * psi[:, 0].conj(),
    )


def _check_grid(times: np.ndarray) -> None:
    if times.ndim != 1 or len(times) < 2 or np.any(np.diff(times) <= 0):
        raise ValueError("time grid must be strictly increasing with at least two points")


def curve_deviation(t_a, y_a, t_b, y_b) -> tuple[float, float]:
    """Max and RMS difference of two curves on the union of their grids.

    Both curves are linearly interpolated onto the union grid; the grids must
    cover the same interval.
    """
    t_a, t_b = np.asarray(t_a, float), np.asarray(t_b, float)
    _check_grid(t_a)
    _check_grid(t_b)
    span = max(t_a[-1] - t_a[0], t_b[-1] - t_b[0])
    if abs(t_a[0] - t_b[0]) > 1e-9 * span or abs(t_a[-1] - t_b[-1]) > 1e-9 * span:
        raise ValueError(
            f"time grids cover different intervals: [{t_a[0]}, {t_a[-1]}] vs [{t_b[0]}, {t_b[-1]}]"
        )
    grid = np.union1d(t_a, t_b)
    diff = np.interp(grid, t_a, y_a) - np.interp(grid, t_b, y_b)
    return float(np.abs(diff).max()), float(np.sqrt(np.mean(diff**2)))


@dataclass
class DeviationReport:
    max_deviation: dict[str, float]
    rms_deviation: dict[str, float]

    @property
    def overall_max(self) -> float:
        return max(self.max_deviation.values())

    @property
    def overall_rms(self) -> float:
        return max(self.rms_deviation.values())


def compare_curves(a: Fig3Observables, b: Fig3Observables) -> DeviationReport:
    ca, cb = a.curves(), b.curves()
    mx, rms = {}, {}
    for name in ca:
        mx[name], rms[name] = curve_deviation(a.times, ca[name], b.times, cb[name])
    return DeviationReport(mx, rms)


def compare_to_spin_model(fig3: Fig3Observables, chi: float, n_ions: int) -> DeviationReport:
    """Deviation of microscopic curves from the spin model with coupling ``chi``."""
    _check_grid(np.asarray(fig3.times, float))
    return compare_curves(fig3, spin_reference(fig3.times, chi, n_ions))


def _sin2(t, w):
    return np.sin(w * t) ** 2


def fit_pair_frequency(times, p_excited) -> float:
    """Least-squares fit of P_excited(t) = sin^2(w t); returns w.

    Valid while the record spans less than a quarter oscillation (w t < pi/2).
    The starting guess comes from the last sample alone, so the fit does not
    depend on any model value of the coupling.
    """
    times = np.asarray(times, float)
    p_excited = np.asarray(p_excited, float)
    t_last = times[-1]
    guess = np.arcsin(np.sqrt(np.clip(p_excited[-1], 0, 1))) / t_last
    if guess <= 0:
        guess = 1 / t_last
    (w,), _ = curve_fit(_sin2, times, p_excited, p0=[guess], bounds=(0, np.pi / (2 * t_last)))
    return float(w)
