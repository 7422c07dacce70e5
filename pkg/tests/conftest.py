"""Shared fixtures for the long microscopic runs and the acceptance summary."""

from dataclasses import dataclass

import numpy as np
import pytest

from iontrap_ghz.cli import run_scenario
from iontrap_ghz.config import parse_config
from iontrap_ghz.open_system import BathParams, TrajectoryConfig, run_ensemble
from iontrap_ghz.trap_model import (
    IntegratorConfig, TrapParams, effective_chi, fock_product_state, integrate, initial_composite,
)

_RESULTS: list[tuple[str, bool, str]] = []


def record_criterion(name: str, passed: bool, detail: str) -> None:
    _RESULTS.append((name, bool(passed), detail))
    print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")


@pytest.fixture
def criterion():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")


@dataclass
class ClosedRun:
    params: TrapParams
    chi: float
    gate: float
    times: np.ndarray
    states: np.ndarray
    gate_state: np.ndarray


def _closed_run(n0: int, n_max: int, t_end: float = 1600.0) -> ClosedRun:
    """N=2 closed run from |gg, n0>, split so one segment ends exactly at the gate time."""
    params = TrapParams(n_ions=2, n_max=n_max)
    chi = effective_chi(params)
    gate = np.pi / (8 * chi)
    cfg = IntegratorConfig(dt=0.01, record_stride=100)
    first = integrate(fock_product_state(2, n_max, n0), 0.0, gate, params, cfg)
    second = integrate(first.final_state, gate, t_end, params, cfg)
    times = np.concatenate([first.times, second.times[1:]])
    states = np.concatenate([first.states, second.states[1:]])
    return ClosedRun(params, chi, gate, times, states, first.final_state)


@pytest.fixture(scope="session")
def closed_n0():
    return _closed_run(0, n_max=10)


@pytest.fixture(scope="session")
def closed_n2():
    return _closed_run(2, n_max=14)


@pytest.fixture(scope="session")
def fig3_outputs(tmp_path_factory):
    """The full N=4 thermal scenario at its default settings."""
    out = tmp_path_factory.mktemp("fig3")
    cfg = parse_config("", ["scenario=fig3"])
    return cfg, run_scenario(cfg, out)


@pytest.fixture(scope="session")
def thermal_oracle():
    params = TrapParams(n_ions=1, omega_rabi=0.0, n_max=60)
    bath = BathParams(gamma=0.01, n_th=5.0)
    cfg = TrajectoryConfig(master_seed=0, n_trajectories=500, dt=0.02, record_stride=1500)
    return bath, run_ensemble(initial_composite(1, 0, 60), params, bath, cfg, t1=300.0)
