import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st

from iontrap_ghz import ConfigError
from iontrap_ghz.cli import main, resolve_chi, run_scenario
from iontrap_ghz.config import ScenarioConfig, format_config, parse_config

FIG3_TEXT = """
# default gate and reservoir parameters
delta = 0.9
omega_rabi = 0.1
eta = 0.1
gamma = 0.0001
n_th = 5
"""


def read_table(path):
    return pd.read_csv(path, comment="#")


def test_empty_file_with_flags():
    cfg = parse_config("", ["scenario=fig1", "N=4"])
    assert cfg.scenario == "fig1" and cfg.n_ions == 4
    assert cfg == ScenarioConfig(scenario="fig1", n_ions=4)
    assert cfg.chi_from_trap


def test_fig3_defaults_round_trip():
    cfg = parse_config(FIG3_TEXT)
    assert cfg == ScenarioConfig()
    assert (cfg.delta, cfg.omega_rabi, cfg.eta, cfg.gamma, cfg.n_th) == (0.9, 0.1, 0.1, 1e-4, 5.0)
    assert parse_config(format_config(cfg)) == cfg


@pytest.mark.parametrize("text, pattern", [
    ("gamma = -1\n", r"line 1: gamma must be non-negative"),
    ("\n\ndelta 0.5\n", r"line 3: expected key = value"),
    ("eta = 0.1\nfoo = 3\n", r"line 2: unknown key 'foo'"),
    ("n_max = many\n", r"line 1: bad value 'many' for 'n_max'"),
    ("delta = 1.5\n", r"delta must satisfy"),
    ("chi = 0.01\nchi_from_trap = true\n", r"conflicts with explicit chi"),
    ("chi_from_trap = false\n", r"requires an explicit chi"),
    ("dt = 0.1\n", r"dt must lie"),
    ("scenario = fig9\n", r"scenario must be one of"),
])
def test_config_errors(text, pattern):
    with pytest.raises(ConfigError, match=pattern):
        parse_config(text)


def test_override_error_names_flag():
    with pytest.raises(ConfigError, match=r"--set 'gamma=-1'.*gamma"):
        parse_config("", ["gamma=-1"])


def test_later_assignment_wins():
    assert parse_config("n_max = 12\n", ["n_max=20"]).n_max == 20


configs = st.builds(
    ScenarioConfig,
    scenario=st.sampled_from(["fig1", "fig3", "odd_n", "thermal"]),
    n_ions=st.integers(1, 8),
    n_ions_list=st.lists(st.integers(1, 9), max_size=3).map(tuple),
    delta=st.floats(0.01, 0.99),
    omega_rabi=st.floats(0.001, 1),
    eta=st.floats(0.001, 0.5),
    n_max=st.integers(1, 60),
    gamma=st.floats(0, 1),
    n_th=st.floats(0, 20),
    chi=st.none() | st.floats(1e-6, 1),
    xi=st.none() | st.floats(1e-6, 1),
    dt=st.floats(1e-4, 0.02),
    record_stride=st.integers(1, 1000),
    t_end=st.floats(1, 1e5),
    n_trajectories=st.integers(1, 1000),
    master_seed=st.integers(0, 2**63),
    initial=st.sampled_from(["thermal", "fock"]),
    initial_level=st.just(0),
    output=st.sampled_from([".", "out/run1"]),
)


@given(configs)
@settings(max_examples=80)
def test_round_trip(cfg):
    assert parse_config(format_config(cfg)) == cfg


def test_fig1_gate_row(tmp_path):
    cfg = parse_config("", ["scenario=fig1", "n_ions_list=2,4,8"])
    paths = run_scenario(cfg, tmp_path)
    assert [p.name for p in paths] == ["fig1_N2.csv", "fig1_N4.csv", "fig1_N8.csv"]
    for p in paths:
        df = read_table(p)
        assert list(df.columns) == ["chi_t", "P_ground", "P_excited"]
        row = df.iloc[cfg.samples_per_gate]
        assert row.chi_t == pytest.approx(np.pi / 8, abs=1e-11)
        assert row.P_ground == pytest.approx(0.5, abs=1e-9)
        assert row.P_excited == pytest.approx(0.5, abs=1e-9)


def test_odd_n_scenario(tmp_path):
    [path] = run_scenario(parse_config("", ["scenario=odd_n", "N=5"]), tmp_path)
    df = read_table(path)
    assert list(df.columns) == ["chi_t", "P_ground", "P_excited", "fidelity"]
    assert df.fidelity.iloc[100] == pytest.approx(1, abs=1e-9)
    assert df.fidelity.iloc[0] == pytest.approx(0.5)


def test_default_gate_time_inside_fig3_window():
    cfg = ScenarioConfig()
    gate = np.pi / (8 * resolve_chi(cfg))
    assert gate == pytest.approx(1492.26, abs=0.01)
    assert gate < cfg.t_end


def test_small_fig3_outputs(tmp_path):
    cfg = parse_config("", ["scenario=fig3", "N=2", "n_max=6", "t_end=20", "n_trajectories=3",
                            "gamma=0.05", "n_th=1", "record_stride=100"])
    paths = run_scenario(cfg, tmp_path)
    assert [p.name for p in paths] == ["fig3_single.csv", "fig3_ensemble.csv", "fig3_spin.csv", "fig3_jumps.csv"]
    for p in paths[:3]:
        lines = p.read_text().splitlines()
        assert lines[0] == "# scenario fig3" and lines[1] == "# master_seed 0"
        assert "gate_time 1492.2565" in lines[2]
        assert list(read_table(p).columns) == ["nu_t", "P_ground", "Im_rho_eg", "P_excited", "Re_rho_eg"]
        assert len(read_table(p)) == 21
    jumps = read_table(paths[3])
    assert list(jumps.columns) == ["trajectory", "initial_level", "nu_t", "channel"]
    assert set(jumps.channel) <= {1, 2}


def test_floats_use_twelve_significant_digits(tmp_path):
    [path] = run_scenario(parse_config("", ["scenario=fig1", "N=2", "gate_multiples=1", "samples_per_gate=3"]), tmp_path)
    data = [l for l in path.read_text().splitlines() if not l.startswith("#")][1:]
    assert data[1].split(",")[0] == format(np.pi / 24, ".12g") == "0.1308996939"


def test_main_exit_codes(tmp_path, capsys):
    assert main(["fig1", "--set", "N=2", "--out", str(tmp_path)]) == 0
    assert main(["fig1", "--set", "gamma=-1", "--out", str(tmp_path)]) == 1
    assert "gamma" in capsys.readouterr().err
    cfg_file = tmp_path / "bad.cfg"
    cfg_file.write_text("n_ions = 2\nbogus = 1\n")
    assert main(["fig1", "--config", str(cfg_file)]) == 1
    assert "line 2" in capsys.readouterr().err
    rc = main(["fig3", "--set", "N=2", "--set", "n_max=3", "--set", "omega_rabi=80", "--set", "chi=0.01",
               "--set", "gamma=0", "--set", "dt=0.02", "--set", "t_end=5", "--set", "n_trajectories=1",
               "--out", str(tmp_path)])
    assert rc == 2
    assert "norm drift" in capsys.readouterr().err
