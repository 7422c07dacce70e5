"""``simulate`` command line: run a named scenario and write CSV tables."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis, spin_model
from .config import SCENARIOS, ScenarioConfig, format_config, parse_config
from .errors import ConfigError, NumericalError
from .open_system import BathParams, TrajectoryConfig, run_ensemble
from .trap_model import TrapParams, effective_chi, initial_composite, thermal_weights

log = logging.getLogger("iontrap_ghz")

FIG1_COLUMNS = ("chi_t", "P_ground", "P_excited")
FIG3_COLUMNS = ("nu_t", "P_ground", "Im_rho_eg", "P_excited", "Re_rho_eg")
JUMP_COLUMNS = ("trajectory", "initial_level", "nu_t", "channel")
ODD_COLUMNS = ("chi_t", "P_ground", "P_excited", "fidelity")
THERMAL_COLUMNS = ("nu_t", "n_mean", "n_stderr", "n_analytic")


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


def write_csv(path: Path, cfg: ScenarioConfig, columns, rows, note: str = "") -> Path:
    header = [f"# scenario {cfg.scenario}", f"# master_seed {cfg.master_seed}"]
    if note:
        header.append(f"# {note}")
    header += [f"# {line}" for line in format_config(cfg).splitlines()]
    lines = header + [",".join(columns)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def trap_params(cfg: ScenarioConfig, **overrides) -> TrapParams:
    p = TrapParams(delta=cfg.delta, omega_rabi=cfg.omega_rabi, eta=cfg.eta,
                   n_ions=cfg.n_ions, n_max=cfg.n_max)
    return replace(p, **overrides) if overrides else p


def resolve_chi(cfg: ScenarioConfig) -> float:
    return cfg.chi if cfg.chi is not None else effective_chi(trap_params(cfg))


def _gate_grid(cfg: ScenarioConfig) -> np.ndarray:
    k = np.arange(cfg.gate_multiples * cfg.samples_per_gate + 1)
    return k * (np.pi / 8) / cfg.samples_per_gate


def run_fig1(cfg: ScenarioConfig, out: Path) -> list[Path]:
    chi = resolve_chi(cfg)
    chi_t = _gate_grid(cfg)
    paths = []
    for n in cfg.ions:
        psi = spin_model.evolve_quadratic(n, chi, chi_t / chi)
        rows = zip(chi_t, np.abs(psi[:, 0]) ** 2, np.abs(psi[:, -1]) ** 2)
        paths.append(write_csv(out / f"fig1_N{n}.csv", cfg, FIG1_COLUMNS, rows, f"N {n} chi {_fmt(chi)}"))
    return paths


def run_odd_n(cfg: ScenarioConfig, out: Path) -> list[Path]:
    chi = resolve_chi(cfg)
    xi = cfg.xi if cfg.xi is not None else chi
    chi_t = _gate_grid(cfg)
    paths = []
    for n in cfg.ions:
        ops = spin_model.build_ladder(n)
        psi0 = spin_model.ground_state(n)
        rows = []
        for ct in chi_t:
            psi = spin_model.combined_propagator(ops, chi, xi, ct / chi) @ psi0
            pg, pe = spin_model.extremal_populations(psi)
            rows.append((ct, pg, pe, spin_model.ghz_fidelity_phase_optimized(psi)))
        phi_g, phi_e = spin_model.ghz_phases(spin_model.prepare_odd_ghz(n, chi, xi))
        note = (f"N {n} chi {_fmt(chi)} xi {_fmt(xi)} (pair and linear drives applied together); "
                f"sequential preparation phases phi_g {_fmt(phi_g)} phi_e {_fmt(phi_e)}")
        paths.append(write_csv(out / f"odd_n_N{n}.csv", cfg, ODD_COLUMNS, rows, note))
    return paths


def _fig3_rows(fig: analysis.Fig3Observables):
    curves = fig.curves()
    return zip(fig.times, *(curves[c] for c in FIG3_COLUMNS[1:]))


def run_fig3(cfg: ScenarioConfig, out: Path) -> list[Path]:
    params = trap_params(cfg)
    bath = BathParams(cfg.gamma, cfg.n_th)
    tcfg = TrajectoryConfig(cfg.master_seed, cfg.n_trajectories, cfg.dt, cfg.record_stride)
    if cfg.initial == "thermal":
        spec = initial_composite(cfg.n_ions, thermal_weights(cfg.n_th, cfg.n_max), cfg.n_max)
    else:
        spec = initial_composite(cfg.n_ions, cfg.initial_level, cfg.n_max)
    chi = resolve_chi(cfg)
    log.info("fig3: N=%d n_max=%d, %d trajectories to t=%g, gate time %.6g",
             cfg.n_ions, cfg.n_max, cfg.n_trajectories, cfg.t_end, np.pi / (8 * chi))
    ens = run_ensemble(spec, params, bath, tcfg, t1=cfg.t_end)
    single = ens.trajectories[0].observables
    fig_single = analysis.Fig3Observables(ens.times, single["p_ground"], single["p_excited"], single["rho_eg"])
    fig_mean = analysis.Fig3Observables(ens.times, ens.mean["p_ground"], ens.mean["p_excited"], ens.mean["rho_eg"])
    fig_spin = analysis.spin_reference(ens.times, chi, cfg.n_ions)
    report = analysis.compare_to_spin_model(fig_mean, chi, cfg.n_ions)
    log.info("fig3: ensemble vs spin model max deviation %.4g", report.overall_max)
    jumps = [
        (tr.trajectory_index, -1 if tr.initial_level is None else tr.initial_level, t, ch)
        for tr in ens.trajectories for t, ch in tr.jump_log
    ]
    note = f"chi {_fmt(chi)} gate_time {_fmt(np.pi / (8 * chi))}"
    return [
        write_csv(out / "fig3_single.csv", cfg, FIG3_COLUMNS, _fig3_rows(fig_single), note + " trajectory 0"),
        write_csv(out / "fig3_ensemble.csv", cfg, FIG3_COLUMNS, _fig3_rows(fig_mean),
                  note + f" average of {cfg.n_trajectories}"),
        write_csv(out / "fig3_spin.csv", cfg, FIG3_COLUMNS, _fig3_rows(fig_spin), note + " spin model"),
        write_csv(out / "fig3_jumps.csv", cfg, JUMP_COLUMNS, jumps, "channel 1 = a (cooling), 2 = a^dagger (heating)"),
    ]


def run_thermal(cfg: ScenarioConfig, out: Path) -> list[Path]:
    params = trap_params(cfg, omega_rabi=0.0)
    bath = BathParams(cfg.gamma, cfg.n_th)
    tcfg = TrajectoryConfig(cfg.master_seed, cfg.n_trajectories, cfg.dt, cfg.record_stride)
    ens = run_ensemble(initial_composite(cfg.n_ions, cfg.initial_level, cfg.n_max), params, bath, tcfg,
                       t1=cfg.t_end)
    analytic = cfg.n_th + (cfg.initial_level - cfg.n_th) * np.exp(-cfg.gamma * ens.times)
    rows = zip(ens.times, ens.mean["n_mean"], ens.stderr["n_mean"], analytic)
    return [write_csv(out / "thermal.csv", cfg, THERMAL_COLUMNS, rows, "laser coupling off")]


RUNNERS = {"fig1": run_fig1, "fig3": run_fig3, "odd_n": run_odd_n, "thermal": run_thermal}


def run_scenario(cfg: ScenarioConfig, out: str | Path | None = None) -> list[Path]:
    out = Path(out if out is not None else cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    return RUNNERS[cfg.scenario](cfg, out)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="simulate", description=__doc__)
    parser.add_argument("scenario", choices=SCENARIOS)
    parser.add_argument("--config", type=Path, help="key = value configuration file")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    parser.add_argument("--out", help="output directory (overrides the 'output' key)")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
        label = f"{args.config}" if args.config else "config"
        cfg = parse_config(text, [f"scenario={args.scenario}", *args.overrides], label=label)
        if args.out:
            cfg = replace(cfg, output=args.out)
        paths = run_scenario(cfg)
    except (ConfigError, OSError) as exc:
        print(f"simulate: configuration error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"simulate: numerical failure: {exc}", file=sys.stderr)
        return 2
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
