"""Plain-text ``key = value`` scenario configuration."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Iterable

from .errors import ConfigError

SCENARIOS = ("fig1", "fig3", "odd_n", "thermal")
INITIAL_KINDS = ("thermal", "fock")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = "fig3"
    n_ions: int = 4
    n_ions_list: tuple[int, ...] = ()
    delta: float = 0.9
    omega_rabi: float = 0.1
    eta: float = 0.1
    n_max: int = 40
    gamma: float = 1e-4
    n_th: float = 5.0
    chi: float | None = None
    xi: float | None = None
    dt: float = 0.01
    record_stride: int = 100
    t_end: float = 1600.0
    n_trajectories: int = 10
    master_seed: int = 0
    initial: str = "thermal"
    initial_level: int = 0
    gate_multiples: int = 4
    samples_per_gate: int = 100
    output: str = "."

    @property
    def chi_from_trap(self) -> bool:
        return self.chi is None

    @property
    def ions(self) -> tuple[int, ...]:
        return self.n_ions_list or (self.n_ions,)


_FIELDS = {f.name: f for f in fields(ScenarioConfig)}
_ALIASES = {"N": "n_ions"}
_INT_KEYS = {"n_ions", "n_max", "record_stride", "n_trajectories", "master_seed",
             "initial_level", "gate_multiples", "samples_per_gate"}
_FLOAT_KEYS = {"delta", "omega_rabi", "eta", "gamma", "n_th", "dt", "t_end"}
_OPTIONAL_FLOAT_KEYS = {"chi", "xi"}


def _convert(key: str, raw: str):
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS or key in _OPTIONAL_FLOAT_KEYS:
        return float(raw)
    if key == "n_ions_list":
        return tuple(int(x) for x in raw.split(",") if x.strip())
    if key == "chi_from_trap":
        low = raw.lower()
        if low not in ("true", "false"):
            raise ValueError("expected true or false")
        return low == "true"
    return raw


def _iter_pairs(text: str, label: str, numbered: bool) -> Iterable[tuple[str, str, str]]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        where = f"{label} line {lineno}" if numbered else label
        if "=" not in content:
            raise ConfigError(f"{where}: expected key = value, got {line.strip()!r}")
        key, value = (part.strip() for part in content.split("=", 1))
        if not key or not value:
            raise ConfigError(f"{where}: expected key = value, got {line.strip()!r}")
        yield where, key, value


def parse_config(text: str, overrides: Iterable[str] = (), label: str = "config") -> ScenarioConfig:
    """Parse configuration text, then apply ``key=value`` overrides in order.

    Later assignments replace earlier ones.  Raises :class:`ConfigError` naming
    the offending line and key.
    """
    values: dict[str, object] = {}
    where_of: dict[str, str] = {}
    chi_flag: tuple[str, bool] | None = None
    sources = [(text, label, True)] + [(item, f"--set {item!r}", False) for item in overrides]
    for chunk, chunk_label, numbered in sources:
        for where, key, raw in _iter_pairs(chunk, chunk_label, numbered):
            key = _ALIASES.get(key, key)
            if key not in _FIELDS and key != "chi_from_trap":
                raise ConfigError(f"{where}: unknown key {key!r}")
            try:
                value = _convert(key, raw)
            except ValueError as exc:
                raise ConfigError(f"{where}: bad value {raw!r} for {key!r} ({exc})") from None
            if key == "chi_from_trap":
                chi_flag = (where, value)
            else:
                values[key] = value
                where_of[key] = where
    if chi_flag is not None:
        where, flag = chi_flag
        if flag and "chi" in values:
            raise ConfigError(f"{where}: chi_from_trap = true conflicts with explicit chi ({where_of['chi']})")
        if not flag and "chi" not in values:
            raise ConfigError(f"{where}: chi_from_trap = false requires an explicit chi")
    cfg = replace(ScenarioConfig(), **values)
    _validate(cfg, where_of)
    return cfg


def _validate(cfg: ScenarioConfig, where_of: dict[str, str]) -> None:
    def fail(key: str, msg: str):
        where = where_of.get(key, "default")
        raise ConfigError(f"{where}: {key} {msg}")

    if cfg.scenario not in SCENARIOS:
        fail("scenario", f"must be one of {', '.join(SCENARIOS)} (got {cfg.scenario!r})")
    if cfg.initial not in INITIAL_KINDS:
        fail("initial", f"must be one of {', '.join(INITIAL_KINDS)}")
    if cfg.n_ions < 1:
        fail("n_ions", "must be >= 1")
    if any(n < 1 for n in cfg.n_ions_list):
        fail("n_ions_list", "entries must be >= 1")
    if not 0 < cfg.delta < 1:
        fail("delta", "must satisfy 0 < delta < nu = 1")
    for key in ("omega_rabi", "eta", "gamma", "n_th"):
        if getattr(cfg, key) < 0:
            fail(key, "must be non-negative")
    for key in ("chi", "xi"):
        v = getattr(cfg, key)
        if v is not None and not v > 0:
            fail(key, "must be positive")
    if cfg.chi is None and cfg.scenario in ("fig1", "odd_n", "fig3") and (cfg.eta == 0 or cfg.omega_rabi == 0):
        fail("chi", "cannot be derived from the trap when eta or omega_rabi is zero; set chi explicitly")
    if not 0 < cfg.dt <= 0.02:
        fail("dt", "must lie in (0, 0.02]")
    if not cfg.t_end > 0:
        fail("t_end", "must be positive")
    for key in ("n_max", "record_stride", "n_trajectories", "gate_multiples", "samples_per_gate"):
        if getattr(cfg, key) < 1:
            fail(key, "must be >= 1")
    if cfg.master_seed < 0:
        fail("master_seed", "must be non-negative")
    if not 0 <= cfg.initial_level <= cfg.n_max:
        fail("initial_level", f"must lie in 0..n_max ({cfg.n_max})")


def format_config(cfg: ScenarioConfig) -> str:
    """Inverse of :func:`parse_config`."""
    lines = []
    for f in fields(ScenarioConfig):
        value = getattr(cfg, f.name)
        if f.name == "chi" and value is None:
            lines.append("chi_from_trap = true")
            continue
        if value is None:
            continue
        if f.name == "n_ions_list":
            if not value:
                continue
            value = ",".join(str(n) for n in value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
