"""Experiment configuration: nested frozen dataclasses loaded from strict JSON."""

from __future__ import annotations

import dataclasses
import json
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path

EXPERIMENTS = ("se_vs_power", "sinr_vs_si", "radar_maps")
PRECODERS = ("proposed", "coherent_eigenvector", "optimal_svd")
COMBINERS = ("bcd", "nsp", "steering")
PRESET_DIR = Path(__file__).parent / "presets"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SystemConfig:
    n_bs: int = 32
    n_ms: int = 16
    n_rf: int = 4
    n_streams: int = 4
    M: int = 792
    N: int = 14
    subcarrier_spacing_hz: float = 120e3
    symbol_duration_s: float = 8.92e-6
    carrier_hz: float = 28e9
    bandwidth_hz: float = 100e6
    noise_dbm: float = -93.8


@dataclass(frozen=True)
class TargetEntry:
    range_m: float
    angle_deg: float
    velocity_mps: float = 0.0
    rcs_m2: float = 10.0


@dataclass(frozen=True)
class ScenarioSection:
    ms_distance_m: float = 50.0
    n_paths: int = 5
    los_angle_range_deg: tuple[float, float] = (-60.0, 60.0)
    nlos_angle_range_deg: tuple[float, float] = (-90.0, 90.0)
    nlos_gain_offset_db: tuple[float, float] = (5.0, 15.0)
    nlos_excess_delay_max_s: float = 100e-9
    array_separation_wl: float = 6.0
    ms_los_angle_deg: float | None = None
    targets: tuple[TargetEntry, ...] = (TargetEntry(40.0, 45.0),)


@dataclass(frozen=True)
class DesignConfig:
    tau_t: float = 0.3              # fraction of N_BS
    tau_r: float = 0.7              # fraction of N_BS, always an amplitude
    gain_semantics: str = "power"   # how tau_t maps to an amplitude
    eps1: float = 0.1
    eps2: float = 0.3
    ridge: float | None = None
    block_fraction: float = 0.25
    bcd_iters: int = 200
    bcd_inner_rtol: float = 1e-6
    altmin_iters: int = 200
    altmin_escapes: int = 2
    alternations: int = 1
    nsp_energy_threshold: float = 1.0


@dataclass(frozen=True)
class SweepConfig:
    power_dbm: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    se_tau_t: tuple[float, ...] = (0.3, 0.35)
    si_to_noise_db: tuple[float, ...] = (0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0)
    sinr_tx_power_dbm: float = 20.0
    sinr_tau_t: float = 0.35


def _radar_targets():
    return (
        TargetEntry(30.0, -45.0, 8.0),
        TargetEntry(45.0, -15.0, -12.0),
        TargetEntry(35.0, 20.0, 5.0),
        TargetEntry(55.0, 50.0, -6.0),
    )


@dataclass(frozen=True)
class RadarConfig:
    Mbar_factor: int = 10
    Nbar_factor: int = 200
    tx_power_dbm: float = 20.0
    si_to_noise_db: float = 60.0
    tau_t: float = 0.35
    method: str = "proposed"
    combiner: str = "bcd"
    ms_los_angle_deg: float = 10.0
    targets: tuple[TargetEntry, ...] = field(default_factory=_radar_targets)
    angle_grid_deg: tuple[float, float, float] = (-70.0, 70.0, 5.0)   # start, stop, step
    max_range_m: float = 100.0
    max_velocity_mps: float = 30.0
    conjugate_reference: bool = False
    noise: bool = True
    trials: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: tuple[str, ...] = ("se_vs_power",)
    system: SystemConfig = SystemConfig()
    scenario: ScenarioSection = ScenarioSection()
    design: DesignConfig = DesignConfig()
    sweep: SweepConfig = SweepConfig()
    radar: RadarConfig = RadarConfig()
    trials: int = 100
    base_seed: int = 0
    methods: tuple[str, ...] = PRECODERS
    combiners: tuple[str, ...] = COMBINERS

    def validate(self):
        bad = [e for e in self.experiment if e not in EXPERIMENTS]
        if not self.experiment or bad:
            raise ConfigError(f"unknown experiment(s) {bad}; valid: {', '.join(EXPERIMENTS)}")
        bad = [m for m in self.methods if m not in PRECODERS]
        if not self.methods or bad:
            raise ConfigError(f"unknown method(s) {bad}; valid: {', '.join(PRECODERS)}")
        bad = [c for c in self.combiners if c not in COMBINERS]
        if bad:
            raise ConfigError(f"unknown combiner(s) {bad}; valid: {', '.join(COMBINERS)}")
        s, d, r = self.system, self.design, self.radar
        if r.method not in PRECODERS or r.combiner not in COMBINERS:
            raise ConfigError(f"radar method/combiner must be one of {PRECODERS} / {COMBINERS}")
        problems = []
        if not 1 <= s.n_streams <= s.n_rf <= min(s.n_bs, s.n_ms):
            problems.append("need 1 <= n_streams <= n_rf <= min(n_bs, n_ms)")
        if s.M < 1 or s.N < 1:
            problems.append("M and N must be >= 1")
        if min(s.subcarrier_spacing_hz, s.symbol_duration_s, s.carrier_hz, s.bandwidth_hz) <= 0:
            problems.append("system frequencies and durations must be positive")
        if d.gain_semantics not in ("power", "amplitude"):
            problems.append("gain_semantics must be 'power' or 'amplitude'")
        taus = (d.tau_t, r.tau_t, self.sweep.sinr_tau_t, *self.sweep.se_tau_t)
        if any(not 0 <= t <= 1 for t in taus) or not 0 <= d.tau_r <= 1:
            problems.append("gain thresholds are fractions of N_BS in [0, 1]")
        if d.eps1 <= 0 or d.eps2 <= 0:
            problems.append("eps1 and eps2 must be positive")
        if not 0 < d.block_fraction <= 1:
            problems.append("block_fraction must lie in (0, 1]")
        if d.ridge is not None and d.ridge < 0:
            problems.append("ridge must be >= 0")
        if min(d.bcd_iters, d.altmin_iters, d.alternations) < 1 or d.altmin_escapes < 0:
            problems.append("iteration counts must be >= 1 (altmin_escapes >= 0)")
        if not 0 < d.nsp_energy_threshold <= 1:
            problems.append("nsp_energy_threshold must lie in (0, 1]")
        if self.trials < 1 or r.trials < 1:
            problems.append("trials must be >= 1")
        if r.Mbar_factor < 1 or r.Nbar_factor < 1:
            problems.append("Mbar_factor and Nbar_factor must be >= 1")
        start, stop, step = r.angle_grid_deg
        if not r.targets:
            problems.append("radar needs at least one target")
        if step <= 0 or stop < start:
            problems.append("angle_grid_deg must be (start, stop, step) with step > 0")
        if not self.sweep.power_dbm or not self.sweep.si_to_noise_db or not self.sweep.se_tau_t:
            problems.append("sweep axes must be non-empty")
        if problems:
            raise ConfigError("; ".join(problems))
        return self


# ---- strict loading ----------------------------------------------------

def _convert(tp, value, where):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin in (typing.Union, types.UnionType):
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _convert(inner[0], value, where)
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, where)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{where}: expected a list, got {type(value).__name__}")
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_convert(args[0], v, f"{where}[{i}]") for i, v in enumerate(value))
        if len(value) != len(args):
            raise ConfigError(f"{where}: expected {len(args)} items, got {len(value)}")
        return tuple(_convert(a, v, f"{where}[{i}]") for i, (a, v) in enumerate(zip(args, value)))
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string")
        return value
    raise ConfigError(f"{where}: unsupported field type {tp}")


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {unknown}; valid: {sorted(names)}")
    kwargs = {k: _convert(hints[k], v, f"{where}.{k}") for k, v in data.items()}
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def config_from_dict(data) -> ExperimentConfig:
    data = dict(data)
    exp = data.get("experiment")
    if isinstance(exp, str):
        data["experiment"] = [exp]
    return _build(ExperimentConfig, data, "config").validate()


def resolve_config_path(path) -> Path:
    """An existing file wins; otherwise a bare preset name such as ``desk.json``."""
    p = Path(path)
    if p.exists():
        return p
    name = p.name if p.suffix else p.name + ".json"
    preset = PRESET_DIR / name
    if preset.exists():
        return preset
    raise ConfigError(f"config {str(path)!r} not found (presets: {', '.join(list_presets())})")


def list_presets():
    return sorted(p.name for p in PRESET_DIR.glob("*.json"))


def load_config(path) -> ExperimentConfig:
    p = resolve_config_path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise ConfigError(f"{p}: {exc}") from None
    return config_from_dict(data)


def config_to_dict(cfg) -> dict:
    def plain(x):
        if isinstance(x, tuple):
            return [plain(v) for v in x]
        if isinstance(x, dict):
            return {k: plain(v) for k, v in x.items()}
        return x
    return plain(dataclasses.asdict(cfg))
