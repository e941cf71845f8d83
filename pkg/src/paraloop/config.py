"""TOML experiment files: geometry, receiver configurations, scenarios.

Quantities carry their unit in the key name (``C0_pF``, ``f_p_MHz``,
``L_m_nH``, ``R_c_ohm``); omitted receiver fields keep their table defaults.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .antenna import LoopGeometry
from .circuit import MatchingNetwork, ReceiverConfig, ReceiverKind, table_config
from .errors import ConfigError

SCENARIO_KINDS = ("power_sweep", "step_response", "constellation", "evm_curve", "beat_demo")
STOCHASTIC_KINDS = ("constellation", "evm_curve")

_ANTENNA_KEYS = {"outer_side_mm": ("outer_side", 1e-3), "trace_width_mm": ("trace_width", 1e-3),
                 "conductivity_S_per_m": ("conductivity", 1.0), "f_center_MHz": ("f_center", 1e6)}
_CAP_KEYS = {"C0_pF": ("C0", 1e-12), "gamma": ("gamma", 1.0), "f_p_MHz": ("f_p", 1e6),
             "R_c_ohm": ("R_c", 1.0), "pump_phase_rad": ("pump_phase", 1.0)}
_MN_KEYS = {"L_m_nH": ("L_m", 1e-9), "C_m_pF": ("C_m", 1e-12), "inductor_Q": ("inductor_Q", 1.0)}


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: str
    configs: tuple
    params: dict = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ConfigError(f"unknown scenario kind {self.kind!r}")
        if not self.configs:
            raise ConfigError(f"scenario {self.name!r} lists no configurations")

    def get(self, key, default=None):
        return self.params.get(key, default)


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: LoopGeometry
    receivers: dict
    scenarios: dict
    source: str = ""

    def scenario(self, name: str | None = None) -> Scenario:
        if name is None:
            if len(self.scenarios) != 1:
                raise ConfigError(f"choose a scenario: {', '.join(self.scenarios)}")
            return next(iter(self.scenarios.values()))
        try:
            return self.scenarios[name]
        except KeyError:
            raise ConfigError(f"no scenario named {name!r}") from None


def _pick(section: dict, keys: dict, where: str) -> dict:
    out = {}
    for key, value in section.items():
        if key in keys:
            attr, scale = keys[key]
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"{where}.{key} must be a number")
            out[attr] = float(value) * scale
    return out


def _check_unknown(section: dict, allowed, where: str):
    extra = set(section) - set(allowed)
    if extra:
        raise ConfigError(f"unknown keys in [{where}]: {', '.join(sorted(extra))}")


def parse_geometry(section: dict) -> LoopGeometry:
    _check_unknown(section, _ANTENNA_KEYS, "antenna")
    return LoopGeometry(**_pick(section, _ANTENNA_KEYS, "antenna"))


def parse_receiver(name: str, section: dict, geometry: LoopGeometry) -> ReceiverConfig:
    kind_name = section.get("kind", name)
    if kind_name not in {k.value for k in ReceiverKind}:
        raise ConfigError(f"[configs.{name}] needs kind = LTI, DTV or NDTV")
    kind = ReceiverKind(kind_name)
    allowed = {"kind", "matching_network", "R_load_ohm", *_CAP_KEYS, *_MN_KEYS}
    _check_unknown(section, allowed, f"configs.{name}")
    R_load = float(section.get("R_load_ohm", 50.0))
    base = table_config(kind, f_center=geometry.f_center, R_load=R_load)
    cap = replace(base.cap, **_pick(section, _CAP_KEYS, f"configs.{name}"))
    mn_over = _pick(section, _MN_KEYS, f"configs.{name}")
    if section.get("matching_network", base.mn.present) is False:
        mn = MatchingNetwork.absent()
    elif base.mn.present:
        mn = replace(base.mn, **mn_over)
    elif mn_over:
        mn = MatchingNetwork(f_ref=geometry.f_center, **mn_over)
    else:
        mn = base.mn
    return ReceiverConfig(kind=kind, cap=cap, mn=mn, R_load=R_load, f_center=geometry.f_center)


def parse_scenario(name: str, section: dict, receivers: dict) -> Scenario:
    section = dict(section)
    kind = section.pop("kind", name)
    configs = section.pop("configs", list(receivers))
    if isinstance(configs, str):
        configs = [configs]
    missing = [c for c in configs if c not in receivers]
    if missing:
        raise ConfigError(f"scenario {name!r} references unknown configs {missing}")
    seed = section.pop("seed", None)
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        raise ConfigError(f"scenario {name!r}: seed must be a non-negative integer")
    return Scenario(name=name, kind=kind, configs=tuple(configs), params=section, seed=seed)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data, source=str(path))


def parse_config(data: dict, source: str = "") -> ExperimentConfig:
    _check_unknown(data, {"antenna", "configs", "scenario", "scenarios"}, "top level")
    geometry = parse_geometry(data.get("antenna", {}))
    sections = data.get("configs") or {k.value: {} for k in ReceiverKind}
    try:
        receivers = {name: parse_receiver(name, sec, geometry) for name, sec in sections.items()}
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    scen = {}
    if "scenario" in data:
        sec = data["scenario"]
        name = sec.get("name", sec.get("kind", "scenario"))
        scen[name] = parse_scenario(name, {k: v for k, v in sec.items() if k != "name"}, receivers)
    for name, sec in data.get("scenarios", {}).items():
        scen[name] = parse_scenario(name, sec, receivers)
    if not scen:
        raise ConfigError("config defines no scenario")
    return ExperimentConfig(geometry, receivers, scen, source)
