"""Scenario configuration: defaults, TOML loading, validation.

Every experiment is fully specified by a ScenarioConfig plus its seed, so
any run (and any single trial inside it) can be replayed exactly.
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, replace

from ..errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass
class PlantSection:
    b: float = 1.0
    alpha: float = 10.0
    g_b: float = 9.81
    body_half_width_l: float = 0.0955
    body_half_width_r: float = 0.0955
    leaky_tau: float = 10.0
    dt: float = 0.001


@dataclass
class CameraSection:
    res_u: int = 1536
    res_v: int = 864
    vfov_deg: float = 60.0
    fps: float = 30.0


@dataclass
class OscillationSection:
    freq_hz: float = 1.0 / 3.0
    duration_s: float = 9.0        # whole cycles: displacement-free handoff
    amplitude_m: float = 0.25      # positional amplitude when b = 1


@dataclass
class TouchSection:
    distance_m: float = 1.5
    target_width_m: float = 0.15
    window_s: float = 3.0
    approach_speed: float = 0.3    # embodied units per second
    approach_gain: float = 8.0
    timeout_s: float = 120.0


@dataclass
class ClearSection:
    distance_m: float = 1.5
    opening_width_m: float = 0.25


@dataclass
class JumpSection:
    gap_m: float = 3.0
    leg_travel_m: float = 0.8
    osc_freq_hz: float = 1.0
    measure_s: float = 10.0
    fit_start_s: float = 4.0
    basis_n: int = 50
    tau_min_s: float = 0.008
    tau_max_s: float = 0.5
    basis_truncation_s: float = 4.0
    launch_angle_deg: float = 20.0
    launch_duration_s: float = 0.25
    settle_s: float = 2.0
    plan: bool = True              # off = estimation-only (resolution sweeps)


@dataclass
class ScenarioConfig:
    kind: str = "touch"
    seed: int = 12345
    trials: int = 5
    quantize: bool = True
    parallel: int = 1
    strict: bool = False
    out_dir: str = "runs"
    plant: PlantSection = field(default_factory=PlantSection)
    camera: CameraSection = field(default_factory=CameraSection)
    oscillation: OscillationSection = field(default_factory=OscillationSection)
    touch: TouchSection = field(default_factory=TouchSection)
    clear: ClearSection = field(default_factory=ClearSection)
    jump: JumpSection = field(default_factory=JumpSection)
    # axis name -> list of values; names are dotted paths like "plant.b"
    sweep_axes: dict = field(default_factory=dict)

    def validate(self):
        if self.kind not in ("touch", "clear", "jump"):
            raise ConfigError(f"unknown scenario kind {self.kind!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.parallel < 1:
            raise ConfigError("parallel must be >= 1")
        for name, values in self.sweep_axes.items():
            if not isinstance(values, (list, tuple)) or len(values) == 0:
                raise ConfigError(f"sweep axis {name!r} must be a non-empty list")
            _resolve_path(self, name)  # raises on unknown targets
        if self.plant.dt <= 0:
            raise ConfigError("plant.dt must be positive")
        return self

    def with_axis_values(self, assignments: dict) -> "ScenarioConfig":
        """Copy of this config with dotted-path sweep values applied."""
        cfg = replace(
            self,
            plant=replace(self.plant),
            camera=replace(self.camera),
            oscillation=replace(self.oscillation),
            touch=replace(self.touch),
            clear=replace(self.clear),
            jump=replace(self.jump),
        )
        for path, value in assignments.items():
            obj, attr = _resolve_path(cfg, path)
            setattr(obj, attr, type(getattr(obj, attr))(value))
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)


def _resolve_path(cfg: ScenarioConfig, path: str):
    parts = path.split(".")
    obj = cfg
    for part in parts[:-1]:
        if not hasattr(obj, part):
            raise ConfigError(f"unknown config section {part!r} in {path!r}")
        obj = getattr(obj, part)
    if not hasattr(obj, parts[-1]):
        raise ConfigError(f"unknown config field {path!r}")
    return obj, parts[-1]


def default_config(kind: str) -> ScenarioConfig:
    """Per-scenario defaults mirroring the experimental setups."""
    cfg = ScenarioConfig(kind=kind)
    if kind == "touch":
        cfg.sweep_axes = {"plant.b": [0.5, 1.0, 2.0]}
    elif kind == "clear":
        cfg.sweep_axes = {
            "clear.opening_width_m": [0.125, 0.25, 0.375],
            "plant.b": [0.5, 1.0, 2.0],
        }
    elif kind == "jump":
        cfg.camera = CameraSection(res_u=200, res_v=200, vfov_deg=90.0, fps=60.0)
        cfg.plant = PlantSection(b=0.2, alpha=10.0, g_b=9.81)
        cfg.trials = 1
        cfg.sweep_axes = {"jump.gap_m": [1.0, 2.0, 3.0, 4.0]}
    else:
        raise ConfigError(f"unknown scenario kind {kind!r}")
    return cfg


_SECTIONS = {
    "plant": PlantSection,
    "camera": CameraSection,
    "oscillation": OscillationSection,
    "touch": TouchSection,
    "clear": ClearSection,
    "jump": JumpSection,
}


def load_config(path: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Read a TOML file and overlay it on defaults.

    Top-level keys are scalar settings; nested tables map to sections;
    [sweep] holds dotted-path axis lists.
    """
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path!r}: {exc}") from exc

    kind = data.get("kind", base.kind if base else "touch")
    cfg = base if base is not None else default_config(kind)
    cfg.kind = kind
    for key in ("seed", "trials", "quantize", "parallel", "strict", "out_dir"):
        if key in data:
            setattr(cfg, key, type(getattr(cfg, key))(data[key]))
    for section, cls in _SECTIONS.items():
        if section in data:
            table = data[section]
            if not isinstance(table, dict):
                raise ConfigError(f"[{section}] must be a table")
            current = getattr(cfg, section)
            for key, value in table.items():
                if not hasattr(current, key):
                    raise ConfigError(f"unknown key {section}.{key}")
                setattr(current, key, type(getattr(current, key))(value))
    if "sweep" in data:
        if not isinstance(data["sweep"], dict):
            raise ConfigError("[sweep] must be a table of axis lists")
        cfg.sweep_axes = {k: list(v) for k, v in data["sweep"].items()}
    return cfg.validate()
