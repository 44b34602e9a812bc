"""Scenario orchestration: touch, clear, and jump pipelines plus sweeps."""

from .config import ScenarioConfig, default_config, load_config
from .report import RunReport
from .scenarios import run_clear, run_jump, run_touch
from .sweep import emit, sweep

__all__ = [
    "ScenarioConfig",
    "RunReport",
    "default_config",
    "load_config",
    "run_touch",
    "run_clear",
    "run_jump",
    "sweep",
    "emit",
]
