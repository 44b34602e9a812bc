"""Cartesian sweep execution with derived per-trial seeds and emission.

Every trial's RNG seed is a hash of (master seed, axis assignment, trial
index), so records are identical whether trials run serially or across a
process pool; the writer merges in deterministic cell order either way.
"""

from __future__ import annotations

import hashlib
import itertools
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..errors import ConfigError, IoFailure
from .config import ScenarioConfig
from .plots import error_bar_svg
from .report import RunReport

PRIMARY_ERROR = {
    "touch": "d_err_rel",
    "clear": "opening_err_rel",
    "jump": "d_err_rel",
}


def derive_seed(master: int, assignments: dict, trial: int) -> int:
    text = f"{master}|" + "|".join(
        f"{k}={v!r}" for k, v in sorted(assignments.items())) + f"|{trial}"
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _run_one(task) -> dict:
    cfg, assignments, trial, n_trials = task
    from .scenarios import TRIALS
    trial_fn = TRIALS[cfg.kind]
    seed = derive_seed(cfg.seed, assignments, trial)
    rng = np.random.default_rng(seed)
    record = {f"axis.{k}": v for k, v in assignments.items()}
    record["trial"] = trial
    record["trial_seed"] = seed
    try:
        record.update(trial_fn(cfg, rng, trial_index=trial, n_trials=n_trials))
    except Exception as exc:  # per-trial failures recorded, never fatal
        record.setdefault("skipped", False)
        record["failure"] = f"{type(exc).__name__}: {exc}"
    return record


def sweep(cfg: ScenarioConfig) -> RunReport:
    """Run the config's full grid x trials; deterministic record order."""
    cfg.validate()
    axis_names = list(cfg.sweep_axes.keys())
    axis_values = [cfg.sweep_axes[n] for n in axis_names]
    tasks = []
    for combo in itertools.product(*axis_values) if axis_names else [()]:
        assignments = dict(zip(axis_names, combo))
        cell_cfg = cfg.with_axis_values(assignments) if assignments else cfg
        for trial in range(cfg.trials):
            tasks.append((cell_cfg, assignments, trial, cfg.trials))

    if cfg.parallel > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.parallel) as pool:
            records = list(pool.map(_run_one, tasks, chunksize=1))
    else:
        records = [_run_one(t) for t in tasks]
    return RunReport(config=cfg.to_dict(), axis_names=axis_names,
                     records=records)


def emit(report: RunReport, out_dir: str) -> dict:
    """Write records.csv, summary.json, and one error-bar SVG per axis."""
    try:
        os.makedirs(out_dir, exist_ok=True)
        paths = {}
        csv_path = os.path.join(out_dir, "records.csv")
        with open(csv_path, "w", newline="") as fh:
            fh.write(report.to_csv())
        paths["records"] = csv_path
        summary_path = os.path.join(out_dir, "summary.json")
        with open(summary_path, "w") as fh:
            fh.write(report.to_summary_json())
        paths["summary"] = summary_path
        kind = report.config.get("kind", "")
        err_field = PRIMARY_ERROR.get(kind, "d_err_rel")
        for axis in report.axis_names:
            svg = _axis_plot(report, axis, err_field)
            name = f"errors_vs_{axis.replace('.', '_')}.svg"
            path = os.path.join(out_dir, name)
            with open(path, "w") as fh:
                fh.write(svg)
            paths[axis] = path
        return paths
    except OSError as exc:
        raise IoFailure(f"cannot write report to {out_dir!r}: {exc}") from exc


def _axis_plot(report: RunReport, axis: str, err_field: str) -> str:
    by_value: dict[float, list[float]] = {}
    for rec in report.records:
        if rec.get("skipped") or rec.get("failure"):
            continue
        if err_field not in rec:
            continue
        by_value.setdefault(float(rec[f"axis.{axis}"]), []).append(
            float(rec[err_field]))
    points = [(v, sum(errs) / len(errs), min(errs), max(errs))
              for v, errs in sorted(by_value.items())]
    kind = report.config.get("kind", "run")
    return error_bar_svg(f"{kind}: {err_field} vs {axis}", axis, err_field,
                         points)


def run_scenario(cfg: ScenarioConfig) -> RunReport:
    if cfg.kind not in ("touch", "clear", "jump"):
        raise ConfigError(f"unknown scenario kind {cfg.kind!r}")
    return sweep(cfg)
