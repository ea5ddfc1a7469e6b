"""Declarative run configuration for the command-line pipeline.

The config file is JSON with four sections: paths, model, simulation and
validation.  Unknown keys anywhere are rejected so typos cannot silently
fall back to defaults.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import pandas as pd

from .errors import ConfigError
from .pipeline import ModelOptions, month_range

_SECTIONS = {"paths", "model", "simulation", "validation"}
_PATH_KEYS = {"vre", "inflows", "meta", "out_dir"}
_MODEL_KEYS = {"max_parents", "restarts", "kde_grid", "pca_variance", "ar_order"}
_SIM_KEYS = {"n_scenarios", "horizon", "seed"}
_VAL_KEYS = {"alpha"}


@dataclass(frozen=True)
class RunConfig:
    vre_path: str
    meta_path: str
    out_dir: str
    inflows_path: str | None = None
    max_parents: int = 6
    restarts: int = 5
    kde_grid: int = 2048
    pca_variance: float = 0.95
    ar_order: int = 1
    n_scenarios: int = 100
    horizon_start: str = "2030-01"
    horizon_months: int = 12
    seed: int = 0
    alpha: float = 0.10

    def horizon_index(self) -> pd.DatetimeIndex:
        return month_range(self.horizon_start, self.horizon_months)

    def model_options(self) -> ModelOptions:
        return ModelOptions(
            max_parents=self.max_parents, restarts=self.restarts,
            kde_grid=self.kde_grid, pca_variance=self.pca_variance,
            ar_order=self.ar_order, seed=self.seed)


def _require_keys(section: str, given: dict, allowed: set[str]) -> None:
    unknown = set(given) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {section!r}: {sorted(unknown)}")


def _check(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def parse_config(doc: dict, base_dir: Path | None = None) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    _require_keys("config", doc, _SECTIONS)

    paths = doc.get("paths")
    if not isinstance(paths, dict):
        raise ConfigError("config needs a 'paths' section")
    _require_keys("paths", paths, _PATH_KEYS)
    for key in ("vre", "meta", "out_dir"):
        if key not in paths:
            raise ConfigError(f"paths.{key} is required")

    def resolve(p):
        if p is None:
            return None
        p = Path(p)
        return str(p if p.is_absolute() or base_dir is None else base_dir / p)

    model = dict(doc.get("model", {}))
    _require_keys("model", model, _MODEL_KEYS)
    sim = dict(doc.get("simulation", {}))
    _require_keys("simulation", sim, _SIM_KEYS)
    val = dict(doc.get("validation", {}))
    _require_keys("validation", val, _VAL_KEYS)

    horizon = sim.get("horizon", {"start": "2030-01", "months": 12})
    if not (isinstance(horizon, dict) and set(horizon) == {"start", "months"}):
        raise ConfigError("simulation.horizon must be {start, months}")

    cfg = RunConfig(
        vre_path=resolve(paths["vre"]),
        meta_path=resolve(paths["meta"]),
        out_dir=resolve(paths["out_dir"]),
        inflows_path=resolve(paths.get("inflows")),
        max_parents=int(model.get("max_parents", 6)),
        restarts=int(model.get("restarts", 5)),
        kde_grid=int(model.get("kde_grid", 2048)),
        pca_variance=float(model.get("pca_variance", 0.95)),
        ar_order=int(model.get("ar_order", 1)),
        n_scenarios=int(sim.get("n_scenarios", 100)),
        horizon_start=str(horizon["start"]),
        horizon_months=int(horizon["months"]),
        seed=int(sim.get("seed", 0)),
        alpha=float(val.get("alpha", 0.10)),
    )

    _check(cfg.max_parents >= 0, "model.max_parents must be >= 0")
    _check(cfg.restarts >= 1, "model.restarts must be >= 1")
    _check(cfg.kde_grid >= 1024, "model.kde_grid must be >= 1024")
    _check(0.0 < cfg.pca_variance <= 1.0, "model.pca_variance must be in (0, 1]")
    _check(cfg.ar_order >= 0, "model.ar_order must be >= 0")
    _check(cfg.n_scenarios >= 1, "simulation.n_scenarios must be >= 1")
    _check(cfg.horizon_months >= 1, "simulation.horizon.months must be >= 1")
    _check(cfg.seed >= 0, "simulation.seed must be >= 0")
    _check(0.0 < cfg.alpha <= 1.0, "validation.alpha must be in (0, 1]")
    try:
        cfg.horizon_index()
    except Exception as exc:
        raise ConfigError(f"bad horizon start {cfg.horizon_start!r}: {exc}")
    return cfg


def load_config(path) -> tuple[RunConfig, str]:
    """Parse a config file; returns (config, sha256-of-file)."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}")
    return parse_config(doc, base_dir=path.parent), hashlib.sha256(raw).hexdigest()
