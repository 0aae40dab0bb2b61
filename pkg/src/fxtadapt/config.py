from __future__ import annotations

import copy
import json
import os
from typing import Any, Dict, List

from dotenv import load_dotenv
from pydantic import ValidationError

from .errors import ConfigError
from .schemas import ExperimentConfig

OUTPUT_ROOT_ENV = "FXTADAPT_OUTPUT_ROOT"

DEFAULT_CONFIG: Dict[str, Any] = {
    "experiment": {
        "scenario": "gap",
        "controller": "proposed",
        "theta_bar": None,
        "dt": 1e-3,
        "t_final": None,
        "seed": 0,
        "out_dir": None,
        "decimate": 1,
        "on_infeasible": "hold",
        "workers": 1,
    },
    "estimator": {
        "law": "fxts",
        "k_e": 0.001,
        "ell_e": 100.0,
        "c1e": 50.0,
        "c2e": 50.0,
        "mu_e": 5.0,
        "sigma": 1e-4,
        "gamma": "auto",
        "gamma_margin": 1.1,
        "theta_hat0": "center",
        "substep_fraction": 0.1,
        "max_substeps": 10000,
    },
    "qp": {
        "delta_min": 1.0,
        "delta_max": 1e6,
        "max_iter_factor": 100,
    },
    "gap": {},
    "overtake": {},
}


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_merge(base[key], value)
        else:
            base[key] = value
    return base


def load_config(path: str | None) -> Dict[str, Any]:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if not path:
        return cfg
    if not os.path.exists(path):
        raise ConfigError(f"{path}: config file not found")
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        override = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(override, dict):
        raise ConfigError(f"{path}: top level must be an object")
    _deep_merge(cfg, override)
    return cfg


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(cfg: Dict[str, Any], overrides: List[str] | None) -> Dict[str, Any]:
    """Apply `section.key=value` overrides in place."""
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override '{item}' must look like section.key=value")
        dotted, raw = item.split("=", 1)
        keys = [k for k in dotted.strip().split(".") if k]
        if len(keys) < 2 or keys[0] not in DEFAULT_CONFIG:
            raise ConfigError(f"override '{dotted}': unknown section")
        node = cfg
        for key in keys[:-1]:
            child = node.get(key)
            if not isinstance(child, dict):
                child = {}
                node[key] = child
            node = child
        node[keys[-1]] = _parse_value(raw.strip())
    return cfg


def resolve_config(cfg: Dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(cfg)
    except ValidationError as exc:
        problems = []
        for err in exc.errors():
            field = ".".join(str(part) for part in err["loc"])
            problems.append(f"{field}: {err['msg']}")
        raise ConfigError("; ".join(problems)) from exc


def load_experiment(path: str | None, overrides: List[str] | None = None) -> ExperimentConfig:
    cfg = load_config(path)
    apply_overrides(cfg, overrides)
    return resolve_config(cfg)


def output_root() -> str:
    load_dotenv()
    return os.getenv(OUTPUT_ROOT_ENV, "artifacts")
