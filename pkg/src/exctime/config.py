"""Experiment configuration: strict JSON schema, loading, validation.

Configs are plain JSON (see docs/config_schema.md for the worked example).
Validation is eager and strict: wrong types and unknown keys are rejected
before any computation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path as FsPath

from .star_chain import RaySpec, StarChainModel
from .subordinators import SubordinatorSpec
from .time_change import ClassMap


class ConfigError(ValueError):
    """Raised for malformed experiment configurations."""


@dataclass
class ExperimentConfig:
    experiment: str
    master_seed: int
    model: StarChainModel
    class_map: ClassMap
    replications: int = 2000
    lambda_grid: tuple[float, ...] = (100.0, 1000.0, 10_000.0)
    t_grid: tuple[float, ...] = (1.0,)
    q_grid: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0, 4.0)
    n_excursions: int = 100_000
    route_grid: int = 1000
    windows: dict = field(
        default_factory=lambda: {"count": 200, "length": 1.0, "threshold": 1.0}
    )


_TOP_KEYS = {
    "experiment",
    "master_seed",
    "model",
    "class_map",
    "replications",
    "lambda_grid",
    "t_grid",
    "q_grid",
    "n_excursions",
    "route_grid",
    "windows",
}
_EXPERIMENTS = {"simulate", "verify-structure", "limits"}


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def _check_keys(obj: dict, allowed: set[str], where: str):
    _require(isinstance(obj, dict), f"{where} must be an object")
    unknown = set(obj) - allowed
    _require(not unknown, f"unknown keys in {where}: {sorted(unknown)}")


def _number(x, where: str) -> float:
    _require(isinstance(x, (int, float)) and not isinstance(x, bool), f"{where} must be a number")
    return float(x)


def _number_list(x, where: str) -> tuple[float, ...]:
    _require(isinstance(x, list) and len(x) > 0, f"{where} must be a nonempty list")
    return tuple(_number(v, where) for v in x)


def parse_model(obj: dict) -> StarChainModel:
    _check_keys(obj, {"rays"}, "model")
    _require(isinstance(obj.get("rays"), list) and obj["rays"], "model.rays must be a nonempty list")
    rays = []
    for k, ray in enumerate(obj["rays"]):
        _check_keys(ray, {"entry_rates", "exit_rates", "internal_rates"}, f"model.rays[{k}]")
        entry = _number_list(ray.get("entry_rates"), f"model.rays[{k}].entry_rates")
        exit_ = _number_list(ray.get("exit_rates"), f"model.rays[{k}].exit_rates")
        internal = ray.get("internal_rates")
        _require(isinstance(internal, list), f"model.rays[{k}].internal_rates must be a matrix")
        matrix = [_number_list(row, f"model.rays[{k}].internal_rates row") for row in internal]
        rays.append(RaySpec(internal_rates=matrix, exit_rates=exit_, entry_rates=entry))
    return StarChainModel(tuple(rays))


def parse_class_map(obj: dict, n_rays: int) -> ClassMap:
    _check_keys(obj, {"assign", "subordinators"}, "class_map")
    raw_assign = obj.get("assign")
    _require(isinstance(raw_assign, dict), "class_map.assign must be an object")
    assign: dict[int, str | None] = {}
    for key, label in raw_assign.items():
        try:
            idx = int(key)
        except (TypeError, ValueError):
            raise ConfigError(f"class_map.assign key {key!r} is not a class index") from None
        _require(label is None or isinstance(label, str), f"class_map.assign[{key}] must be a string or null")
        assign[idx] = label
    raw_specs = obj.get("subordinators")
    _require(isinstance(raw_specs, dict) and raw_specs, "class_map.subordinators must be a nonempty object")
    specs = {}
    for name, sub in raw_specs.items():
        _check_keys(sub, {"drift", "stable_scale", "stable_index"}, f"subordinators[{name}]")
        specs[name] = SubordinatorSpec(
            drift=_number(sub.get("drift", 0.0), "drift"),
            stable_scale=_number(sub.get("stable_scale", 0.0), "stable_scale"),
            stable_index=_number(sub.get("stable_index", 0.5), "stable_index"),
        )
    cmap = ClassMap(assign=assign, specs=specs)
    cmap.validate_for(n_rays)
    return cmap


def parse_config(obj: dict) -> ExperimentConfig:
    _check_keys(obj, _TOP_KEYS, "config")
    _require(obj.get("experiment") in _EXPERIMENTS, f"experiment must be one of {sorted(_EXPERIMENTS)}")
    _require(isinstance(obj.get("master_seed"), int), "master_seed must be an integer")
    _require("model" in obj and "class_map" in obj, "config needs model and class_map")
    model = parse_model(obj["model"])
    cmap = parse_class_map(obj["class_map"], model.n_rays)
    cfg = ExperimentConfig(
        experiment=obj["experiment"],
        master_seed=obj["master_seed"],
        model=model,
        class_map=cmap,
    )
    if "replications" in obj:
        _require(isinstance(obj["replications"], int) and obj["replications"] > 0, "replications must be a positive integer")
        cfg.replications = obj["replications"]
    if "lambda_grid" in obj:
        cfg.lambda_grid = _number_list(obj["lambda_grid"], "lambda_grid")
    if "t_grid" in obj:
        cfg.t_grid = _number_list(obj["t_grid"], "t_grid")
    if "q_grid" in obj:
        cfg.q_grid = _number_list(obj["q_grid"], "q_grid")
    if "n_excursions" in obj:
        _require(isinstance(obj["n_excursions"], int) and obj["n_excursions"] > 0, "n_excursions must be a positive integer")
        cfg.n_excursions = obj["n_excursions"]
    if "route_grid" in obj:
        _require(isinstance(obj["route_grid"], int) and obj["route_grid"] >= 2, "route_grid must be an integer >= 2")
        cfg.route_grid = obj["route_grid"]
    if "windows" in obj:
        _check_keys(obj["windows"], {"count", "length", "threshold"}, "windows")
        w = dict(cfg.windows)
        for key in obj["windows"]:
            w[key] = obj["windows"][key]
        _require(isinstance(w["count"], int) and w["count"] >= 50, "windows.count must be an integer >= 50")
        w["length"] = _number(w["length"], "windows.length")
        w["threshold"] = _number(w["threshold"], "windows.threshold")
        cfg.windows = w
    return cfg


def load_config(path: str | FsPath) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigError(f"config is not valid JSON: {err}") from err
    return parse_config(obj)
