"""Configuration loading: packaged YAML defaults deep-merged with user files."""

from __future__ import annotations

import copy
from importlib import resources
from pathlib import Path

import numpy as np
import yaml


class ConfigError(ValueError):
    """Unreadable or inconsistent configuration."""


def packaged(name: str) -> dict:
    text = resources.files("emla_vdc").joinpath("data", name).read_text()
    return yaml.safe_load(text)


def deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_yaml(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def load_config(path=None, overrides: dict | None = None) -> dict:
    """Packaged defaults, then an optional user file, then explicit overrides.

    A user file may name another packaged file under ``base`` (for example
    ``base: cubic.yaml``) to start from a scenario preset.
    """
    cfg = packaged("default_hdrm.yaml")
    user = load_yaml(path) if path is not None else {}
    base = user.pop("base", None)
    if base is not None:
        try:
            cfg = deep_merge(cfg, packaged(base))
        except FileNotFoundError as exc:
            raise ConfigError(f"unknown packaged base config: {base}") from exc
    cfg = deep_merge(cfg, user)
    return deep_merge(cfg, overrides or {})


def resolve_config(name_or_path=None, overrides: dict | None = None) -> dict:
    """Load a config given a file path or the name of a packaged preset
    (``default``, ``cubic``, ``triangle``, ``hold``)."""
    if name_or_path is None or str(name_or_path) in ("default", "default_hdrm"):
        return load_config(None, overrides)
    path = Path(name_or_path)
    if path.is_file():
        return load_config(path, overrides)
    name = str(name_or_path)
    name = name if name.endswith(".yaml") else name + ".yaml"
    try:
        preset = packaged(name)
    except FileNotFoundError:
        raise ConfigError(f"no config file or packaged preset named {name_or_path!r}") from None
    return deep_merge(deep_merge(packaged("default_hdrm.yaml"), preset), overrides or {})


def default_geometry(cfg: dict | None = None):
    from .linkage import ManipulatorGeometry

    cfg = load_config() if cfg is None else cfg
    return ManipulatorGeometry.from_dict(cfg["geometry"])


def default_inertia(cfg: dict | None = None, with_payload: bool = True):
    from .hdrm import ManipulatorInertia

    cfg = load_config() if cfg is None else cfg
    inertia = ManipulatorInertia.from_dict(cfg["inertia"])
    pl = cfg.get("payload")
    if with_payload and pl and pl.get("mass", 0) > 0:
        inertia = inertia.with_payload(pl["body"], float(pl["mass"]), pl["com"])
    return inertia


def gravity(cfg: dict) -> np.ndarray:
    return np.asarray(cfg["gravity"], dtype=float)
