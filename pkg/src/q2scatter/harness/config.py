"""JSON experiment configuration with dot-path overrides."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from ..dispersion import PVConfig
from ..errors import ConfigError

CAMPAIGNS = ("verify", "q2", "oracle", "epsilon-scan")

DEFAULTS: dict[str, Any] = {
    "campaign": "verify",
    "dimension": 3,
    "seed": 0,
    "threads": 1,
    "output_dir": "runs/latest",
    "C0": 1.0,
    "profile": {"kind": "gaussian", "params": {"a": 0.01}, "scale": 1.0},
    "ray": {"direction": None, "second_direction": None,
            "radius_min": 2.0, "radius_max": 32.0, "per_octave": 1},
    "pv": {"delta": 0.5, "tau": 2.0, "r_max": 8.0, "n_r_inner": 16, "n_r_outer": 16,
           "sphere_order": 16, "sphere_levels": 24, "eps_ladder": [0.08, 0.04, 0.02, 0.01],
           "inner_extra_levels": 4, "tail_tolerance": 0.01},
    "verify": {"samples": 100, "kernel_samples": 1000, "holder_samples": 10000,
               "fubini_refinement": True, "leckband_density_scale": 1.0},
    "oracle": {"count": 8, "eta_min": 2.0, "eta_max": 32.0,
               "median_tolerance": 0.02, "max_tolerance": 0.05},
    "epsilon_scan": {"betas": [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0],
                     "radius_min": 16.0, "radius_max": 512.0, "per_octave": 2,
                     "tolerance": 0.15, "min_r2": 0.9, "form": "plemelj"},
}

#: keys that do not influence computed values and stay out of the input hash
VOLATILE_KEYS = ("threads", "output_dir")


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown configuration key {where!r}")
        if isinstance(base[key], dict) and key != "params":
            if not isinstance(value, dict):
                raise ConfigError(f"{where!r} must be an object")
            out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = copy.deepcopy(value)
    return out


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(cfg: dict, assignment: str) -> dict:
    """Apply one ``dot.path=value`` override; values are parsed as JSON when possible."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form key=value")
    path, raw = assignment.split("=", 1)
    keys = path.strip().split(".")
    out = copy.deepcopy(cfg)
    node = out
    for key in keys[:-1]:
        if not isinstance(node, dict) or key not in node:
            raise ConfigError(f"unknown configuration key {path!r}")
        node = node[key]
    leaf = keys[-1]
    free_form = len(keys) >= 2 and keys[-2] == "params"
    if not isinstance(node, dict) or (leaf not in node and not free_form):
        raise ConfigError(f"unknown configuration key {path!r}")
    node[leaf] = _parse_value(raw)
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict = field(repr=False)

    @property
    def campaign(self) -> str:
        return self.raw["campaign"]

    @property
    def dimension(self) -> int:
        return int(self.raw["dimension"])

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def threads(self) -> int:
        return int(self.raw["threads"])

    @property
    def output_dir(self) -> Path:
        return Path(self.raw["output_dir"])

    def directions(self):
        """Unit ray direction and the second direction used for rotation checks."""
        n = self.dimension
        ray = self.raw["ray"]
        first = np.eye(n)[-1] if ray["direction"] is None else np.asarray(ray["direction"], float)
        default_second = [0.6, 0.0, 0.8] if n == 3 else [0.6, 0.8]
        second = np.asarray(ray["second_direction"] or default_second, float)
        return first / np.linalg.norm(first), second / np.linalg.norm(second)

    @property
    def pv(self) -> PVConfig:
        return pv_config_from_dict(self.raw["pv"])

    def section(self, name: str) -> dict:
        return self.raw[name]

    def input_hash(self) -> str:
        """SHA-256 of the canonical JSON of every value-affecting key."""
        stable = {k: v for k, v in self.raw.items() if k not in VOLATILE_KEYS}
        blob = json.dumps(stable, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def to_json(self) -> str:
        return json.dumps(self.raw, sort_keys=True, indent=2) + "\n"


def pv_config_from_dict(d: dict) -> PVConfig:
    known = {f.name for f in fields(PVConfig)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown pv keys: {sorted(unknown)}")
    try:
        return PVConfig(**{k: (tuple(v) if k == "eps_ladder" else v) for k, v in d.items()})
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _validate(raw: dict) -> None:
    if raw["campaign"] not in CAMPAIGNS:
        raise ConfigError(f"campaign must be one of {CAMPAIGNS}, got {raw['campaign']!r}")
    if raw["dimension"] not in (2, 3):
        raise ConfigError(f"dimension must be 2 or 3, got {raw['dimension']!r}")
    if not isinstance(raw["seed"], int) or isinstance(raw["seed"], bool):
        raise ConfigError("seed must be an integer")
    if not isinstance(raw["threads"], int) or raw["threads"] < 1:
        raise ConfigError("threads must be a positive integer")
    ray = raw["ray"]
    for key in ("direction", "second_direction"):
        if ray[key] is not None and len(ray[key]) != raw["dimension"]:
            raise ConfigError(f"ray.{key} must have length {raw['dimension']}")
    for key in ("direction", "second_direction"):
        if ray[key] is not None and not any(ray[key]):
            raise ConfigError(f"ray.{key} must be nonzero")
    if not 0 < ray["radius_min"] < ray["radius_max"]:
        raise ConfigError("ray radius range must be increasing and positive")
    scan = raw["epsilon_scan"]
    if not 0 < scan["radius_min"] < scan["radius_max"]:
        raise ConfigError("epsilon_scan radius range must be increasing and positive")
    if scan["form"] not in ("plemelj", "paper"):
        raise ConfigError("epsilon_scan.form must be 'plemelj' or 'paper'")
    orc = raw["oracle"]
    if not 0 < orc["eta_min"] < orc["eta_max"]:
        raise ConfigError("oracle eta range must be increasing and positive")
    if raw["C0"] <= 0:
        raise ConfigError("C0 must be positive")
    pv_config_from_dict(raw["pv"])


def build_config(overrides: dict | None = None, assignments=()) -> ExperimentConfig:
    """Defaults, then a config document, then ``key=value`` assignments."""
    raw = _merge(DEFAULTS, overrides or {})
    for a in assignments:
        raw = apply_override(raw, a)
    _validate(raw)
    return ExperimentConfig(raw)


def load_config(path: str | Path | None, assignments=(), **top_level) -> ExperimentConfig:
    """Read a JSON config file (optional) and apply overrides.

    ``top_level`` entries (e.g. ``campaign``, ``seed``) are applied before
    the dot-path assignments.
    """
    doc: dict = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
    doc.update({k: v for k, v in top_level.items() if v is not None})
    return build_config(doc, assignments)


def pv_to_dict(cfg: PVConfig) -> dict:
    d = asdict(cfg)
    d["eps_ladder"] = list(d["eps_ladder"])
    return d
