"""Run configuration: TOML file plus ``--set key=value`` overrides.

Layout::

    seed = 7
    out = "run"

    [levy]            # triplet spec (family + parameters)
    [kernel]          # kernel spec (family + parameters)
    [grid]            # t0, dt, n, warmup
    [check] [simulate] [invert] [verify]   # command parameters

Unknown keys are rejected everywhere. A manifest JSON written by a previous
run is also accepted in place of a TOML file; its ``config`` entry is used.
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import tomli

from .kernels import Kernel, kernel_from_spec
from .levy import LevyTriplet, triplet_from_spec
from .simulate import Grid


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


SCHEMA: dict = {
    "seed": int,
    "out": str,
    "levy": dict,
    "kernel": dict,
    "grid": {"t0": float, "dt": float, "n": int, "warmup": float},
    "check": {"p": float, "with_norm": bool},
    "simulate": {"method": str},
    "invert": {"method": str, "lambda": float, "alpha": float, "horizon": float,
               "path": str, "truth": str, "window": list},
    "verify": {"n_paths": int, "dt": float, "theta": list, "theta_step": float,
               "theta_max": float, "warmup": float,
               "shifts": list, "shift_counts": list, "shift_design": str,
               "target": dict, "mu": dict, "domain": list,
               "alpha": float, "horizon": float, "window": list, "span": float},
}

DEFAULTS: dict = {
    "seed": 0,
    "out": "ctma-run",
    "grid": {"t0": 0.0},
    "check": {"with_norm": False},
    "simulate": {"method": "auto"},
    "invert": {"method": "langevin", "lambda": 1.0, "horizon": 40.0},
    "verify": {"n_paths": 100000, "dt": 0.05, "theta_step": 0.25, "theta_max": 5.0,
               "shift_counts": [1, 2, 4, 8, 16, 32, 64], "shift_design": "graded",
               "target": {"family": "indicator", "a": 0.0, "b": 1.0},
               "domain": [0.0, 40.0], "alpha": -0.5, "horizon": 40.0,
               "window": [0.0, 20.0], "span": 20.0},
}


def _check_keys(data: dict, schema: dict, where: str) -> None:
    for key, value in data.items():
        if key not in schema:
            raise ConfigError(f"unknown key {where}{key!r}; allowed: {sorted(schema)}")
        kind = schema[key]
        if isinstance(kind, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where}{key} must be a table")
            _check_keys(value, kind, f"{where}{key}.")
        elif kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{where}{key} must be a number, got {value!r}")
        elif kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{where}{key} must be an integer, got {value!r}")
        elif not isinstance(value, kind):
            raise ConfigError(f"{where}{key} must be {kind.__name__}, got {value!r}")


# tables replaced wholesale rather than merged key by key
ATOMIC = ("levy", "kernel", "target", "mu")


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k not in ATOMIC:
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_value(text: str):
    """TOML literal if it parses as one, otherwise the raw string."""
    try:
        return tomli.loads(f"v = {text}")["v"]
    except tomli.TOMLDecodeError:
        return text


def apply_override(data: dict, item: str) -> None:
    """Apply one ``dotted.key=value`` override in place."""
    if "=" not in item:
        raise ConfigError(f"--set expects key=value, got {item!r}")
    key, text = item.split("=", 1)
    parts = [p for p in key.strip().split(".") if p]
    if not parts:
        raise ConfigError(f"--set has an empty key: {item!r}")
    node = data
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"--set {key}: {p} is not a table")
    node[parts[-1]] = parse_value(text.strip())


def load_raw(path: str | Path | None) -> dict:
    """Read a TOML config or a manifest JSON into a plain dict."""
    if path is None:
        return {}
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if path.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return data.get("config", data)
    try:
        return tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration for one CLI run."""

    data: dict
    base_dir: Path

    @classmethod
    def build(cls, raw: dict, overrides=(), *, seed: int | None = None, out: str | None = None,
              base_dir: str | Path = ".") -> "RunConfig":
        data = copy.deepcopy(raw)
        for item in overrides:
            apply_override(data, item)
        if seed is not None:
            data["seed"] = seed
        if out is not None:
            data["out"] = out
        _check_keys(data, SCHEMA, "")
        data = _merge(DEFAULTS, data)
        cfg = cls(data, Path(base_dir))
        # parse eagerly so schema errors surface as config errors
        if "levy" in data:
            cfg.triplet()
        if "kernel" in data:
            cfg.kernel()
        if "n" in data["grid"]:
            cfg.grid()
        return cfg

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    @property
    def out(self) -> Path:
        return Path(self.data["out"])

    def section(self, name: str) -> dict:
        return self.data.get(name, {})

    def triplet(self) -> LevyTriplet:
        if "levy" not in self.data:
            raise ConfigError("missing [levy] table")
        try:
            return triplet_from_spec(self.data["levy"])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"[levy]: {exc}") from exc

    def kernel(self, key: str = "kernel", spec: dict | None = None) -> Kernel:
        spec = self.data.get(key) if spec is None else spec
        if spec is None:
            raise ConfigError(f"missing [{key}] table")
        try:
            return kernel_from_spec(spec, self.base_dir)
        except (ValueError, TypeError, OSError) as exc:
            raise ConfigError(f"[{key}]: {exc}") from exc

    def grid(self) -> Grid:
        g = self.data["grid"]
        try:
            return Grid(float(g["t0"]), float(g["dt"]), int(g["n"]))
        except KeyError as exc:
            raise ConfigError(f"[grid] missing {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"[grid]: {exc}") from exc

    def warmup(self, kernel: Kernel | None = None) -> float:
        """Configured warmup, else the kernel's 1e-12 horizon."""
        w = self.data["grid"].get("warmup")
        if w is not None:
            return float(w)
        return 0.0 if kernel is None else float(kernel.horizon(1e-12))

    def canonical(self) -> str:
        """Canonical JSON of everything that affects results (the output directory does not)."""
        body = {k: v for k, v in self.data.items() if k != "out"}
        return json.dumps(body, sort_keys=True, separators=(",", ":"))

    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def load_config(path=None, overrides=(), *, seed=None, out=None) -> RunConfig:
    base = Path(path).parent if path is not None else Path(".")
    return RunConfig.build(load_raw(path), overrides, seed=seed, out=out, base_dir=base)
