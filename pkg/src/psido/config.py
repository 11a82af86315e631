"""Run configuration: named weights, named symbols, grid, parameters and seed."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .descriptor import SymbolDescriptor, describe
from .quantize import GridSpec
from .weights import REGISTRY, Weight, get_weight, make_weight

__all__ = ["ConfigError", "RunConfig", "load_config"]


class ConfigError(ValueError):
    """Configuration does not validate or a reference does not resolve."""


_TOP_KEYS = {"weights", "symbols", "grid", "params", "seed", "tolerances"}
_SYMBOL_KEYS = {"expr", "order", "rho", "weight", "xweight", "dim"}
_WEIGHT_KEYS = {"expr", "dim", "mu0", "mu1", "mu", "C0", "C1"}


@dataclass
class RunConfig:
    weights: dict = field(default_factory=dict)
    symbols: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    seed: int = 0
    tolerances: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        extra = set(d) - _TOP_KEYS
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        cfg = cls(dict(d.get("weights", {})), dict(d.get("symbols", {})),
                  dict(d.get("grid", {})),
                  dict(d.get("params", {})), d.get("seed", 0), dict(d.get("tolerances", {})))
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return {"weights": self.weights, "symbols": self.symbols, "grid": self.grid,
                "params": self.params, "seed": self.seed, "tolerances": self.tolerances}

    def validate(self) -> "RunConfig":
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError("seed must be an integer")
        for name, spec in self.weights.items():
            if isinstance(spec, dict):
                extra = set(spec) - _WEIGHT_KEYS
                if extra or "expr" not in spec:
                    raise ConfigError(f"weight {name!r}: needs 'expr', unknown keys {sorted(extra)}")
            elif not isinstance(spec, str):
                raise ConfigError(f"weight {name!r} must be a name, an expression or an object")
        for name, spec in self.symbols.items():
            if not isinstance(spec, dict) or "expr" not in spec:
                raise ConfigError(f"symbol {name!r} needs an 'expr'")
            extra = set(spec) - _SYMBOL_KEYS
            if extra:
                raise ConfigError(f"symbol {name!r}: unknown keys {sorted(extra)}")
        try:
            self.grid_spec()
            for name in self.weights:
                self.weight(name)
            for name in self.symbols:
                self.symbol(name)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def grid_spec(self, default: GridSpec | None = None) -> GridSpec:
        """The configured grid, with unset fields taken from ``default``."""
        g = self.grid
        extra = set(g) - {"dim", "L", "N"}
        if extra:
            raise ConfigError(f"unknown grid keys: {sorted(extra)}")
        d = default or GridSpec(1, 16.0, 256)
        return GridSpec(int(g.get("dim", d.dim)), float(g.get("L", d.L)), int(g.get("N", d.N)))

    def weight(self, ref, dim: int | None = None) -> Weight:
        dim = dim or int(self.grid.get("dim", 1))
        if isinstance(ref, Weight):
            return ref
        spec = self.weights.get(ref)
        if spec is None:
            return get_weight(ref, dim)
        if isinstance(spec, str):
            return REGISTRY[spec] if spec in REGISTRY else get_weight(spec, dim)
        return make_weight(ref, spec["expr"], int(spec.get("dim", dim)),
                           float(spec.get("mu0", 1.0)), float(spec.get("mu1", 1.0)),
                           float(spec.get("mu", 1.0)), float(spec.get("C0", 1.0)),
                           float(spec.get("C1", 1.0)), register=True)

    def symbol(self, ref: str, order=None, rho=None, weight=None, xweight=None) -> SymbolDescriptor:
        """Named symbol from the config, or ``ref`` read as an expression."""
        spec = dict(self.symbols.get(ref, {"expr": ref}))
        if order is not None:
            spec["order"] = order
        if rho is not None:
            spec["rho"] = rho
        if weight is not None:
            spec["weight"] = weight
        if xweight is not None:
            spec["xweight"] = xweight
        dim = int(spec.get("dim", self.grid.get("dim", 1)))
        m = spec.get("order", 0.0)
        m = tuple(float(v) for v in m) if isinstance(m, (list, tuple)) else float(m)
        w = self.weight(spec.get("weight", "bracket"), dim)
        xw = spec.get("xweight")
        xw = self.weight(xw, dim) if xw is not None else None
        return describe(spec["expr"], m, float(spec.get("rho", 1.0)), w, dim, xw)


def load_config(path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return RunConfig.from_dict(data)
