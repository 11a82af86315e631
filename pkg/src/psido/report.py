"""Schema-versioned JSON reports with deterministic serialization."""
from __future__ import annotations

import json
import math
from importlib import resources

import numpy as np

from . import __version__

__all__ = ["SCHEMA_ID", "sanitize", "make_report", "dumps", "load_schema", "strip_clock"]

SCHEMA_ID = "psido-report/1"


def sanitize(obj):
    """Plain JSON data: non-finite floats become strings, complex becomes [re, im]."""
    if hasattr(obj, "to_dict"):
        return sanitize(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return sanitize(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (complex, np.complexfloating)):
        return [sanitize(obj.real), sanitize(obj.imag)]
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def make_report(command: str, config: dict, result, verdict: str, wall_clock: float,
                error: str | None = None) -> dict:
    rep = {
        "schema": SCHEMA_ID,
        "command": command,
        "version": __version__,
        "config": sanitize(config),
        "result": sanitize(result),
        "verdict": verdict,
        "wall_clock_s": float(wall_clock),
    }
    if error is not None:
        rep["error"] = error
    return rep


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def strip_clock(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "wall_clock_s"}


def load_schema() -> dict:
    return json.loads(resources.files("psido").joinpath("report.schema.json").read_text())
