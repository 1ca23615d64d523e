"""Deterministic JSON and CSV writers for command outputs.

JSON keys are sorted and non-finite floats become the strings "inf",
"-inf" and "nan"; CSV floats use 17 significant digits so doubles
round-trip exactly.
"""

import json
import math
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from pydantic import BaseModel

from herzkit.models.functions import SampledGrid


FLOAT_FORMAT = "%.17g"


def to_jsonable(value: Any) -> Any:
    """Convert models, enums, numpy scalars and non-finite floats into plain JSON values."""
    if isinstance(value, BaseModel):
        return to_jsonable(value.model_dump(mode="python", by_alias=True))
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def dumps(value: Any) -> str:
    return json.dumps(to_jsonable(value), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path: Path, value: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(value), encoding="utf-8")
    return path


def write_csv(path: Path, frame: pd.DataFrame) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def grid_frame(grid: SampledGrid) -> pd.DataFrame:
    """Sample locations (nodes, or cell centers for cell layout) with their values."""
    shift = 0.5 if grid.layout == "cell" else 0.0
    axes = [lo + grid.spacing * (np.arange(c) + shift) for lo, c in zip(grid.lo, grid.counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    data = {f"x{i}": m.ravel() for i, m in enumerate(mesh)}
    data["value"] = np.asarray(grid.values, dtype=float)
    return pd.DataFrame(data)


def points_frame(points) -> pd.DataFrame:
    """Operator values at points: one x_i column per coordinate, then ``value``."""
    if not points:
        return pd.DataFrame({"value": []})
    n = len(points[0].x)
    data = {f"x{i}": [p.x[i] for p in points] for i in range(n)}
    data["value"] = [p.value for p in points]
    return pd.DataFrame(data)
