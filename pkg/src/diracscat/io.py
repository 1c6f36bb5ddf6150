"""CSV and JSON helpers shared by the kernel grids, reconstructions and the CLI.

Floats are written with 17 significant digits so a round trip is lossless.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import ConfigError

FLOAT_FMT = "{:.17g}"


def _to_jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def write_json(path: str | Path, obj: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_to_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def read_json(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence[float]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([FLOAT_FMT.format(float(v)) for v in row])
    return path


def read_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    try:
        with Path(path).open(newline="") as fh:
            r = csv.reader(fh)
            columns = next(r)
            data = np.array([[float(v) for v in row] for row in r], dtype=float)
    except FileNotFoundError as exc:
        raise ConfigError(f"file not found: {path}") from exc
    return columns, data.reshape(-1, len(columns))


def complex_columns(prefix: str, shape: tuple[int, ...]) -> list[str]:
    """Column names ``prefix_i_j_re, prefix_i_j_im`` in row-major order."""
    names = []
    for idx in np.ndindex(*shape):
        tag = "_".join(str(i + 1) for i in idx)
        names += [f"{prefix}{tag}_re", f"{prefix}{tag}_im"]
    return names


def split_complex(values: np.ndarray) -> np.ndarray:
    """(n, ...) complex -> (n, 2 * prod(...)) interleaved re/im."""
    flat = values.reshape(values.shape[0], -1)
    out = np.empty((flat.shape[0], 2 * flat.shape[1]))
    out[:, 0::2] = flat.real
    out[:, 1::2] = flat.imag
    return out


def join_complex(data: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    return (data[:, 0::2] + 1j * data[:, 1::2]).reshape((data.shape[0],) + shape)
