"""Deterministic benchmark generators and CSV persistence."""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np
import pandas as pd

from sparcs.core.exceptions import DimensionError, ParseError, UnsupportedShapeError
from sparcs.core.logging import get_logger
from sparcs.models.schemas import FamilyParams
from sparcs.services.linalg import random_rotation

logger = get_logger(__name__)


@dataclass(frozen=True)
class Dataset:
    """Paired samples (rows) with the provenance needed to regenerate them."""

    x: np.ndarray
    y: np.ndarray
    provenance: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        if y.ndim == 1:
            y = y.reshape(-1, 1)
        if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
            raise DimensionError(f"dataset x {x.shape} and y {y.shape} do not pair up")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def input_dim(self) -> int:
        return self.x.shape[1]

    @property
    def output_dim(self) -> int:
        return self.y.shape[1]

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.x[idx], self.y[idx], dict(self.provenance))


def _nonlinearity(tag: str, x: np.ndarray) -> np.ndarray:
    if tag == "dot_square":
        return np.sum(x * x, axis=1)
    raise UnsupportedShapeError(f"unknown nonlinearity tag {tag!r}")


def family_function(x: np.ndarray, params: FamilyParams) -> np.ndarray:
    """
    Linear-to-nonlinear interpolation controlled by alpha (where) and beta (how sharp):

        f(x) = 1/4 [1 - tanh(beta (alpha - 1/2))] w.x + 1/4 [1 + tanh(beta (alpha - 1/2))] g(x)
    """
    x = np.asarray(x, dtype=np.float64)
    w = np.ones(params.d) if params.w is None else np.asarray(params.w, dtype=np.float64)
    t = np.tanh(params.beta * (params.alpha - 0.5))
    return 0.25 * (1.0 - t) * (x @ w) + 0.25 * (1.0 + t) * _nonlinearity(params.g, x)


def gen_family(params: FamilyParams, n: int, seed: int) -> Dataset:
    """x uniform on [-1, 1]^d, scalar y = f(x)."""
    if n < 1:
        raise DimensionError(f"need at least one sample, got {n}")
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, size=(n, params.d))
    provenance = {"generator": "family", "seed": int(seed), "n": int(n), **params.model_dump()}
    return Dataset(x, family_function(x, params), provenance)


@dataclass(frozen=True)
class TeacherNetwork:
    """t(x) = W2 relu(W1 x) with W1, W2 rotations."""

    w1: np.ndarray
    w2: np.ndarray

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.maximum(x @ self.w1.T, 0.0) @ self.w2.T


def gen_teacher(d: int, hidden: int, n: int, seed: int) -> Tuple[Dataset, TeacherNetwork]:
    """Teacher-student data from a random one-hidden-layer ReLU network of rotations."""
    if d != hidden:
        raise UnsupportedShapeError(
            f"teacher weights are rotations and must be square: d={d}, hidden={hidden}"
        )
    rng = np.random.default_rng(seed)
    teacher = TeacherNetwork(w1=random_rotation(d, rng), w2=random_rotation(d, rng))
    x = rng.uniform(-1.0, 1.0, size=(n, d))
    provenance = {"generator": "teacher", "seed": int(seed), "n": int(n), "d": d, "hidden": hidden}
    logger.info(f"Generated teacher dataset: d={d}, n={n}, seed={seed}")
    return Dataset(x, teacher(x), provenance), teacher


def alpha_grid(points: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, points)


def dataset_file_name(generator: str, seed: int, **params) -> str:
    """family_a{alpha}_b{beta}_seed{s}.csv or teacher_d{d}_seed{s}.csv."""
    if generator == "family":
        return f"family_a{params['alpha']:g}_b{params['beta']:g}_seed{seed}.csv"
    if generator == "teacher":
        return f"teacher_d{params['d']}_seed{seed}.csv"
    raise ValueError(f"unknown generator {generator!r}")


def save_csv(ds: Dataset, path: Union[str, Path]) -> Path:
    """Header x1..xd,y1..ym; provenance as leading '# key: json' lines; 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = [f"x{k + 1}" for k in range(ds.input_dim)] + [f"y{k + 1}" for k in range(ds.output_dim)]
    frame = pd.DataFrame(np.hstack([ds.x, ds.y]), columns=columns)
    with open(path, "w", newline="") as fh:
        for key, value in ds.provenance.items():
            fh.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
        frame.to_csv(fh, index=False, float_format="%.17g", lineterminator="\n")
    return path


def _to_float(text) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        return float("nan")


def load_csv(path: Union[str, Path]) -> Dataset:
    """Inverse of save_csv; malformed rows raise ParseError naming the file line."""
    path = Path(path)
    provenance: Dict[str, object] = {}
    comment_lines = 0
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            comment_lines += 1
            key, sep, value = line[1:].strip().partition(":")
            if not sep:
                raise ParseError(f"{path}: line {comment_lines}: provenance line lacks 'key: value'")
            try:
                provenance[key.strip()] = json.loads(value)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}: line {comment_lines}: bad provenance value") from exc

    try:
        frame = pd.read_csv(path, comment="#", dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise ParseError(f"{path}: {exc}") from exc

    x_cols = [c for c in frame.columns if c.startswith("x")]
    y_cols = [c for c in frame.columns if c.startswith("y")]
    if not x_cols or not y_cols or len(x_cols) + len(y_cols) != len(frame.columns):
        raise ParseError(f"{path}: line {comment_lines + 1}: header must be x1..xd,y1..ym")

    values = frame.apply(lambda column: column.map(_to_float))
    bad = values.isna().any(axis=1).to_numpy()
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise ParseError(f"{path}: line {comment_lines + 2 + row}: wrong column count or non-numeric value")

    return Dataset(values[x_cols].to_numpy(), values[y_cols].to_numpy(), provenance)
