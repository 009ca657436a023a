"""Tabular dataset ingestion, target scaling, min-max normalization, splits.

CSV files are comma-delimited with the target in the last column; a header
row is auto-detected by attempting to parse the first row numerically.
The abalone file's categorical sex column (tokens M/F/I) is recognized and
dropped. Each catalog entry fixes the expected shape and the target scale
factor applied straight after loading.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .tensor import DomainError

__all__ = [
    "SchemaError",
    "CsvParseError",
    "CatalogEntry",
    "CATALOG",
    "Dataset",
    "NormalizationParams",
    "load_dataset",
    "train_test_split",
    "minmax_fit_apply",
    "denormalize_target",
]

_SEX_TOKENS = {"M", "F", "I"}


class SchemaError(ValueError):
    """A file's column layout or shape does not match the catalog."""


class CsvParseError(ValueError):
    """A cell could not be parsed as a number."""


@dataclass(frozen=True)
class CatalogEntry:
    filename: str
    target_scale: float
    expected_rows: int | None  # None: any row count is accepted
    expected_features: int
    categorical_first_column: bool = False


CATALOG: dict[str, CatalogEntry] = {
    "abalone": CatalogEntry("abalone.csv", 1.0, 4177, 7, categorical_first_column=True),
    "ailerons": CatalogEntry("ailerons.csv", 1e4, 13750, 40),
    "bank": CatalogEntry("bank32nh.csv", 10.0, 8192, 32),
    "census": CatalogEntry("census16h.csv", 1e-5, None, 16),
    "pumadyn": CatalogEntry("pumadyn32nm.csv", 1e3, 8192, 32),
}


@dataclass
class Dataset:
    """Feature matrix, scaled target column, and (optionally) split state."""

    name: str
    X: np.ndarray  # [n, d] float64
    Y: np.ndarray  # [n, 1] float64, already multiplied by the target scale
    target_scale: float = 1.0
    normalized: bool = False
    train_idx: np.ndarray | None = None
    test_idx: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class NormalizationParams:
    """Per-column min/max in original (scaled) units, fit on the train split."""

    x_min: np.ndarray
    x_max: np.ndarray
    y_min: float
    y_max: float

    @property
    def target_range(self) -> float:
        return self.y_max - self.y_min


def _is_float(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def _looks_like_data(cells: list[str], categorical_first: bool) -> bool:
    if categorical_first and cells and cells[0].strip() in _SEX_TOKENS:
        cells = cells[1:]
    return bool(cells) and all(_is_float(c) for c in cells)


def load_dataset(name: str, path) -> Dataset:
    """Read a catalog dataset from `path`, validate its schema, scale the target.

    Raises SchemaError when the column count or final shape disagrees with
    the catalog, CsvParseError (with row and column) on non-numeric cells.
    """
    if name not in CATALOG:
        raise KeyError(f"unknown dataset {name!r}; catalog has {sorted(CATALOG)}")
    entry = CATALOG[name]
    expected_cols = entry.expected_features + 1 + (1 if entry.categorical_first_column else 0)

    import csv

    with open(path, newline="") as f:
        rows = [r for r in csv.reader(f) if r and any(c.strip() for c in r)]
    if not rows:
        raise SchemaError(f"{path}: file is empty")

    start = 0 if _looks_like_data(rows[0], entry.categorical_first_column) else 1
    parsed = np.empty((len(rows) - start, expected_cols - (1 if entry.categorical_first_column else 0)))
    for i, row in enumerate(rows[start:]):
        if len(row) != expected_cols:
            raise SchemaError(
                f"{path}: row {start + i} has {len(row)} columns, expected {expected_cols}"
            )
        cells = row[1:] if entry.categorical_first_column else row
        if entry.categorical_first_column and row[0].strip() not in _SEX_TOKENS:
            raise CsvParseError(
                f"{path}: row {start + i}, column 0: expected a sex token M/F/I, got {row[0]!r}"
            )
        for j, cell in enumerate(cells):
            try:
                parsed[i, j] = float(cell)
            except ValueError:
                raise CsvParseError(
                    f"{path}: row {start + i}, column {j}: {cell!r} is not a number"
                ) from None

    X = parsed[:, :-1].copy()
    Y = parsed[:, -1:].copy() * entry.target_scale
    if entry.expected_rows is not None and X.shape[0] != entry.expected_rows:
        raise SchemaError(
            f"{name}: loaded {X.shape[0]} rows, catalog expects {entry.expected_rows}"
        )
    if X.shape[1] != entry.expected_features:
        raise SchemaError(
            f"{name}: loaded {X.shape[1]} features, catalog expects {entry.expected_features}"
        )
    return Dataset(name=name, X=X, Y=Y, target_scale=entry.target_scale)


def train_test_split(n: int, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic shuffled split; `fraction` of rows go to the train side."""
    if not 0.0 < fraction < 1.0:
        raise DomainError(f"split fraction must lie in (0, 1), got {fraction}")
    cut = int(n * fraction)
    if cut < 1 or cut >= n:
        raise DomainError(f"split of {n} rows at {fraction} leaves an empty side")
    perm = np.random.default_rng(seed).permutation(n)
    return perm[:cut].copy(), perm[cut:].copy()


def minmax_fit_apply(
    ds: Dataset, train_idx: np.ndarray, test_idx: np.ndarray
) -> tuple[Dataset, NormalizationParams]:
    """Min-max normalize features and target with train-split statistics.

    Every value becomes (v - min) / (max - min); columns that are constant
    on the train split map to zero. Rows outside the train split are
    clipped into [0, 1] so the normalized contract holds everywhere.
    """
    if len(train_idx) == 0:
        raise DomainError("cannot fit normalization on an empty training split")
    x_min = ds.X[train_idx].min(axis=0)
    x_max = ds.X[train_idx].max(axis=0)
    y_min = float(ds.Y[train_idx].min())
    y_max = float(ds.Y[train_idx].max())

    def norm(values, lo, hi):
        span = hi - lo
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(span == 0.0, 0.0, (values - lo) / np.where(span == 0.0, 1.0, span))
        return out

    X = norm(ds.X, x_min, x_max)
    Y = norm(ds.Y, y_min, y_max)
    mask = np.ones(ds.n, dtype=bool)
    mask[train_idx] = False
    X[mask] = np.clip(X[mask], 0.0, 1.0)
    Y[mask] = np.clip(Y[mask], 0.0, 1.0)

    normalized = replace(
        ds, X=X, Y=Y, normalized=True, train_idx=np.asarray(train_idx), test_idx=np.asarray(test_idx)
    )
    return normalized, NormalizationParams(x_min=x_min, x_max=x_max, y_min=y_min, y_max=y_max)


def denormalize_target(y_norm: np.ndarray, params: NormalizationParams) -> np.ndarray:
    """Map normalized predictions back to scaled target units."""
    if params is None:
        raise ValueError("normalization parameters have not been fitted")
    return y_norm * params.target_range + params.y_min
