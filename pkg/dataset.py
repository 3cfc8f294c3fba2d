#!/usr/bin/env python3
"""
Spatial datasets and sampling designs.

A SpatialDataset holds n planar positions with one scalar value each. Designs
produce positions: regular k x k grids, uniform random draws over a rectangle,
or subsamples (without replacement) of an existing dataset.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

from errors import DatasetParseError, InvalidDesignError

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]

CSV_COLUMNS = ["x", "y", "value"]


def make_rng(seed: SeedLike) -> np.random.Generator:
    """Turn an int, SeedSequence or Generator into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _frozen(array) -> np.ndarray:
    out = np.array(array, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SpatialDataset:
    """
    Immutable set of (position, value) pairs.

    Args:
        positions: array-like of shape (n, 2)
        values: array-like of shape (n,)

    Raises:
        InvalidDesignError: shape mismatch, non-finite entries or duplicate positions
    """

    positions: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        positions = _frozen(self.positions)
        values = _frozen(self.values)
        if positions.ndim != 2 or positions.shape[1] != 2:
            raise InvalidDesignError(f"positions must have shape (n, 2), got {positions.shape}")
        if values.ndim != 1 or values.shape[0] != positions.shape[0]:
            raise InvalidDesignError(f"{positions.shape[0]} positions but values of shape {values.shape}")
        if positions.shape[0] < 1:
            raise InvalidDesignError("a dataset needs at least one observation")
        if not (np.all(np.isfinite(positions)) and np.all(np.isfinite(values))):
            raise InvalidDesignError("coordinates and values must be finite")
        duplicate = find_duplicate(positions)
        if duplicate is not None:
            raise InvalidDesignError(f"positions {duplicate[0]} and {duplicate[1]} coincide")
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpatialDataset):
            return NotImplemented
        return np.array_equal(self.positions, other.positions) and np.array_equal(self.values, other.values)

    def __repr__(self) -> str:
        return f"SpatialDataset(n={self.n})"

    def take(self, indices: Sequence[int]) -> "SpatialDataset":
        """Rows at the given indices, pairing preserved."""
        idx = np.asarray(indices, dtype=int)
        return SpatialDataset(self.positions[idx], self.values[idx])

    def drop(self, index: int) -> "SpatialDataset":
        """Dataset without row `index` (leave-one-out training set)."""
        keep = np.arange(self.n) != index
        return SpatialDataset(self.positions[keep], self.values[keep])

    def with_values(self, values) -> "SpatialDataset":
        return SpatialDataset(self.positions, values)

    def bounding_rectangle(self) -> "Rectangle":
        lo = self.positions.min(axis=0)
        hi = self.positions.max(axis=0)
        return Rectangle(float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1]))


def find_duplicate(positions: np.ndarray) -> Optional[tuple]:
    """Return the first pair of row indices holding identical coordinates, or None."""
    if positions.shape[0] < 2:
        return None
    _, first, counts = np.unique(positions, axis=0, return_index=True, return_counts=True)
    if np.all(counts == 1):
        return None
    dup_row = positions[first[np.argmax(counts > 1)]]
    rows = np.flatnonzero(np.all(positions == dup_row, axis=1))
    return int(rows[0]), int(rows[1])


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle [xmin, xmax] x [ymin, ymax]."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        values = (self.xmin, self.xmax, self.ymin, self.ymax)
        if not all(np.isfinite(v) for v in values):
            raise InvalidDesignError(f"rectangle bounds must be finite: {values}")
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise InvalidDesignError(f"degenerate rectangle {values}")

    @classmethod
    def parse(cls, text: str) -> "Rectangle":
        """Parse 'xmin,xmax,ymin,ymax'."""
        try:
            parts = [float(p) for p in text.split(",")]
        except ValueError as e:
            raise InvalidDesignError(f"cannot parse rectangle '{text}': {e}") from e
        if len(parts) != 4:
            raise InvalidDesignError(f"rectangle needs 4 numbers, got '{text}'")
        return cls(*parts)

    @classmethod
    def square(cls, low: float, high: float) -> "Rectangle":
        return cls(low, high, low, high)

    def as_list(self) -> list:
        return [self.xmin, self.xmax, self.ymin, self.ymax]


def make_grid(rect: Rectangle, k: int) -> np.ndarray:
    """
    Regular k x k grid including the rectangle corners.

    Rows are ordered by y first, then x (row-major), so two calls with the same
    arguments always return the same array.

    Args:
        rect: sampling rectangle
        k: points per axis, k >= 2

    Returns:
        np.ndarray: positions of shape (k*k, 2)
    """
    if int(k) != k or k < 2:
        raise InvalidDesignError(f"grid size k must be an integer >= 2, got {k}")
    k = int(k)
    xs = np.linspace(rect.xmin, rect.xmax, k)
    ys = np.linspace(rect.ymin, rect.ymax, k)
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def sample_uniform(rect: Rectangle, n: int, seed: SeedLike) -> np.ndarray:
    """
    n i.i.d. uniform positions in `rect`; exact duplicates are redrawn.

    Args:
        rect: sampling rectangle
        n: number of points, n >= 1
        seed: int, SeedSequence or Generator

    Returns:
        np.ndarray: positions of shape (n, 2)
    """
    if int(n) != n or n < 1:
        raise InvalidDesignError(f"uniform design needs n >= 1, got {n}")
    rng = make_rng(seed)
    low = np.array([rect.xmin, rect.ymin])
    high = np.array([rect.xmax, rect.ymax])
    points = rng.uniform(low, high, size=(int(n), 2))
    while (dup := find_duplicate(points)) is not None:
        points[dup[1]] = rng.uniform(low, high)
    return points


def subsample(parent: SpatialDataset, n: int, seed: SeedLike) -> SpatialDataset:
    """
    Draw n distinct rows of `parent` without replacement.

    Raises:
        InvalidDesignError: n outside [1, parent.n]
    """
    if int(n) != n or not 1 <= n <= parent.n:
        raise InvalidDesignError(f"subsample size {n} outside [1, {parent.n}]")
    rng = make_rng(seed)
    rows = rng.choice(parent.n, size=int(n), replace=False)
    return parent.take(rows)


@dataclass(frozen=True)
class Design:
    """
    Declarative description of a sampling design.

    kind is one of "grid", "uniform" or "subsample"; `size` is k for grids and
    n otherwise.
    """

    kind: str
    size: int
    rect: Optional[Rectangle] = None
    seed: SeedLike = None

    def positions(self) -> np.ndarray:
        if self.kind == "grid":
            return make_grid(self.rect, self.size)
        if self.kind == "uniform":
            return sample_uniform(self.rect, self.size, self.seed)
        raise InvalidDesignError(f"design kind '{self.kind}' does not produce positions on its own")

    def draw(self, parent: SpatialDataset) -> SpatialDataset:
        if self.kind != "subsample":
            raise InvalidDesignError(f"design kind '{self.kind}' does not draw from a parent")
        return subsample(parent, self.size, self.seed)


def read_csv(path: Union[str, Path]) -> SpatialDataset:
    """
    Read an `x,y,value` CSV file.

    Row numbers in error messages count the header as line 1.

    Raises:
        DatasetParseError: missing file or columns, non-numeric cells, duplicate positions
    """
    path = Path(path)
    if not path.exists():
        raise DatasetParseError(f"data file '{path}' not found")
    try:
        frame = pd.read_csv(path, dtype=str, encoding="utf-8", skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DatasetParseError(f"cannot parse '{path}': {e}") from e
    frame.columns = [c.strip() for c in frame.columns]
    missing = [c for c in CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise DatasetParseError(f"'{path}' is missing column(s) {', '.join(missing)}")
    if frame.empty:
        raise DatasetParseError(f"'{path}' has no data rows")

    numeric = frame[CSV_COLUMNS].apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))
    bad = ~np.isfinite(numeric.to_numpy(dtype=float)).all(axis=1)
    if bad.any():
        row = int(np.argmax(bad))
        raise DatasetParseError(f"non-numeric or non-finite cell in {frame.iloc[row][CSV_COLUMNS].tolist()}", row=row + 2)

    data = numeric.to_numpy(dtype=float)
    duplicate = find_duplicate(data[:, :2])
    if duplicate is not None:
        raise DatasetParseError(
            f"position ({data[duplicate[1], 0]}, {data[duplicate[1], 1]}) duplicates row {duplicate[0] + 2}",
            row=duplicate[1] + 2,
        )
    logger.debug("read %d observations from %s", len(data), path)
    return SpatialDataset(data[:, :2], data[:, 2])


def write_csv(ds: SpatialDataset, path: Union[str, Path]) -> Path:
    """Write `ds` as `x,y,value` with full float precision and `\\n` line endings."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({"x": ds.positions[:, 0], "y": ds.positions[:, 1], "value": ds.values})
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n", encoding="utf-8")
    return path


def read_targets(path: Union[str, Path]) -> np.ndarray:
    """Read prediction targets from a CSV with at least `x,y` columns."""
    path = Path(path)
    if not path.exists():
        raise DatasetParseError(f"targets file '{path}' not found")
    frame = pd.read_csv(path, encoding="utf-8", skipinitialspace=True)
    frame.columns = [c.strip() for c in frame.columns]
    if not {"x", "y"}.issubset(frame.columns):
        raise DatasetParseError(f"'{path}' needs columns x,y")
    targets = frame[["x", "y"]].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    bad = ~np.isfinite(targets).all(axis=1)
    if bad.any():
        raise DatasetParseError("non-numeric target coordinate", row=int(np.argmax(bad)) + 2)
    return targets
