"""Labelled datasets, the replace-last-entry neighbour relation, and CSV I/O."""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CsvError",
    "Example",
    "Database",
    "DomainBox",
    "load_csv",
    "to_csv",
    "neighbor_replace_last",
    "bounding_box",
]


class CsvError(ValueError):
    """Raised when a CSV stream cannot be turned into a Database."""


def _frozen_array(values, dtype=np.float64):
    out = np.array(values, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Example:
    """One training example: a point in R^d and a label in {-1, +1}."""

    x: np.ndarray
    y: int

    def __post_init__(self):
        x = _frozen_array(self.x)
        if x.ndim != 1:
            raise ValueError("example point must be a 1-D vector")
        if not np.all(np.isfinite(x)):
            raise ValueError("example point must have finite entries")
        if self.y not in (-1, 1):
            raise ValueError(f"label must be -1 or +1, got {self.y!r}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", int(self.y))

    @property
    def dim(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True, eq=False)
class Database:
    """An ordered sequence of n > 1 examples sharing dimension d.

    `points` is the (n, d) matrix of inputs and `labels` the length-n vector
    of -1/+1 labels; both are stored read-only so a Database can be shared
    freely across concurrent audit trials.
    """

    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        points = _frozen_array(self.points)
        labels = _frozen_array(self.labels)
        if points.ndim != 2:
            raise ValueError("points must be an (n, d) array")
        if labels.shape != (points.shape[0],):
            raise ValueError("labels must be a length-n vector")
        if points.shape[0] <= 1:
            raise ValueError("a database needs more than one entry")
        if not np.all(np.isfinite(points)):
            raise ValueError("points must have finite entries")
        if not np.all(np.isin(labels, (-1.0, 1.0))):
            raise ValueError("labels must all be -1 or +1")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def example(self, i: int) -> Example:
        return Example(self.points[i], int(self.labels[i]))

    def __eq__(self, other):
        if not isinstance(other, Database):
            return NotImplemented
        return np.array_equal(self.points, other.points) and np.array_equal(
            self.labels, other.labels
        )


@dataclass(frozen=True, eq=False)
class DomainBox:
    """Axis-aligned box containing the data; supplies the sup-norm domain."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = _frozen_array(self.lower)
        upper = _frozen_array(self.upper)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("bounds must be 1-D vectors of equal length")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("bounds must be finite")
        if np.any(lower > upper):
            raise ValueError("lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def diameter(self) -> float:
        """Euclidean length of (upper - lower)."""
        return float(np.linalg.norm(self.upper - self.lower))

    def max_l2_norm(self) -> float:
        """Largest Euclidean norm over the box (attained at a corner)."""
        return float(np.sqrt(np.sum(np.maximum(self.lower**2, self.upper**2))))

    def max_abs_coordinate(self) -> float:
        """Largest coordinate magnitude over the box."""
        return float(np.max(np.maximum(np.abs(self.lower), np.abs(self.upper))))

    def grid(self, resolution: int) -> np.ndarray:
        """Regular grid with `resolution` points per axis, shape (resolution^d, d)."""
        if resolution < 2:
            raise ValueError("grid resolution must be at least 2")
        axes = [
            np.linspace(self.lower[i], self.upper[i], resolution)
            for i in range(self.dim)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def displacement_box(self) -> "DomainBox":
        """Box of pairwise differences x - y for x, y in this box."""
        span = self.upper - self.lower
        return DomainBox(-span, span)

    def __eq__(self, other):
        if not isinstance(other, DomainBox):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(
            self.upper, other.upper
        )


def _read_text(source) -> str:
    if hasattr(source, "read"):
        data = source.read()
        return data.decode("utf-8") if isinstance(data, bytes) else data
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source, "rb") as fh:
            return fh.read().decode("utf-8")
    if isinstance(source, str):
        return source
    raise TypeError("source must be a path, bytes, text, or a readable stream")


def load_csv(source, has_header: bool = False) -> Database:
    """Parse comma-separated rows of d real features followed by a -1/+1 label.

    Accepts a path, bytes, text, or a readable stream; UTF-8 with LF or CRLF
    endings. When `has_header` is set the first row is skipped.
    """
    text = _read_text(source)
    rows = []
    line_numbers = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(tok.strip() == "" for tok in row):
            continue
        rows.append([tok.strip() for tok in row])
        line_numbers.append(lineno)
    if has_header and rows:
        rows = rows[1:]
        line_numbers = line_numbers[1:]
    if len(rows) <= 1:
        raise CsvError("dataset must contain more than one data row")

    width = len(rows[0])
    if width < 2:
        raise CsvError(f"row {line_numbers[0]}: need at least one feature and a label")
    points = np.empty((len(rows), width - 1))
    labels = np.empty(len(rows))
    for r, (row, lineno) in enumerate(zip(rows, line_numbers)):
        if len(row) != width:
            raise CsvError(
                f"row {lineno}: expected {width} fields, got {len(row)} (ragged row)"
            )
        try:
            values = [float(tok) for tok in row]
        except ValueError as exc:
            raise CsvError(f"row {lineno}: {exc}") from None
        if values[-1] not in (-1.0, 1.0):
            raise CsvError(f"row {lineno}: label must be -1 or +1, got {row[-1]!r}")
        points[r] = values[:-1]
        labels[r] = values[-1]
    return Database(points, labels)


def to_csv(db: Database) -> str:
    """Serialize a database back to CSV; feature values round-trip bit-exactly."""
    lines = []
    for i in range(db.n):
        feats = ",".join(repr(float(v)) for v in db.points[i])
        label = "+1" if db.labels[i] > 0 else "-1"
        lines.append(f"{feats},{label}")
    return "\n".join(lines) + "\n"


def neighbor_replace_last(db: Database, e: Example) -> Database:
    """New database equal to `db` except the last entry is replaced by `e`."""
    if e.dim != db.dim:
        raise ValueError(
            f"replacement entry has dimension {e.dim}, database has {db.dim}"
        )
    points = db.points.copy()
    labels = db.labels.copy()
    points[-1] = e.x
    labels[-1] = e.y
    return Database(points, labels)


def bounding_box(db: Database, margin: float = 0.0) -> DomainBox:
    """Smallest axis-aligned box containing the data, expanded by `margin` per side."""
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    return DomainBox(db.points.min(axis=0) - margin, db.points.max(axis=0) + margin)
