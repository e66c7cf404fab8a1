"""Named-column sample matrices with CSV input and output."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

__all__ = ["Dataset", "DatasetError"]


class DatasetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    """``values[r, c]`` is sample ``r`` of column ``columns[c]``."""

    columns: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        cols = tuple(self.columns)
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[1] != len(cols):
            raise DatasetError(f"values of shape {vals.shape} do not match {len(cols)} columns")
        if len(set(cols)) != len(cols):
            raise DatasetError("column names must be unique")
        if vals.shape[0] < 1:
            raise DatasetError("dataset needs at least one sample")
        if not np.isfinite(vals).all():
            raise DatasetError("dataset contains non-finite entries")
        vals.setflags(write=False)
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "values", vals)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    def index(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise DatasetError(f"unknown column {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.index(name)]

    def subset(self, names: Iterable[str]) -> "Dataset":
        names = sorted(set(names))
        idx = [self.index(n) for n in names]
        return Dataset(tuple(names), self.values[:, idx])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns)
            for row in self.values:
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path: str | Path) -> "Dataset":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise DatasetError(f"{path}: empty file")
        header, body = rows[0], [r for r in rows[1:] if r]
        try:
            vals = np.array([[float(v) for v in r] for r in body], dtype=float)
        except ValueError as exc:
            raise DatasetError(f"{path}: {exc}") from exc
        if vals.size == 0:
            vals = vals.reshape(0, len(header))
        return cls(tuple(h.strip() for h in header), vals)
