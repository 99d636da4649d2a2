"""Sparse datasets: loading, splitting, and feature scaling.

Rows are stored sparsely (zeros omitted) so that text-classification-scale
dimensionality stays cheap; dense CSV input is converted on load.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """One sparse row: strictly increasing indices paired with non-zero values."""

    indices: np.ndarray
    values: np.ndarray
    dimension: int

    def __post_init__(self):
        idx = np.ascontiguousarray(self.indices, dtype=np.int64)
        val = np.ascontiguousarray(self.values, dtype=np.float64)
        if idx.ndim != 1 or val.ndim != 1 or idx.shape[0] != val.shape[0]:
            raise ValueError("indices and values must be 1-d arrays of equal length")
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")
        if idx.shape[0] > 0:
            if idx[0] < 0 or idx[-1] >= self.dimension:
                raise ValueError(
                    f"feature index out of range [0, {self.dimension})"
                )
            if np.any(np.diff(idx) <= 0):
                raise ValueError("feature indices must be strictly increasing")
        if not np.all(np.isfinite(val)):
            raise ValueError("feature values must be finite")
        if np.any(val == 0.0):
            raise ValueError("zero-valued entries must be omitted")
        idx.setflags(write=False)
        val.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_pairs(cls, pairs, dimension: int) -> "FeatureVector":
        """Build from (index, value) pairs; pairs need not be pre-sorted."""
        pairs = sorted(pairs)
        idx = np.array([p[0] for p in pairs], dtype=np.int64)
        val = np.array([p[1] for p in pairs], dtype=np.float64)
        return cls(idx, val, dimension)

    @classmethod
    def from_dense(cls, dense, dimension: int | None = None) -> "FeatureVector":
        """Build from a dense array, dropping exact zeros."""
        dense = np.asarray(dense, dtype=np.float64)
        if dimension is None:
            dimension = dense.shape[0]
        nz = np.flatnonzero(dense)
        return cls(nz, dense[nz], dimension)

    @property
    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.values.tolist()))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dimension)
        out[self.indices] = self.values
        return out


@dataclass(frozen=True, eq=False)
class Dataset:
    """Rows with binary labels and an optional true-probability channel."""

    rows: tuple[FeatureVector, ...]
    labels: np.ndarray
    dimension: int
    true_eta: np.ndarray | None = None

    def __post_init__(self):
        rows = tuple(self.rows)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if labels.ndim != 1 or labels.shape[0] != len(rows):
            raise ValueError("labels must be 1-d and match the number of rows")
        if labels.shape[0] > 0 and not np.all((labels == 0) | (labels == 1)):
            raise ValueError("labels must be 0 or 1")
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")
        for i, r in enumerate(rows):
            if r.dimension != self.dimension:
                raise ValueError(
                    f"row {i} has dimension {r.dimension}, expected {self.dimension}"
                )
        eta = self.true_eta
        if eta is not None:
            eta = np.ascontiguousarray(eta, dtype=np.float64)
            if eta.shape != labels.shape:
                raise ValueError("true_eta must match the number of rows")
            if eta.shape[0] > 0 and (np.min(eta) < 0.0 or np.max(eta) > 1.0):
                raise ValueError("true_eta values must lie in [0, 1]")
            eta.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "true_eta", eta)

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def n_pos(self) -> int:
        return int(np.sum(self.labels == 1))

    @property
    def n_neg(self) -> int:
        return int(np.sum(self.labels == 0))

    @property
    def base_rate(self) -> float:
        if self.n == 0:
            raise ValueError("base rate of an empty dataset is undefined")
        return self.n_pos / self.n

    def take(self, indices) -> "Dataset":
        """Subset by row indices, preserving the given order."""
        indices = np.asarray(indices, dtype=np.int64)
        rows = tuple(self.rows[i] for i in indices)
        eta = None if self.true_eta is None else self.true_eta[indices]
        return Dataset(rows, self.labels[indices], self.dimension, eta)


@dataclass(frozen=True)
class SplitSpec:
    """Seeded train/test partition request."""

    train_fraction: float
    seed: int
    stratified: bool = False

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be strictly between 0 and 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True, eq=False)
class ScalingParams:
    """Per-feature affine transform: x -> (x - mean) / scale.

    Zero-variance features keep mean 0 and scale 1 (left untouched). When
    ``centered`` is False the transform only rescales, which preserves
    sparsity for high-dimensional data.
    """

    mean: np.ndarray
    scale: np.ndarray
    centered: bool

    def transform_row(self, row: FeatureVector) -> FeatureVector:
        if self.centered:
            dense = row.to_dense()
            dense = (dense - self.mean) / self.scale
            return FeatureVector.from_dense(dense, row.dimension)
        vals = row.values / self.scale[row.indices]
        return FeatureVector(row.indices, vals, row.dimension)

    def transform(self, d: Dataset) -> Dataset:
        rows = tuple(self.transform_row(r) for r in d.rows)
        return Dataset(rows, d.labels, d.dimension, d.true_eta)

    def fold(self, weights: np.ndarray, bias: float) -> tuple[np.ndarray, float]:
        """Rewrite a linear scorer fit on scaled data to act on raw features.

        w'((x - m)/s) + b == (w'/s) x + (b - sum(w m / s)).
        """
        w = np.asarray(weights, dtype=np.float64) / self.scale
        b = float(bias)
        if self.centered:
            b -= float(np.dot(w, self.mean))
        return w, b


def load_dense(path, label_column: str, feature_columns=None) -> Dataset:
    """Read a header CSV with one 0/1 label column; all other columns are features.

    ``feature_columns`` optionally restricts which columns are used, in the
    order given (e.g. to reproduce a published feature subset).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: file is empty, expected a header row")
        header = [h.strip() for h in header]
        if label_column not in header:
            raise ValueError(f"{path}: label column {label_column!r} not in header")
        label_pos = header.index(label_column)
        if feature_columns is None:
            feat_names = [h for h in header if h != label_column]
        else:
            feat_names = list(feature_columns)
            for name in feat_names:
                if name not in header:
                    raise ValueError(f"{path}: feature column {name!r} not in header")
                if name == label_column:
                    raise ValueError(f"{path}: {name!r} is the label column")
        if not feat_names:
            raise ValueError(f"{path}: no feature columns")
        feat_pos = [header.index(name) for name in feat_names]
        dimension = len(feat_pos)

        rows: list[FeatureVector] = []
        labels: list[int] = []
        for rownum, record in enumerate(reader, start=1):
            if len(record) != len(header):
                raise ValueError(
                    f"{path}: row {rownum} has {len(record)} fields, expected {len(header)}"
                )
            raw_label = record[label_pos].strip()
            try:
                y = float(raw_label)
            except ValueError:
                raise ValueError(
                    f"{path}: row {rownum}, column {label_column!r}: "
                    f"cannot parse label {raw_label!r}"
                )
            if y not in (0.0, 1.0):
                raise ValueError(
                    f"{path}: row {rownum}, column {label_column!r}: "
                    f"label must be 0 or 1, got {raw_label!r}"
                )
            dense = np.empty(dimension)
            for j, pos in enumerate(feat_pos):
                cell = record[pos].strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise ValueError(
                        f"{path}: row {rownum}, column {header[pos]!r}: "
                        f"cannot parse value {cell!r}"
                    )
                if not np.isfinite(v):
                    raise ValueError(
                        f"{path}: row {rownum}, column {header[pos]!r}: "
                        f"non-finite value {cell!r}"
                    )
                dense[j] = v
            rows.append(FeatureVector.from_dense(dense, dimension))
            labels.append(int(y))
    return Dataset(tuple(rows), np.array(labels, dtype=np.int64), dimension)


def load_sparse(path, dimension: int | None = None) -> Dataset:
    """Read `<label> <index>:<value> ...` lines; file indices are 1-based.

    Labels are 0/1, with -1 accepted as an alias for 0. When ``dimension``
    is omitted it becomes 1 + the largest 0-based index seen (minimum 1).
    """
    rows_raw: list[tuple[np.ndarray, np.ndarray]] = []
    labels: list[int] = []
    max_index = -1
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            try:
                y = float(tokens[0])
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: cannot parse label {tokens[0]!r}")
            if y == 1.0:
                label = 1
            elif y in (0.0, -1.0):
                label = 0
            else:
                raise ValueError(
                    f"{path}: line {lineno}: label must be 0, 1 or -1, got {tokens[0]!r}"
                )
            idx: list[int] = []
            val: list[float] = []
            seen: set[int] = set()
            for tok in tokens[1:]:
                part = tok.split(":")
                if len(part) != 2:
                    raise ValueError(
                        f"{path}: line {lineno}: malformed pair {tok!r}, expected index:value"
                    )
                try:
                    i = int(part[0])
                    v = float(part[1])
                except ValueError:
                    raise ValueError(
                        f"{path}: line {lineno}: malformed pair {tok!r}, expected index:value"
                    )
                if i < 1:
                    raise ValueError(f"{path}: line {lineno}: index {i} must be >= 1")
                if not np.isfinite(v):
                    raise ValueError(f"{path}: line {lineno}: non-finite value in {tok!r}")
                if i in seen:
                    raise ValueError(f"{path}: line {lineno}: duplicate index {i}")
                seen.add(i)
                if v == 0.0:
                    continue
                idx.append(i - 1)
                val.append(v)
            if idx:
                max_index = max(max_index, max(idx))
            order = np.argsort(np.array(idx, dtype=np.int64), kind="stable")
            rows_raw.append(
                (
                    np.array(idx, dtype=np.int64)[order],
                    np.array(val, dtype=np.float64)[order],
                )
            )
            labels.append(label)
    if dimension is None:
        dimension = max(max_index + 1, 1)
    elif max_index >= dimension:
        raise ValueError(
            f"{path}: contains index {max_index + 1} beyond dimension {dimension}"
        )
    rows = tuple(FeatureVector(i, v, dimension) for i, v in rows_raw)
    return Dataset(rows, np.array(labels, dtype=np.int64), dimension)


def save_sparse(d: Dataset, path) -> None:
    """Write the sparse line format; float values round-trip exactly via repr."""
    with open(path, "w", encoding="utf-8") as fh:
        for row, label in zip(d.rows, d.labels.tolist()):
            pairs = " ".join(
                f"{i + 1}:{v!r}" for i, v in zip(row.indices.tolist(), row.values.tolist())
            )
            fh.write(f"{label} {pairs}".rstrip() + "\n")


def _half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def split_indices(d: Dataset, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Row indices (ascending) of the train and test sides of the partition."""
    if d.n < 2:
        raise ValueError("need at least 2 rows to split")
    rng = np.random.default_rng(spec.seed)
    mask = np.zeros(d.n, dtype=bool)
    if spec.stratified:
        if d.n_pos < 1 or d.n_neg < 1:
            raise ValueError("stratified split requires both classes present")
        for cls in (0, 1):
            members = np.flatnonzero(d.labels == cls)
            perm = rng.permutation(len(members))
            k = _half_up(spec.train_fraction * len(members))
            mask[members[perm[:k]]] = True
    else:
        perm = rng.permutation(d.n)
        k = _half_up(spec.train_fraction * d.n)
        mask[perm[:k]] = True
    return np.flatnonzero(mask), np.flatnonzero(~mask)


def split(d: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Seeded exact partition into (train, test); row order is preserved
    inside each part."""
    train_idx, test_idx = split_indices(d, spec)
    return d.take(train_idx), d.take(test_idx)


def standardize(
    train: Dataset, others=(), center: bool = True
) -> tuple[Dataset, list[Dataset], ScalingParams]:
    """Fit a per-feature affine transform on ``train`` and apply it everywhere.

    Statistics treat absent sparse entries as 0. With ``center=False`` only
    the scale is applied, keeping rows sparse; use it for very
    high-dimensional data where centering would materialize every feature.
    """
    if train.n == 0:
        raise ValueError("cannot standardize an empty training set")
    dim = train.dimension
    s1 = np.zeros(dim)
    s2 = np.zeros(dim)
    for row in train.rows:
        s1[row.indices] += row.values
        s2[row.indices] += row.values**2
    mean = s1 / train.n
    var = np.maximum(s2 / train.n - mean**2, 0.0)
    sd = np.sqrt(var)
    untouched = sd == 0.0
    scale = np.where(untouched, 1.0, sd)
    mean_used = np.where(untouched, 0.0, mean if center else 0.0)
    params = ScalingParams(mean_used, scale, centered=center)
    return params.transform(train), [params.transform(o) for o in others], params
