"""Labeled datasets: CSV ingestion, stratified splits, label flipping and
standardization.

A LabeledDataset keeps the raw feature matrix immutable through the
pipeline; standardization returns a transformed copy carrying its
parameters so test rows can be projected without ever being rewritten.
Synthetic rows added by augmentation are marked in `provenance` so
evaluation can never leak them into test sets.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .numerics import RngStream, ZScoreParams, zscore

PROV_ORIGINAL = "original"
PROV_SYNTHETIC = "synthetic"


class DatasetError(ValueError):
    pass


@dataclass
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    columns: list | None = None
    provenance: np.ndarray | None = None
    scaler: ZScoreParams | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise DatasetError("features must be a 2-d array")
        if self.labels.shape != (self.features.shape[0],):
            raise DatasetError("labels length does not match feature rows")
        bad = ~np.isin(self.labels, (0, 1))
        if bad.any():
            raise DatasetError(
                f"labels must be binary; offending row {int(np.argmax(bad))}")
        if self.provenance is None:
            self.provenance = np.full(self.n, PROV_ORIGINAL, dtype=object)

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]

    def class_counts(self):
        return (int(np.sum(self.labels == 0)), int(np.sum(self.labels == 1)))

    def of_class(self, label):
        return self.features[self.labels == label]

    def subset(self, idx):
        idx = np.asarray(idx)
        return replace(
            self,
            features=self.features[idx].copy(),
            labels=self.labels[idx].copy(),
            provenance=self.provenance[idx].copy(),
            meta=dict(self.meta),
        )


def load_csv(path, label_column="Class", feature_columns=None):
    """Read a header-ed CSV into a LabeledDataset.

    `feature_columns` may be None (all non-label columns), a list of column
    names, or an int k meaning the first k non-label columns (the
    minimum-input-indicators convention). An optional "provenance" column
    is carried as row provenance, never as a feature. Parse failures report
    the offending row and column (1-based, header = row 1).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file, no header row") from None
        header = [h.strip().strip('"') for h in header]
        if label_column not in header:
            raise DatasetError(
                f"{path}: label column {label_column!r} not in header")
        label_idx = header.index(label_column)
        prov_idx = header.index("provenance") if "provenance" in header else None
        feature_names = [h for i, h in enumerate(header)
                         if i != label_idx and i != prov_idx]
        if feature_columns is None:
            chosen = feature_names
        elif isinstance(feature_columns, int):
            chosen = feature_names[:feature_columns]
        else:
            missing = [c for c in feature_columns if c not in header]
            if missing:
                raise DatasetError(f"{path}: unknown columns {missing}")
            chosen = list(feature_columns)
        col_idx = [header.index(c) for c in chosen]

        rows, labels, provenance = [], [], []
        for r, row in enumerate(reader, start=2):
            vals = []
            for c in col_idx:
                try:
                    vals.append(float(row[c].strip().strip('"')))
                except (ValueError, IndexError):
                    raise DatasetError(
                        f"{path}: non-numeric cell at row {r}, column {c + 1}"
                    ) from None
            try:
                lab = float(row[label_idx].strip().strip('"'))
            except (ValueError, IndexError):
                raise DatasetError(
                    f"{path}: bad label at row {r}, column {label_idx + 1}"
                ) from None
            if lab not in (0.0, 1.0):
                raise DatasetError(
                    f"{path}: non-binary label {lab!r} at row {r}, "
                    f"column {label_idx + 1}")
            rows.append(vals)
            labels.append(int(lab))
            if prov_idx is not None:
                provenance.append(row[prov_idx].strip())
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    return LabeledDataset(
        features=np.array(rows), labels=np.array(labels), columns=chosen,
        provenance=np.array(provenance, dtype=object) if provenance else None)


def save_csv(data: LabeledDataset, path, label_column="Class",
             with_provenance=False):
    """Write a dataset back to CSV (features, label, optional provenance)."""
    cols = data.columns or [f"x{i + 1}" for i in range(data.dim)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = list(cols) + [label_column]
        if with_provenance:
            header.append("provenance")
        writer.writerow(header)
        for i in range(data.n):
            row = [repr(float(v)) for v in data.features[i]] + [int(data.labels[i])]
            if with_provenance:
                row.append(data.provenance[i])
            writer.writerow(row)


def _split_counts_for(n_class, train_fraction):
    # round() is banker's rounding; test count takes the complement
    test = int(round(n_class * (1.0 - train_fraction)))
    test = min(max(test, 1), n_class - 1)
    return n_class - test, test


def stratified_split(data: LabeledDataset, train_fraction=None, seed=0,
                     train_counts=None, test_counts=None):
    """Split preserving per-class proportions; deterministic under `seed`.

    Either give `train_fraction` in (0,1), or explicit per-class counts
    (tuples ordered (class0, class1)). When both train and test counts are
    given, leftover rows are discarded, which lets published split tables
    be matched exactly even when their totals are inconsistent.
    """
    n0, n1 = data.class_counts()
    if n0 < 2 or n1 < 2:
        raise DatasetError("stratified split needs >= 2 rows of each class")
    if train_fraction is not None and not (0.0 < train_fraction < 1.0):
        raise DatasetError("train fraction must be in (0, 1)")
    rng = RngStream(seed)
    train_idx, test_idx = [], []
    for label, n_class in ((0, n0), (1, n1)):
        idx = np.flatnonzero(data.labels == label)
        idx = idx[rng.permutation(n_class)]
        if train_counts is not None or test_counts is not None:
            tr = None if train_counts is None else int(train_counts[label])
            te = None if test_counts is None else int(test_counts[label])
            if tr is None:
                tr = n_class - te
            if te is None:
                te = n_class - tr
            if tr + te > n_class:
                raise DatasetError(
                    f"requested {tr}+{te} rows of class {label}, "
                    f"only {n_class} available")
        else:
            tr, te = _split_counts_for(n_class, train_fraction)
        train_idx.append(idx[:tr])
        test_idx.append(idx[tr:tr + te])
    train = data.subset(np.sort(np.concatenate(train_idx)))
    test = data.subset(np.sort(np.concatenate(test_idx)))
    return train, test


def flip_labels(data: LabeledDataset, n_per_class, seed=0):
    """Flip exactly the requested number of labels in each class, chosen
    without replacement; the flipped row indices are recorded in
    meta["flipped_indices"]."""
    n_flip0, n_flip1 = int(n_per_class[0]), int(n_per_class[1])
    n0, n1 = data.class_counts()
    if n_flip0 > n0 or n_flip1 > n1:
        raise DatasetError(
            f"cannot flip ({n_flip0}, {n_flip1}) labels from classes "
            f"of size ({n0}, {n1})")
    rng = RngStream(seed)
    labels = data.labels.copy()
    flipped = []
    for label, count in ((0, n_flip0), (1, n_flip1)):
        idx = np.flatnonzero(data.labels == label)
        take = idx[rng.choice(len(idx), size=count, replace=False)]
        labels[take] = 1 - label
        flipped.extend(int(i) for i in take)
    out = replace(data, labels=labels, meta=dict(data.meta))
    out.meta["flipped_indices"] = sorted(flipped)
    return out


def standardize(data: LabeledDataset):
    """Z-score the features (population std), returning the scaled dataset
    with its ZScoreParams attached. Constant columns pass through."""
    scaled, params = zscore(data.features)
    out = replace(data, features=scaled, scaler=params, meta=dict(data.meta))
    return out, params


def apply_scaler(data: LabeledDataset, params: ZScoreParams):
    return replace(data, features=params.transform(data.features),
                   scaler=params, meta=dict(data.meta))
