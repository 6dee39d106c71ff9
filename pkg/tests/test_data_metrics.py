import math

import numpy as np
import pytest

from scorekit.data import (DatasetError, LabeledDataset, apply_scaler,
                           flip_labels, load_csv, save_csv, standardize,
                           stratified_split)
from scorekit.metrics import ConfusionMatrix, confusion, jsd, metrics
from scorekit.numerics import RngStream


def toy_dataset(n0=20, n1=10, seed=0):
    rng = RngStream(seed)
    features = rng.standard_normal((n0 + n1, 3))
    labels = np.array([0] * n0 + [1] * n1)
    return LabeledDataset(features=features, labels=labels)


# --- CSV -----------------------------------------------------------------

def test_csv_roundtrip(tmp_path):
    ds = toy_dataset(3, 2, seed=4)
    path = tmp_path / "toy.csv"
    save_csv(ds, path)
    back = load_csv(path)
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.labels, ds.labels)


def test_csv_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(DatasetError, match="empty"):
        load_csv(path)


def test_csv_missing_label_column(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(DatasetError, match="label column"):
        load_csv(path)


def test_csv_non_numeric_cell_reports_position(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,Class\n1,2,0\n1,oops,1\n")
    with pytest.raises(DatasetError, match="row 3, column 2"):
        load_csv(path)


def test_csv_non_binary_label(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,Class\n1,0\n2,3\n")
    with pytest.raises(DatasetError, match="non-binary"):
        load_csv(path)


def test_csv_first_k_columns(tmp_path):
    path = tmp_path / "wide.csv"
    path.write_text("a,b,c,Class\n1,2,3,0\n4,5,6,1\n")
    ds = load_csv(path, feature_columns=2)
    assert ds.columns == ["a", "b"]
    assert ds.features.shape == (2, 2)


def test_csv_named_columns(tmp_path):
    path = tmp_path / "wide.csv"
    path.write_text("a,b,c,Class\n1,2,3,0\n4,5,6,1\n")
    ds = load_csv(path, feature_columns=["c", "a"])
    assert np.array_equal(ds.features, [[3.0, 1.0], [6.0, 4.0]])


def test_dataset_rejects_non_binary_labels():
    with pytest.raises(DatasetError, match="binary"):
        LabeledDataset(features=np.zeros((2, 1)), labels=np.array([0, 2]))


# --- splits ----------------------------------------------------------------

def test_stratified_split_paper_proportions():
    ds = toy_dataset(2830, 170, seed=1)
    train, test = stratified_split(ds, train_fraction=0.75, seed=3)
    assert train.class_counts() == (2122, 128)
    assert test.class_counts() == (708, 42)


def test_stratified_split_small_balanced():
    ds = toy_dataset(2, 2, seed=2)
    train, test = stratified_split(ds, train_fraction=0.5, seed=1)
    assert train.class_counts() == (1, 1)
    assert test.class_counts() == (1, 1)


def test_stratified_split_deterministic():
    ds = toy_dataset(50, 30, seed=5)
    a_train, a_test = stratified_split(ds, train_fraction=0.6, seed=9)
    b_train, b_test = stratified_split(ds, train_fraction=0.6, seed=9)
    assert np.array_equal(a_train.features, b_train.features)
    assert np.array_equal(a_test.features, b_test.features)


def test_stratified_split_disjoint_exhaustive():
    ds = toy_dataset(40, 20, seed=6)
    train, test = stratified_split(ds, train_fraction=0.7, seed=2)
    assert train.n + test.n == ds.n
    joined = np.vstack([train.features, test.features])
    assert np.array_equal(np.sort(joined, axis=0),
                          np.sort(ds.features, axis=0))


def test_stratified_split_explicit_counts_discard():
    ds = toy_dataset(2830, 170, seed=7)
    train, test = stratified_split(ds, seed=4, train_counts=(2131, 128),
                                   test_counts=(529, 42))
    assert train.class_counts() == (2131, 128)
    assert test.class_counts() == (529, 42)


def test_stratified_split_counts_overflow():
    ds = toy_dataset(10, 10, seed=8)
    with pytest.raises(DatasetError, match="available"):
        stratified_split(ds, seed=0, train_counts=(9, 9), test_counts=(2, 2))


def test_stratified_split_needs_both_classes():
    ds = LabeledDataset(features=np.zeros((5, 1)),
                        labels=np.array([0, 0, 0, 0, 1]))
    with pytest.raises(DatasetError):
        stratified_split(ds, train_fraction=0.5, seed=0)


# --- label flips -------------------------------------------------------------

def test_flip_labels_counts_and_metadata():
    ds = toy_dataset(100, 50, seed=9)
    flipped = flip_labels(ds, (18, 18), seed=11)
    idx = flipped.meta["flipped_indices"]
    assert len(idx) == 36
    changed = np.flatnonzero(ds.labels != flipped.labels)
    assert sorted(changed.tolist()) == idx


def test_flip_labels_zero_identity():
    ds = toy_dataset(10, 10, seed=1)
    flipped = flip_labels(ds, (0, 0), seed=0)
    assert np.array_equal(flipped.labels, ds.labels)


def test_flip_labels_involution():
    ds = toy_dataset(30, 30, seed=2)
    once = flip_labels(ds, (5, 5), seed=3)
    labels = once.labels.copy()
    labels[once.meta["flipped_indices"]] = (
        1 - labels[once.meta["flipped_indices"]])
    assert np.array_equal(labels, ds.labels)


def test_flip_labels_count_exceeds_class():
    ds = toy_dataset(5, 5, seed=3)
    with pytest.raises(DatasetError):
        flip_labels(ds, (6, 0), seed=0)


# --- standardization -----------------------------------------------------------

def test_standardize_and_apply():
    ds = toy_dataset(50, 20, seed=12)
    scaled, params = standardize(ds)
    assert np.max(np.abs(scaled.features.mean(axis=0))) < 1e-9
    other = apply_scaler(ds, params)
    assert np.array_equal(other.features, scaled.features)
    # original untouched
    assert not np.array_equal(ds.features, scaled.features)


# --- metrics -----------------------------------------------------------------

def test_metrics_fraud_table_row():
    report = metrics(ConfusionMatrix(tn=72350, fp=2, fn=56, tp=67))
    assert round(report.recall, 2) == 0.54
    assert round(report.precision, 2) == 0.97
    assert round(report.f1, 2) == 0.70
    assert report.total_mistakes == 58


def test_metrics_synthetic_table_row():
    report = metrics(ConfusionMatrix(tn=630, fp=69, fn=6, tp=36))
    assert round(report.recall, 2) == 0.86


def test_metrics_degenerate_flagged():
    report = metrics(ConfusionMatrix(tn=10, fp=0, fn=0, tp=0))
    assert report.recall == 0.0 and report.precision == 0.0
    assert "recall" in report.degenerate
    assert "precision" in report.degenerate


def test_metrics_match_confusion_from_predictions():
    y_true = np.array([0, 0, 1, 1, 1, 0])
    y_pred = np.array([0, 1, 1, 0, 1, 0])
    cm = confusion(y_true, y_pred)
    assert (cm.tn, cm.fp, cm.fn, cm.tp) == (2, 1, 1, 2)
    assert metrics(cm).accuracy == pytest.approx(4 / 6)


def test_confusion_negative_rejected():
    with pytest.raises(ValueError):
        ConfusionMatrix(tn=-1, fp=0, fn=0, tp=0)


# --- jsd -----------------------------------------------------------------------

def test_jsd_identical():
    p = np.array([0.2, 0.5, 0.3])
    assert jsd(p, p) == 0.0


def test_jsd_disjoint_supports():
    p = np.array([1.0, 0.0])
    q = np.array([0.0, 1.0])
    assert jsd(p, q) == pytest.approx(math.log(2.0))


def test_jsd_symmetric_and_scale_free():
    rng = RngStream(5)
    p = rng.uniform(0, 1, 30)
    q = rng.uniform(0, 1, 30)
    assert jsd(p, q) == pytest.approx(jsd(q, p), abs=1e-15)
    assert jsd(3.7 * p, q) == pytest.approx(jsd(p, q), abs=1e-12)
    assert 0.0 <= jsd(p, q) <= math.log(2.0)


def test_jsd_grid_mismatch():
    with pytest.raises(ValueError, match="grid"):
        jsd(np.ones(3), np.ones(4))
