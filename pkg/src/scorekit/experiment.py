"""Experiment orchestration: reproducible classification and density-
reconstruction pipelines with machine-readable manifests.

A spec is a plain nested dict (schema below, also expressible as an INI
file with sections; see parse_spec_file). Running a spec executes
    load/simulate -> split -> flip -> standardize -> augment -> fit -> eval
for kind "classify", or
    simulate -> per-class score fit -> reconstruct -> JSD
for kind "density", writing every artifact plus a manifest that embeds the
fully resolved spec, library versions and sha256 hashes of the outputs.
Rerunning from the manifest reproduces all metric values bit-identically.

Spec schema (defaults in parentheses):

  name: str               experiment label, used in file names
  kind: "classify" | "density"
  seed: int (0)           master seed; per-stage seeds default from it
  data:
    source: "simulate" | "csv"
    simulate: dgp (named; see benchmarks.NAMED_DGPS), n0, n1, noise_rate,
              seed
    csv: path, label_column ("Class"), feature_columns (None | int | list)
  split:  train_fraction (0.75) | train_counts/test_counts, seed
  flip:   n_class0 (0), n_class1 (0), seed
  standardize: bool (false)
  augment: null | method ("smote"|"adasyn"|"score"), n_new, k (5), seed,
           train {layer_sizes, learning_rate, epochs, batch_size,
           objective, seed}, langevin {step_size, chain_length,
           discard_rate, seed}
  classifier: backend "knn" {k} | "logistic" {learning_rate, epochs}
              | "mlp" {layer_sizes, learning_rate, epochs, batch_size, seed}
  score (density kind): mode "analytic" | "learned", train settings
  grid (density kind): lo, hi, n
  anchor (density kind): method "gaussian" | "count", radius
"""

from __future__ import annotations

import configparser
import copy
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, augment, benchmarks, classify, density, score_net
from .data import (LabeledDataset, flip_labels, load_csv, save_csv,
                   standardize, stratified_split)
from .gaussians import simulate
from .metrics import confusion, jsd, metrics


class ExperimentStageError(RuntimeError):
    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ExperimentStageError:
        raise
    except Exception as exc:
        raise ExperimentStageError(name, exc) from exc


def resolve_spec(spec: dict) -> dict:
    """Fill defaults (including derived per-stage seeds) so the manifest
    records every value the run actually used."""
    s = copy.deepcopy(spec)
    if "name" not in s or "kind" not in s:
        raise ValueError("spec needs 'name' and 'kind'")
    if s["kind"] not in ("classify", "density"):
        raise ValueError(f"unknown kind {s['kind']!r}")
    master = int(s.setdefault("seed", 0))
    data = s.setdefault("data", {"source": "simulate"})
    if data.get("source", "simulate") == "simulate":
        data.setdefault("dgp", "two-2d-gaussians")
        data.setdefault("seed", master)
        data.setdefault("noise_rate", 0.0)
    else:
        data.setdefault("label_column", "Class")
        data.setdefault("feature_columns", None)
    if s["kind"] == "classify":
        split = s.setdefault("split", {})
        if "train_counts" not in split and "test_counts" not in split:
            split.setdefault("train_fraction", 0.75)
        split.setdefault("seed", master + 1)
        flip = s.setdefault("flip", {})
        flip.setdefault("n_class0", 0)
        flip.setdefault("n_class1", 0)
        flip.setdefault("seed", master + 2)
        s.setdefault("standardize", False)
        aug = s.setdefault("augment", None)
        if aug is not None:
            aug.setdefault("k", 5)
            aug.setdefault("seed", master + 3)
            if aug["method"] == "score":
                aug.setdefault("train", {}).setdefault("seed", master + 4)
                aug.setdefault("langevin", {}).setdefault("seed", master + 5)
        clf = s.setdefault("classifier", {"backend": "knn", "k": 5})
        if clf["backend"] == "mlp":
            clf.setdefault("seed", master + 6)
    else:
        score = s.setdefault("score", {"mode": "analytic"})
        if score.get("mode", "analytic") == "learned":
            score.setdefault("seed", master + 4)
        s.setdefault("grid", {"lo": -6.0, "hi": 6.0, "n": 241})
        s.setdefault("anchor", {"method": "gaussian"})
    return s


def _load_dataset(data_cfg) -> tuple[LabeledDataset, object]:
    if data_cfg.get("source", "simulate") == "csv":
        ds = load_csv(data_cfg["path"], data_cfg["label_column"],
                      data_cfg["feature_columns"])
        return ds, None
    kwargs = {k: data_cfg[k] for k in ("n0", "n1", "noise_rate", "seed")
              if k in data_cfg}
    dgp = benchmarks.make_dgp(data_cfg["dgp"], **kwargs)
    return simulate(dgp), dgp


def _train_cfg(cfg: dict, dim) -> score_net.TrainConfig:
    sizes = cfg.get("layer_sizes") or [dim, 128, 128, dim]
    return score_net.TrainConfig(
        layer_sizes=tuple(int(v) for v in sizes),
        learning_rate=float(cfg.get("learning_rate", 1e-3)),
        epochs=int(cfg.get("epochs", 2000)),
        batch_size=(None if cfg.get("batch_size") in (None, "full")
                    else int(cfg["batch_size"])),
        objective=cfg.get("objective", "sm"),
        n_slices=int(cfg.get("n_slices", 1)),
        slice_distribution=cfg.get("slice_distribution", "gaussian"),
        seed=int(cfg.get("seed", 0)),
    )


def _augment_plan(aug: dict, dim) -> augment.AugmentPlan:
    train_cfg = langevin_cfg = None
    if aug["method"] == "score":
        from .langevin import LangevinConfig
        train_cfg = _train_cfg(aug.get("train", {}), dim)
        lv = aug.get("langevin", {})
        langevin_cfg = LangevinConfig(
            step_size=float(lv.get("step_size", 0.01)),
            chain_length=int(lv.get("chain_length", 10)),
            discard_rate=float(lv.get("discard_rate", 0.2)),
            seed=int(lv.get("seed", 0)),
        )
    return augment.AugmentPlan(
        method=aug["method"], n_new=int(aug["n_new"]), k=int(aug.get("k", 5)),
        seed=int(aug.get("seed", 0)), train_config=train_cfg,
        langevin_config=langevin_cfg)


def _fit_predict(clf_cfg, train, test_features):
    """Fit the configured backend and return (labels, confidence)."""
    backend = clf_cfg["backend"]
    if backend == "knn":
        k = int(clf_cfg.get("k", 5))
        labels = classify.knn_predict(train, test_features, k)
        conf = np.array([
            classify.vote_classify(train, x, classify.FixedK(k)).confidence
            for x in np.atleast_2d(test_features)])
        return labels, conf
    if backend == "logistic":
        model = classify.logistic_fit(
            train, learning_rate=float(clf_cfg.get("learning_rate", 1.0)),
            epochs=int(clf_cfg.get("epochs", 2000)))
        p = model.predict_proba(test_features)
        return model.predict(test_features), np.maximum(p, 1.0 - p)
    if backend == "mlp":
        sizes = clf_cfg.get("layer_sizes") or [train.dim, 32, 16, 1]
        cfg = classify.MLPConfig(
            layer_sizes=tuple(int(v) for v in sizes),
            learning_rate=float(clf_cfg.get("learning_rate", 0.05)),
            epochs=int(clf_cfg.get("epochs", 300)),
            batch_size=(None if clf_cfg.get("batch_size") in (None, "full")
                        else int(clf_cfg["batch_size"])),
            seed=int(clf_cfg.get("seed", 0)))
        model = classify.MLPClassifier(cfg).fit(train)
        p = model.predict_proba(test_features)
        return model.predict(test_features), np.maximum(p, 1.0 - p)
    raise ValueError(f"unknown classifier backend {backend!r}")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _write_predictions(path, features, y_true, y_pred, confidence=None):
    import csv as _csv
    if confidence is None:
        confidence = np.ones(len(y_pred))
    with open(path, "w", newline="") as fh:
        w = _csv.writer(fh)
        d = features.shape[1]
        w.writerow([f"x{i + 1}" for i in range(d)]
                   + ["label", "predicted", "confidence"])
        for row, yt, yp, c in zip(features, y_true, y_pred, confidence):
            w.writerow([repr(float(v)) for v in row]
                       + [int(yt), int(yp), repr(float(c))])


def run_experiment(spec: dict, out_dir) -> dict:
    """Execute a resolved (or resolvable) spec, writing artifacts and the
    manifest into out_dir. Returns the result record (also stored in the
    manifest): metrics, artifact names, and the config echo."""
    spec = resolve_spec(spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if spec["kind"] == "classify":
        result = _run_classify(spec, out)
    else:
        result = _run_density(spec, out)
    manifest = {
        "name": spec["name"],
        "kind": spec["kind"],
        "spec": spec,
        "versions": {
            "scorekit": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
        "metrics": result["metrics"],
        "outputs": {p: _sha256(out / p) for p in result["artifacts"]},
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    result["manifest"] = str(out / "manifest.json")
    return result


def _run_classify(spec, out: Path) -> dict:
    dataset, _ = _stage("load", _load_dataset, spec["data"])
    split_cfg = spec["split"]
    train, test = _stage(
        "split", stratified_split, dataset,
        train_fraction=split_cfg.get("train_fraction"),
        seed=split_cfg["seed"],
        train_counts=split_cfg.get("train_counts"),
        test_counts=split_cfg.get("test_counts"))
    flip_cfg = spec["flip"]
    if flip_cfg["n_class0"] or flip_cfg["n_class1"]:
        train = _stage("flip", flip_labels, train,
                       (flip_cfg["n_class0"], flip_cfg["n_class1"]),
                       seed=flip_cfg["seed"])
    test_features = test.features
    if spec["standardize"]:
        train, scaler = _stage("standardize", standardize, train)
        test_features = scaler.transform(test.features)

    artifacts = []
    if spec["augment"] is not None:
        plan = _augment_plan(spec["augment"], train.dim)
        net = None
        if plan.method == "score":
            counts = train.class_counts()
            minority_label = int(counts[1] <= counts[0])
            net = _stage("augment", augment.fit_score_generator,
                         train.of_class(minority_label), plan)
            score_net.save_net(net, out / "augment_score.model")
            artifacts.append("augment_score.model")
        train = _stage("augment", augment.augment_dataset, train, plan,
                       net=net)
        save_csv(train, out / "augmented_train.csv", with_provenance=True)
        artifacts.append("augmented_train.csv")

    y_pred, confidence = _stage("fit", _fit_predict, spec["classifier"],
                                train, test_features)
    cm = confusion(test.labels, y_pred)
    report = metrics(cm)

    _write_predictions(out / "predictions.csv", test.features, test.labels,
                       y_pred, confidence)
    artifacts.append("predictions.csv")
    result_metrics = dict(report.as_dict())
    wanted = spec.get("metrics")
    if wanted:
        result_metrics = {k: v for k, v in result_metrics.items()
                          if k in wanted}
    result_metrics["confusion"] = {"tn": cm.tn, "fp": cm.fp,
                                   "fn": cm.fn, "tp": cm.tp}
    with open(out / "metrics.json", "w") as fh:
        json.dump(result_metrics, fh, indent=2, sort_keys=True)
    artifacts.append("metrics.json")
    return {"metrics": result_metrics, "artifacts": artifacts}


def _run_density(spec, out: Path) -> dict:
    dataset, dgp = _stage("load", _load_dataset, spec["data"])
    grid_cfg = spec["grid"]
    dim = dataset.dim
    if dim != 1:
        raise ExperimentStageError(
            "grid", ValueError("density experiments are 1-d; use the library "
                               "directly for higher dimensions"))
    grid = density.grid_1d(grid_cfg["lo"], grid_cfg["hi"], grid_cfg["n"])
    score_cfg = spec["score"]
    anchor_cfg = spec["anchor"]
    artifacts = []
    jsd_values = {}
    for label in (0, 1):
        samples = dataset.of_class(label)
        anchor = density.initial_density(
            samples, method=anchor_cfg.get("method", "gaussian"),
            radius=anchor_cfg.get("radius"))
        if score_cfg.get("mode", "analytic") == "analytic":
            from .gaussians import estimate_moments
            field = estimate_moments(samples).score
        else:
            cfg = _train_cfg(score_cfg, dim)
            trained = _stage("train-score", score_net.train, samples, cfg)
            field = score_net.as_field(trained.net)
            score_net.save_net(trained.net, out / f"score_class{label}.model")
            artifacts.append(f"score_class{label}.model")
        recon = _stage("density", density.construct_density, field,
                       anchor, grid)
        table = f"density_class{label}.csv"
        recon.save_table(out / table)
        artifacts.append(table)
        if dgp is not None:
            components = dgp.components(label)
            true_pdf = sum(w * m.pdf(grid) for w, m in components)
            jsd_values[f"jsd_class{label}"] = jsd(recon.densities, true_pdf)
    with open(out / "metrics.json", "w") as fh:
        json.dump(jsd_values, fh, indent=2, sort_keys=True)
    artifacts.append("metrics.json")
    return {"metrics": jsd_values, "artifacts": artifacts}


def rerun_from_manifest(manifest_path, out_dir) -> dict:
    """Re-execute the exact spec recorded in a manifest."""
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    return run_experiment(manifest["spec"], out_dir)


# --- INI spec files ---------------------------------------------------------

_LIST_KEYS = {"layer_sizes", "train_counts", "test_counts"}
_INT_KEYS = {"seed", "n0", "n1", "epochs", "batch_size", "n_new", "k",
             "n_slices", "chain_length", "n", "n_class0", "n_class1",
             "feature_columns"}
_FLOAT_KEYS = {"noise_rate", "train_fraction", "learning_rate", "step_size",
               "discard_rate", "lo", "hi", "radius", "margin"}


def _convert(key, value):
    if key in _LIST_KEYS:
        return [int(v) for v in value.replace(",", " ").split()]
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    if value.lower() in ("true", "false"):
        return value.lower() == "true"
    return value


def parse_spec_file(path) -> dict:
    """Read the sectioned key-value spec format into a spec dict.

    Sections map to the schema keys; dotted sections nest (e.g.
    [augment.train] holds the score-training settings). The [experiment]
    section carries name/kind/seed/standardize.
    """
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise FileNotFoundError(path)
    spec = {}
    for section in cp.sections():
        items = {k: _convert(k, v) for k, v in cp.items(section)}
        if section == "experiment":
            spec.update(items)
        else:
            node = spec
            parts = section.split(".")
            for part in parts[:-1]:
                node = node.setdefault(part, {})
            node[parts[-1]] = items
    return spec
