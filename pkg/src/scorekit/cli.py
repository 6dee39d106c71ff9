"""Command-line surface. Each subcommand is a thin wrapper over the
library; see README for the file formats.

  simulate     draw a named DGP to CSV
  train-score  fit a score network to one class of a CSV
  sample       Langevin-sample a trained score model
  density      reconstruct a 1-d density table from a model or moments
  boundary     Newton-Raphson decision boundary (Gaussian-assumption path)
  classify     fit a backend on train CSV, predict a test CSV
  augment      oversample the minority class of a CSV
  eval         metrics from a predictions CSV
  run          execute an experiment spec file (or rerun a manifest)
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import augment as augment_mod
from . import benchmarks, classify, density, experiment, score_net
from .data import load_csv, save_csv
from .gaussians import estimate_moments, simulate
from .langevin import LangevinConfig, generate
from .metrics import confusion, metrics
from .numerics import RngStream


def _add_csv_args(p):
    p.add_argument("--data", required=True, help="input CSV path")
    p.add_argument("--label-column", default="Class")
    p.add_argument("--columns", type=int, default=None,
                   help="use only the first K feature columns")


def _load(args):
    return load_csv(args.data, args.label_column, args.columns)


def cmd_simulate(args):
    kwargs = {}
    if args.n0 is not None:
        kwargs["n0"] = args.n0
    if args.n1 is not None:
        kwargs["n1"] = args.n1
    dgp = benchmarks.make_dgp(args.dgp, seed=args.seed,
                              noise_rate=args.noise_rate, **kwargs)
    data = simulate(dgp)
    save_csv(data, args.out)
    print(f"wrote {data.n} rows ({data.class_counts()}) to {args.out}")


def cmd_train_score(args):
    data = _load(args)
    x = data.of_class(args.label) if args.label is not None else data.features
    sizes = [int(v) for v in args.layers.split(",")] if args.layers else \
        [x.shape[1], 128, 128, x.shape[1]]
    cfg = score_net.TrainConfig(
        layer_sizes=tuple(sizes), learning_rate=args.lr, epochs=args.epochs,
        batch_size=args.batch_size, objective=args.objective,
        n_slices=args.n_slices, seed=args.seed)
    result = score_net.train(x, cfg)
    score_net.save_net(result.net, args.out)
    print(f"trained on {len(x)} rows; final loss {result.losses[-1]:.6f}; "
          f"model -> {args.out}")


def cmd_sample(args):
    net = score_net.load_net(args.model)
    seeds_data = _load(args)
    seeds = (seeds_data.of_class(args.label)
             if args.label is not None else seeds_data.features)
    cfg = LangevinConfig(
        step_size=args.step_size, chain_length=args.chain_length,
        discard_rate=args.discard_rate, target_count=args.count,
        seed=args.seed)
    samples = generate(score_net.as_field(net), seeds, cfg)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i + 1}" for i in range(samples.shape[1])])
        for row in samples:
            w.writerow([repr(float(v)) for v in row])
    print(f"wrote {len(samples)} samples to {args.out}")


def cmd_density(args):
    data = _load(args)
    x = data.of_class(args.label) if args.label is not None else data.features
    if x.shape[1] != 1:
        sys.exit("density tables are 1-d; select 1-d data")
    anchor = density.initial_density(x, method=args.anchor,
                                     radius=args.radius)
    if args.model:
        field = score_net.as_field(score_net.load_net(args.model))
    else:
        field = estimate_moments(x).score
    grid = density.grid_1d(args.lo, args.hi, args.n)
    recon = density.construct_density(field, anchor, grid)
    recon.save_table(args.out)
    print(f"anchor p({anchor[0][0]:.4f}) = {anchor[1]:.4f}; "
          f"density table -> {args.out}")


def cmd_boundary(args):
    data = _load(args)
    x0, x1 = data.of_class(0), data.of_class(1)
    if args.model0 and args.model1:
        d0 = classify.QuadraticClassDensity.from_linear_net(
            score_net.load_net(args.model0), x0)
        d1 = classify.QuadraticClassDensity.from_linear_net(
            score_net.load_net(args.model1), x1)
        gamma_fn, gamma_grad = classify.quadratic_boundary_gamma(d0, d1)
    else:
        from .gaussians import qda_boundary
        m0, m1 = estimate_moments(x0), estimate_moments(x1)
        gamma_fn = lambda x: qda_boundary(m0, m1, x)[0]   # noqa: E731
        gamma_grad = lambda x: qda_boundary(m0, m1, x)[1]  # noqa: E731
    rng = RngStream(args.seed)
    lo, hi = data.features.min(axis=0), data.features.max(axis=0)
    points = []
    for _ in range(args.inits):
        start = lo + rng.uniform(size=data.dim) * (hi - lo)
        try:
            points.append(classify.newton_raphson_boundary(
                gamma_fn, gamma_grad, start, tol=args.tol))
        except classify.BoundarySolveError:
            continue
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i + 1}" for i in range(data.dim)] + ["residual"])
        for p in points:
            w.writerow([repr(v) for v in p] + [repr(float(gamma_fn(p)))])
    print(f"{len(points)}/{args.inits} initializations converged -> {args.out}")


def cmd_classify(args):
    train = load_csv(args.train, args.label_column, args.columns)
    test = load_csv(args.test, args.label_column, args.columns)
    clf_cfg = {"backend": args.backend, "k": args.k,
               "learning_rate": args.lr, "epochs": args.epochs,
               "seed": args.seed}
    if args.layers:
        clf_cfg["layer_sizes"] = [int(v) for v in args.layers.split(",")]
    y_pred, confidence = experiment._fit_predict(clf_cfg, train,
                                                 test.features)
    experiment._write_predictions(args.out, test.features, test.labels,
                                  y_pred, confidence)
    report = metrics(confusion(test.labels, y_pred))
    print(json.dumps(report.as_dict(), indent=2))


def cmd_augment(args):
    data = _load(args)
    train_cfg = langevin_cfg = None
    if args.method == "score":
        d = data.dim
        sizes = ([int(v) for v in args.layers.split(",")]
                 if args.layers else [d, 128, 128, d])
        train_cfg = score_net.TrainConfig(
            layer_sizes=tuple(sizes), learning_rate=args.lr,
            epochs=args.epochs, batch_size=args.batch_size, seed=args.seed)
        langevin_cfg = LangevinConfig(
            step_size=args.step_size, chain_length=args.chain_length,
            discard_rate=args.discard_rate, seed=args.seed + 1)
    plan = augment_mod.AugmentPlan(
        method=args.method, n_new=args.n_new, k=args.k, seed=args.seed,
        train_config=train_cfg, langevin_config=langevin_cfg)
    out = augment_mod.augment_dataset(data, plan)
    save_csv(out, args.out, with_provenance=True)
    print(f"augmented {data.n} -> {out.n} rows ({args.method}) -> {args.out}")


def cmd_eval(args):
    with open(args.predictions, newline="") as fh:
        reader = csv.DictReader(fh)
        y_true, y_pred = [], []
        for row in reader:
            y_true.append(int(float(row["label"])))
            y_pred.append(int(float(row["predicted"])))
    cm = confusion(np.array(y_true), np.array(y_pred))
    report = metrics(cm)
    out = report.as_dict()
    out["confusion"] = {"tn": cm.tn, "fp": cm.fp, "fn": cm.fn, "tp": cm.tp}
    print(json.dumps(out, indent=2))


def cmd_run(args):
    if args.from_manifest:
        result = experiment.rerun_from_manifest(args.from_manifest, args.out)
    else:
        spec = experiment.parse_spec_file(args.spec)
        result = experiment.run_experiment(spec, args.out)
    print(json.dumps(result["metrics"], indent=2, sort_keys=True))
    print(f"manifest: {result['manifest']}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="scorekit",
        description="score-based generative modelling toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a named DGP to CSV")
    p.add_argument("--dgp", default="two-2d-gaussians",
                   choices=sorted(benchmarks.NAMED_DGPS))
    p.add_argument("--n0", type=int, default=None)
    p.add_argument("--n1", type=int, default=None)
    p.add_argument("--noise-rate", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("train-score", help="fit a score network")
    _add_csv_args(p)
    p.add_argument("--label", type=int, default=None,
                   help="train on this class only")
    p.add_argument("--layers", default=None, help="comma list, e.g. 2,64,2")
    p.add_argument("--objective", default="sm", choices=["sm", "ssm"])
    p.add_argument("--n-slices", type=int, default=1)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train_score)

    p = sub.add_parser("sample", help="Langevin-sample a score model")
    _add_csv_args(p)
    p.add_argument("--label", type=int, default=None)
    p.add_argument("--model", required=True)
    p.add_argument("--step-size", type=float, required=True)
    p.add_argument("--chain-length", type=int, required=True)
    p.add_argument("--discard-rate", type=float, default=0.0)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("density", help="reconstruct a 1-d density table")
    _add_csv_args(p)
    p.add_argument("--label", type=int, default=None)
    p.add_argument("--model", default=None,
                   help="score model file; omit for analytic moments")
    p.add_argument("--anchor", default="gaussian",
                   choices=["gaussian", "count"])
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--n", type=int, default=241)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_density)

    p = sub.add_parser("boundary", help="Newton-Raphson decision boundary")
    _add_csv_args(p)
    p.add_argument("--model0", default=None, help="linear score model")
    p.add_argument("--model1", default=None)
    p.add_argument("--inits", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_boundary)

    p = sub.add_parser("classify", help="fit and predict")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--label-column", default="Class")
    p.add_argument("--columns", type=int, default=None)
    p.add_argument("--backend", default="knn",
                   choices=["knn", "logistic", "mlp"])
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--layers", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("augment", help="oversample the minority class")
    _add_csv_args(p)
    p.add_argument("--method", required=True,
                   choices=["smote", "adasyn", "score"])
    p.add_argument("--n-new", type=int, required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--layers", default=None)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--step-size", type=float, default=0.01)
    p.add_argument("--chain-length", type=int, default=10)
    p.add_argument("--discard-rate", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_augment)

    p = sub.add_parser("eval", help="metrics from a predictions CSV")
    p.add_argument("--predictions", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("run", help="run an experiment spec (or manifest)")
    p.add_argument("--spec", default=None, help="INI spec file")
    p.add_argument("--from-manifest", default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=cmd_run)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run" and not (args.spec or args.from_manifest):
        parser.error("run needs --spec or --from-manifest")
    args.fn(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
