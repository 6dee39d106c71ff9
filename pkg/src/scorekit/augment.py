"""Minority oversampling: SMOTE, ADASYN, and score-based generation.

SMOTE and ADASYN interpolate between near minority neighbors, so their
outputs stay inside the minority convex hull; score-based generation trains
a score network on the minority class and samples it with Langevin
dynamics, which both interpolates and extrapolates. Neighbor searches are
Euclidean and assume comparably scaled (e.g. standardized) features.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from . import langevin, score_net
from .data import PROV_SYNTHETIC, LabeledDataset
from .numerics import RngStream

logger = logging.getLogger(__name__)


class AugmentError(ValueError):
    pass


@dataclass
class AugmentPlan:
    """What to synthesize: method "smote" | "adasyn" | "score", how many
    rows, and the per-method settings (k for the interpolators; train_config
    and langevin_config for score generation)."""

    method: str
    n_new: int
    k: int = 5
    seed: int = 0
    train_config: score_net.TrainConfig | None = None
    langevin_config: langevin.LangevinConfig | None = None

    def __post_init__(self):
        if self.method not in ("smote", "adasyn", "score"):
            raise AugmentError(f"unknown method: {self.method!r}")
        if self.n_new < 0:
            raise AugmentError("n_new must be nonnegative")
        if self.k < 1:
            raise AugmentError("k must be >= 1")
        if self.method == "score" and (self.train_config is None
                                       or self.langevin_config is None):
            raise AugmentError("score method needs train and langevin configs")


def _nearest_neighbors(points, query, k):
    """Indices into `points` of the k nearest to each query row, excluding
    exact self-matches by index when the arrays are the same object."""
    d2 = ((query[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
    if points is query:
        np.fill_diagonal(d2, np.inf)
    return np.argsort(d2, axis=1, kind="stable")[:, :k]


def smote(minority, k, n_new, rng: RngStream):
    """Interpolated synthetic rows: x_i + u * (x_nn - x_i) with u ~ U(0,1)
    and x_nn one of x_i's k nearest minority neighbors. Every output lies
    on a segment between two minority points."""
    x = np.atleast_2d(np.asarray(minority, dtype=np.float64))
    n = x.shape[0]
    if n < 2:
        raise AugmentError("smote needs at least 2 minority samples")
    if k > n - 1:
        raise AugmentError(f"k={k} exceeds the {n - 1} available neighbors")
    if n_new == 0:
        return np.empty((0, x.shape[1]))
    nn = _nearest_neighbors(x, x, k)
    base = rng.integers(0, n, size=n_new)
    pick = rng.integers(0, k, size=n_new)
    u = rng.uniform(0.0, 1.0, size=n_new)
    partners = x[nn[base, pick]]
    return x[base] + u[:, None] * (partners - x[base])


def _largest_remainder(quotas, total):
    """Integer allocation summing exactly to `total`, proportional to
    quotas, deterministic (ties by lower index)."""
    quotas = np.asarray(quotas, dtype=np.float64)
    if quotas.sum() == 0:
        quotas = np.ones_like(quotas)
    shares = total * quotas / quotas.sum()
    alloc = np.floor(shares).astype(np.int64)
    remainder = total - int(alloc.sum())
    if remainder > 0:
        frac = shares - alloc
        order = np.lexsort((np.arange(len(frac)), -frac))
        alloc[order[:remainder]] += 1
    return alloc


def adasyn(minority, majority, k, n_new, rng: RngStream):
    """SMOTE-style interpolation with per-point allocation proportional to
    learning difficulty: the majority fraction among each minority point's
    k nearest neighbors in the pooled data. Allocations use largest-
    remainder rounding and sum to exactly n_new; all-zero difficulty falls
    back to uniform allocation with a warning."""
    x = np.atleast_2d(np.asarray(minority, dtype=np.float64))
    maj = np.atleast_2d(np.asarray(majority, dtype=np.float64))
    n = x.shape[0]
    if n < 2:
        raise AugmentError("adasyn needs at least 2 minority samples")
    if maj.shape[0] == 0:
        raise AugmentError("adasyn needs majority samples for difficulty")
    if k > n - 1:
        raise AugmentError(f"k={k} exceeds the {n - 1} available neighbors")
    if n_new == 0:
        return np.empty((0, x.shape[1]))

    pool = np.vstack([x, maj])
    d2 = ((x[:, None, :] - pool[None, :, :]) ** 2).sum(axis=2)
    d2[np.arange(n), np.arange(n)] = np.inf  # self
    nn_pool = np.argsort(d2, axis=1, kind="stable")[:, :k]
    difficulty = (nn_pool >= n).mean(axis=1)
    if difficulty.sum() == 0.0:
        logger.warning("adasyn difficulties are all zero; "
                       "falling back to uniform allocation")
    alloc = _largest_remainder(difficulty, n_new)

    nn_min = _nearest_neighbors(x, x, k)
    out = np.empty((n_new, x.shape[1]))
    row = 0
    for i in range(n):
        for _ in range(int(alloc[i])):
            partner = x[nn_min[i, rng.integers(0, k)]]
            u = rng.uniform(0.0, 1.0)
            out[row] = x[i] + u * (partner - x[i])
            row += 1
    return out


def fit_score_generator(minority, plan: AugmentPlan):
    """Train the minority-class score network named by a score plan."""
    x = np.atleast_2d(np.asarray(minority, dtype=np.float64))
    if x.shape[0] < 2:
        raise AugmentError("score oversampling needs >= 2 minority samples")
    return score_net.train(x, plan.train_config).net


def score_oversample(minority, plan: AugmentPlan, net=None):
    """Train a score network on the minority class alone (unless a trained
    one is supplied) and Langevin-sample it for plan.n_new rows. Unlike the
    interpolators the outputs are not hull-bounded; chains both cluster
    around and walk beyond the existing points."""
    x = np.atleast_2d(np.asarray(minority, dtype=np.float64))
    if net is None:
        net = fit_score_generator(x, plan)
    cfg = replace(plan.langevin_config, target_count=int(plan.n_new))
    return langevin.generate(score_net.as_field(net), x, cfg)


def oversample(minority, plan: AugmentPlan, majority=None, net=None):
    """Dispatch on plan.method; returns (n_new, d) synthetic rows."""
    rng = RngStream(plan.seed)
    if plan.method == "smote":
        return smote(minority, plan.k, plan.n_new, rng)
    if plan.method == "adasyn":
        if majority is None:
            raise AugmentError("adasyn needs the majority samples")
        return adasyn(minority, majority, plan.k, plan.n_new, rng)
    return score_oversample(minority, plan, net=net)


def augment_dataset(data: LabeledDataset, plan: AugmentPlan,
                    minority_label=None, net=None) -> LabeledDataset:
    """Append synthetic minority rows to a dataset, marked with synthetic
    provenance so they can never leak into evaluation."""
    counts = data.class_counts()
    if minority_label is None:
        minority_label = int(counts[1] <= counts[0])
    minority = data.of_class(minority_label)
    majority = data.of_class(1 - minority_label)
    new_rows = oversample(minority, plan, majority=majority, net=net)
    features = np.vstack([data.features, new_rows])
    labels = np.concatenate([
        data.labels,
        np.full(len(new_rows), minority_label, dtype=np.int64)])
    provenance = np.concatenate([
        data.provenance,
        np.full(len(new_rows), PROV_SYNTHETIC, dtype=object)])
    return replace(data, features=features, labels=labels,
                   provenance=provenance, meta=dict(data.meta))
