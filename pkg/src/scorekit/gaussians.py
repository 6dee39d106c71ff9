"""Analytic Gaussian machinery: densities, score fields, moment estimation,
two-class simulators, and the closed-form boundary analytics for a pair of
Gaussian classes (quadratic boundary equation, 1D roots, misclassification
probability, density-ratio constant).

The boundary equation between classes 0 and 1 is

    be(x) = log p1(x) - log p0(x)
          = -0.5 x'(S1i - S0i)x + (m1'S1i - m0'S0i)x
            + 0.5 log(|S0|/|S1|) + 0.5 (m0'S0i m0 - m1'S1i m1)

with Sji the inverse covariances; its zero set is the QDA boundary, which
degenerates to the LDA line for shared covariance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset
from .numerics import DecompositionError, RngStream, cholesky, normal_cdf, spd_inverse_det


class GaussianModel:
    """Multivariate normal with cached Cholesky factor, inverse and
    determinant. Immutable after construction."""

    def __init__(self, mean, cov):
        self.mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
        self.cov = np.atleast_2d(np.asarray(cov, dtype=np.float64))
        if self.cov.shape != (self.dim, self.dim):
            raise ValueError(
                f"covariance shape {self.cov.shape} does not match "
                f"mean dim {self.dim}")
        self.chol = cholesky(self.cov)
        self.inv, self.det = spd_inverse_det(self.cov)
        self.log_det = 2.0 * float(np.sum(np.log(np.diag(self.chol))))

    @property
    def dim(self):
        return self.mean.shape[0]

    @property
    def log_norm(self):
        """log Z = (d/2) log(2 pi) + 0.5 log|S|."""
        return 0.5 * self.dim * math.log(2.0 * math.pi) + 0.5 * self.log_det

    def log_pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        diff = x - self.mean
        quad = np.einsum("...i,ij,...j->...", diff, self.inv, diff)
        out = -0.5 * quad - self.log_norm
        return float(out) if out.ndim == 0 else out

    def pdf(self, x):
        out = np.exp(self.log_pdf(x))
        return float(out) if np.ndim(out) == 0 else out

    def score(self, x):
        """s(x) = Sigma^{-1} (mu - x); zero exactly at the mean."""
        x = np.asarray(x, dtype=np.float64)
        return (self.mean - x) @ self.inv.T

    def sample(self, n, rng: RngStream):
        z = rng.standard_normal((int(n), self.dim))
        return self.mean + z @ self.chol.T

    def __repr__(self):
        return f"GaussianModel(mean={self.mean!r}, cov={self.cov!r})"


def score_field(model: GaussianModel):
    return model.score


def estimate_moments(samples, jitter=1e-9) -> GaussianModel:
    """Sample mean and population (1/n) covariance as a GaussianModel.

    A numerically singular covariance gets jitter*I added so the cached
    factorization always exists (a repeated single point yields jitter*I).
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need an (n, d) sample array with n >= 2")
    mean = x.mean(axis=0)
    diff = x - mean
    cov = diff.T @ diff / x.shape[0]
    cov = 0.5 * (cov + cov.T)
    try:
        return GaussianModel(mean, cov)
    except DecompositionError:
        return GaussianModel(mean, cov + jitter * np.eye(x.shape[1]))


@dataclass
class DgpSpec:
    """Two-class Gaussian (or mixture) data generating process.

    Each class is a list of (weight, GaussianModel) components; a bare
    GaussianModel is promoted to a single-component mixture. Label noise
    flips exactly round(rate * n) labels, per class or over the pooled
    dataset according to noise_scope.
    """

    class0: object
    class1: object
    n0: int
    n1: int
    noise_rate: float = 0.0
    noise_scope: str = "per-class"
    seed: int = 0

    def __post_init__(self):
        if self.n0 < 0 or self.n1 < 0:
            raise ValueError("class counts must be nonnegative")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ValueError("noise rate must be in [0, 1]")
        if self.noise_scope not in ("per-class", "overall"):
            raise ValueError(f"unknown noise scope: {self.noise_scope!r}")

    def components(self, label):
        spec = self.class0 if label == 0 else self.class1
        if isinstance(spec, GaussianModel):
            return [(1.0, spec)]
        return list(spec)


def _sample_mixture(components, n, rng: RngStream):
    weights = np.array([w for w, _ in components], dtype=np.float64)
    weights = weights / weights.sum()
    counts = rng.generator.multinomial(n, weights)
    parts = [m.sample(c, rng) for (_, m), c in zip(components, counts) if c]
    if not parts:
        d = components[0][1].dim
        return np.empty((0, d))
    return np.concatenate(parts, axis=0)


def simulate(spec: DgpSpec) -> LabeledDataset:
    """Draw the two classes, concatenate, and apply label noise.

    Deterministic under spec.seed; class counts are exact before noise.
    """
    root = RngStream(spec.seed)
    rng0, rng1, noise_rng = root.split(3)
    x0 = _sample_mixture(spec.components(0), spec.n0, rng0)
    x1 = _sample_mixture(spec.components(1), spec.n1, rng1)
    features = np.concatenate([x0, x1], axis=0)
    labels = np.concatenate([np.zeros(spec.n0, dtype=np.int64),
                             np.ones(spec.n1, dtype=np.int64)])
    flipped = []
    original = labels.copy()
    if spec.noise_rate > 0.0 and labels.size:
        if spec.noise_scope == "per-class":
            for label, n in ((0, spec.n0), (1, spec.n1)):
                k = int(round(spec.noise_rate * n))
                if k:
                    idx = np.flatnonzero(original == label)
                    take = idx[noise_rng.choice(len(idx), size=k, replace=False)]
                    labels[take] = 1 - label
                    flipped.extend(int(i) for i in take)
        else:
            k = int(round(spec.noise_rate * labels.size))
            if k:
                take = noise_rng.choice(labels.size, size=k, replace=False)
                labels[take] = 1 - labels[take]
                flipped.extend(int(i) for i in take)
    out = LabeledDataset(features=features, labels=labels)
    out.meta["flipped_indices"] = sorted(flipped)
    return out


def qda_boundary(m0: GaussianModel, m1: GaussianModel, x):
    """Boundary equation value be(x) = log p1(x) - log p0(x) and its
    gradient. Accepts a single point or an (n, d) batch.

    The value includes the log-determinant and quadratic-mean constants,
    so be(x) matches the direct log-pdf ratio identically and flips sign
    when the two models are swapped.
    """
    x = np.asarray(x, dtype=np.float64)
    dS = m1.inv - m0.inv
    lin = m1.inv @ m1.mean - m0.inv @ m0.mean
    const = (0.5 * (m0.log_det - m1.log_det)
             + 0.5 * (m0.mean @ m0.inv @ m0.mean - m1.mean @ m1.inv @ m1.mean))
    quad = np.einsum("...i,ij,...j->...", x, dS, x)
    be = -0.5 * quad + x @ lin + const
    grad = -x @ dS.T + lin
    if x.ndim == 1:
        return float(be), grad
    return be, grad


def boundary_roots_1d(m0: GaussianModel, m1: GaussianModel):
    """Real roots of the 1D boundary equation, solved exactly.

    For equal variances the equation is linear with the midpoint root
    (mu0 + mu1)/2; otherwise the full quadratic (including the variance
    log-ratio term) is solved, so every returned root satisfies
    be(root) = 0 to round-off. Returns a sorted array (possibly empty).
    """
    if m0.dim != 1 or m1.dim != 1:
        raise ValueError("boundary_roots_1d is defined for d=1 only")
    mu0, mu1 = float(m0.mean[0]), float(m1.mean[0])
    v0, v1 = float(m0.cov[0, 0]), float(m1.cov[0, 0])
    a = -0.5 * (1.0 / v1 - 1.0 / v0)
    b = mu1 / v1 - mu0 / v0
    c = 0.5 * math.log(v0 / v1) + 0.5 * (mu0 ** 2 / v0 - mu1 ** 2 / v1)
    if abs(a) < 1e-14:
        if abs(b) < 1e-14:
            return np.array([])  # identical densities: no isolated root
        return np.array([-c / b])
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return np.array([])
    r = math.sqrt(disc)
    return np.sort(np.array([(-b - r) / (2 * a), (-b + r) / (2 * a)]))


def misclass_prob(model: GaussianModel, x_star, n_draws=1_000_000, rng=None):
    """Probability that a sample from `model` lands beyond the boundary
    point, on the far side from the mean.

    d=1 is exact via the normal CDF: 1 - Phi(|x* - mu| / sigma). Higher
    dimensions are estimated by Monte Carlo through the Cholesky factor,
    counting draws with any coordinate beyond the boundary coordinate
    (away from the mean).
    """
    x_star = np.atleast_1d(np.asarray(x_star, dtype=np.float64))
    if model.dim == 1:
        z = abs(x_star[0] - model.mean[0]) / math.sqrt(model.cov[0, 0])
        return 1.0 - normal_cdf(z)
    rng = rng or RngStream(0)
    draws = model.sample(n_draws, rng)
    signs = np.where(x_star >= model.mean, 1.0, -1.0)
    beyond = ((draws - x_star) * signs > 0.0).any(axis=1)
    return float(np.mean(beyond))


def log_ratio_constant(m0: GaussianModel, m1: GaussianModel) -> float:
    """log C = 0.5 log(|S0|/|S1|) + 0.5 (m0'S0i m0 - m1'S1i m1).

    The constant completing the score-integral density ratio
    R(x) = C exp(int (s1 - s0)); swapping the models negates it.
    """
    return float(0.5 * (m0.log_det - m1.log_det)
                 + 0.5 * (m0.mean @ m0.inv @ m0.mean
                          - m1.mean @ m1.inv @ m1.mean))
