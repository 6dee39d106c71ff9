"""Decision machinery: Bayes posteriors, soft-margin binary rules,
Newton-Raphson boundary solving, logistic regression with its score and
gradient fields, neighborhood voting, inverse-score-norm contrast, and
anchored score-based generative classification.

Tie conventions: decide_binary keeps the inclusive ">=" of the margin rule
(equal inputs at zero margin give label 1); the counting and contrast
classifiers break exact ties toward label 0.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import score_net
from .data import LabeledDataset
from .density import anchored_log_density, as_field
from .langevin import NORM_FLOOR
from .numerics import RngStream

logger = logging.getLogger(__name__)

LOGISTIC_CAP = 1e3  # coefficient norm bound under perfect separation


class BoundarySolveError(RuntimeError):
    pass


class NonConvergence(BoundarySolveError):
    def __init__(self, iterations, residual):
        super().__init__(
            f"newton-raphson did not converge in {iterations} iterations "
            f"(last residual {residual:.3e})")
        self.residual = residual


class StationaryGradient(BoundarySolveError):
    def __init__(self, x):
        super().__init__(f"gradient vanished at {x}; cannot step")
        self.x = np.asarray(x)


@dataclass
class DecisionConfig:
    """Binary decision rule settings.

    margin is the soft margin gamma0 >= 0; rule is "absolute" (density gap
    p1 - p0 >= gamma0) or "log-ratio" (log(p1/p0) >= gamma0); priors is a
    (p0, p1) pair summing to 1 or the string "empirical".
    """

    margin: float = 0.0
    rule: str = "absolute"
    priors: object = (0.5, 0.5)

    def __post_init__(self):
        if self.margin < 0.0:
            raise ValueError("soft margin must be nonnegative")
        if self.rule not in ("absolute", "log-ratio"):
            raise ValueError(f"unknown rule: {self.rule!r}")
        if not isinstance(self.priors, str):
            p = np.asarray(self.priors, dtype=np.float64)
            if (p <= 0).any() or abs(float(p.sum()) - 1.0) > 1e-12:
                raise ValueError("priors must be positive and sum to 1")


def generative_posterior(densities, priors):
    """Bayes posteriors from per-class densities at a point.

    posterior_j = p(x|y_j) p(y_j) / sum_k p(x|y_k) p(y_k); sums to one.
    All-zero densities leave the posterior undefined and raise.
    """
    dens = np.asarray(densities, dtype=np.float64)
    pri = np.asarray(priors, dtype=np.float64)
    if (dens < 0).any():
        raise ValueError("densities must be nonnegative")
    joint = dens * pri
    total = joint.sum()
    if total == 0.0:
        raise ValueError("undefined posterior: all class densities are zero")
    return joint / total


def decide_binary(p1, p0, cfg: DecisionConfig | None = None) -> int:
    """Label 1 when class 1 clears the soft margin, else 0.

    absolute: 1 iff p1 - p0 >= margin. log-ratio: 1 iff log(p1/p0) >=
    margin, with p0 = 0 giving label 1 exactly when p1 > 0. The >= is
    inclusive, so equal densities at zero margin yield label 1.
    """
    cfg = cfg or DecisionConfig()
    if p0 < 0.0 or p1 < 0.0:
        raise ValueError("densities must be nonnegative")
    if cfg.rule == "absolute":
        return int(p1 - p0 >= cfg.margin)
    if p0 == 0.0:
        return int(p1 > 0.0)
    if p1 == 0.0:
        return 0
    return int(math.log(p1 / p0) >= cfg.margin)


def newton_raphson_boundary(gamma_fn, gamma_grad, x_init, tol=1e-9,
                            max_iter=100):
    """Solve gamma(x) = 0 from x_init.

    In one dimension this is classic Newton-Raphson; in higher dimensions
    each update is a scalar Newton step along the current gradient
    direction, x <- x - gamma(x) * g / ||g||^2, which lands on the zero
    set of gamma. Every returned point satisfies |gamma(x)| < tol.
    """
    x = np.atleast_1d(np.asarray(x_init, dtype=np.float64)).copy()
    residual = None
    for _ in range(max_iter):
        val = float(gamma_fn(x))
        residual = abs(val)
        if residual < tol:
            return x
        g = np.atleast_1d(np.asarray(gamma_grad(x), dtype=np.float64))
        gg = float(g @ g)
        if gg == 0.0 or not np.isfinite(gg):
            raise StationaryGradient(x)
        x = x - val * g / gg
    raise NonConvergence(max_iter, residual)


@dataclass
class LogisticModel:
    """theta is the (d+1,) coefficient vector, intercept first; theta_nob
    is theta with the intercept removed (the x-gradient of the logit)."""

    theta: np.ndarray

    @property
    def theta_nob(self):
        return self.theta[1:]

    def logit(self, x):
        x = np.asarray(x, dtype=np.float64)
        return self.theta[0] + x @ self.theta[1:]

    def predict_proba(self, x):
        t = self.logit(x)
        return 1.0 / (1.0 + np.exp(-t))

    def predict(self, x):
        return (self.predict_proba(x) >= 0.5).astype(np.int64)

    def boundary_1d(self):
        return -self.theta[0] / self.theta[1]


def logistic_fit(data: LabeledDataset, learning_rate=1.0, epochs=2000,
                 cap=LOGISTIC_CAP) -> LogisticModel:
    """Logistic regression by full-batch gradient-ascent MLE.

    The gradient of the log-likelihood is X'(y - sigmoid(X theta)) / n.
    Perfectly separable data sends the MLE to infinity, so the coefficient
    norm is capped at `cap` with a warning.
    """
    if 0 not in data.labels or 1 not in data.labels:
        raise ValueError("both labels must be present to fit")
    X = np.column_stack([np.ones(data.n), data.features])
    y = data.labels.astype(np.float64)
    theta = np.zeros(X.shape[1])
    capped = False
    for _ in range(epochs):
        p = 1.0 / (1.0 + np.exp(-(X @ theta)))
        theta += learning_rate * (X.T @ (y - p)) / data.n
        norm = float(np.linalg.norm(theta))
        if norm > cap:
            theta *= cap / norm
            if not capped:
                logger.warning(
                    "logistic MLE hit the coefficient cap (%g); "
                    "data may be perfectly separable", cap)
                capped = True
    return LogisticModel(theta=theta)


def discriminative_score_fields(f0, f1, x):
    """Scores and density gradient of binary discriminative densities
    p(y=j|x) = exp(-f_j(x)) / (exp(-f_0(x)) + exp(-f_1(x))).

    f0 and f1 are (value_fn, grad_fn) pairs. Returns (s0, s1, grad_p0):

        s0 = (f1' - f0') * sigmoid(f0 - f1)
        s1 = (f0' - f1') * sigmoid(f1 - f0)
        grad_p0 = (f1' - f0') * sigmoid(f0 - f1) * sigmoid(f1 - f0)

    and grad_p1 = -grad_p0 since the two posteriors sum to one. The
    identities s0 - s1 = f1' - f0' and s0/s1 = -exp(f0 - f1) follow.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    v0, g0 = float(f0[0](x)), np.atleast_1d(f0[1](x))
    v1, g1 = float(f1[0](x)), np.atleast_1d(f1[1](x))
    sig01 = 1.0 / (1.0 + math.exp(-(v0 - v1)))  # sigmoid(f0 - f1)
    sig10 = 1.0 - sig01
    diff = g1 - g0
    s0 = diff * sig01
    s1 = -diff * sig10
    grad_p0 = diff * sig01 * sig10
    return s0, s1, grad_p0


def logistic_f_pair(model: LogisticModel):
    """(f0, f1) pairs for a logistic model: f0(x) = theta'x (with
    intercept), f1(x) = 0."""
    f0 = (lambda x: model.theta[0] + x @ model.theta[1:],
          lambda x: model.theta_nob)
    f1 = (lambda x: 0.0, lambda x: np.zeros_like(model.theta_nob))
    return f0, f1


@dataclass
class FixedRadius:
    radius: float


@dataclass
class FixedK:
    k: int


@dataclass
class VoteResult:
    label: int | None
    confidence: float
    abstained: bool = False


def vote_classify(train: LabeledDataset, x, mode) -> VoteResult:
    """Majority vote in a Euclidean neighborhood of x.

    FixedRadius votes over training rows within the ball (an empty ball
    abstains); FixedK votes over the k nearest rows. Confidence is the
    majority fraction; exact ties go to label 0 with confidence 0.5.
    """
    if train.n == 0:
        raise ValueError("empty training set")
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    dists = np.linalg.norm(train.features - x, axis=1)
    if isinstance(mode, FixedRadius):
        inside = dists <= mode.radius
        if not inside.any():
            return VoteResult(label=None, confidence=0.0, abstained=True)
        votes = train.labels[inside]
    elif isinstance(mode, FixedK):
        if mode.k < 1:
            raise ValueError("k must be >= 1")
        k = min(mode.k, train.n)
        votes = train.labels[np.argsort(dists, kind="stable")[:k]]
    else:
        raise TypeError(f"unknown vote mode: {mode!r}")
    ones = int(votes.sum())
    label = int(ones > len(votes) - ones)  # ties -> 0
    confidence = max(ones, len(votes) - ones) / len(votes)
    return VoteResult(label=label, confidence=confidence)


def knn_predict(train: LabeledDataset, X, k, chunk=512):
    """Vectorized k-nearest-neighbour labels for many query points."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    out = np.empty(X.shape[0], dtype=np.int64)
    k = min(k, train.n)
    for lo in range(0, X.shape[0], chunk):
        block = X[lo:lo + chunk]
        d2 = ((block[:, None, :] - train.features[None, :, :]) ** 2).sum(axis=2)
        nn = np.argpartition(d2, k - 1, axis=1)[:, :k]
        ones = train.labels[nn].sum(axis=1)
        out[lo:lo + chunk] = (ones > k - ones).astype(np.int64)
    return out


def pseudo_pdf_contrast(field0, field1, x, floor=NORM_FLOOR) -> VoteResult:
    """Label by the larger inverse score norm 1/(||s_c(x)|| + eta).

    A heuristic only: the score norm ignores the density-gradient factor,
    so this can be badly wrong near boundaries. Confidence is the
    normalized inverse norm; exact ties go to label 0.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    inv = np.array([1.0 / (np.linalg.norm(as_field(f)(x[None, :])[0]) + floor)
                    for f in (field0, field1)])
    label = int(inv[1] > inv[0])
    return VoteResult(label=label, confidence=float(inv[label] / inv.sum()))


def generative_classify(fields, anchors, priors, x, n_steps=128):
    """Anchored score-based generative classification of a single point.

    Each class density is p0_c * exp(line integral of its score field from
    the class anchor to x); posteriors follow from the Bayes rule with the
    given priors and the label from the zero-margin rule.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    log_dens = np.array([
        float(anchored_log_density(f, a, x[None, :], n_steps)[0])
        for f, a in zip(fields, anchors)
    ])
    # work with shifted log densities: the common shift cancels in the rule
    dens = np.exp(log_dens - log_dens.max())
    post = generative_posterior(dens, priors)
    label = decide_binary(post[1], post[0])
    return label, post


def generative_classify_batch(fields, anchors, priors, X, n_steps=128):
    """Vectorized generative classification; returns (labels, posteriors)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    log_joint = np.stack([
        anchored_log_density(f, a, X, n_steps) + math.log(p)
        for f, a, p in zip(fields, anchors, priors)
    ], axis=1)
    shifted = np.exp(log_joint - log_joint.max(axis=1, keepdims=True))
    post = shifted / shifted.sum(axis=1, keepdims=True)
    labels = (post[:, 1] >= post[:, 0]).astype(np.int64)
    return labels, post


class QuadraticClassDensity:
    """Gaussian-assumption density built from a linear score field.

    A linear score s(x) = A x + b integrates to the quadratic potential
    f(x) = -x'Ax/2 - b'x + c with c fixed by f(mean) = 0, and the sample
    moments supply the normalizer log Z = (d/2) log(2 pi) + log|S|/2, so
    p(x) = exp(-f(x))/Z is a proper density estimate and boundary equations
    gamma = f_0 - f_1 + log Z_0 - log Z_1 become solvable by
    newton_raphson_boundary (grad gamma = s_1 - s_0).
    """

    def __init__(self, a_matrix, b, samples):
        from .gaussians import estimate_moments  # local: avoid cycle at import
        self.A = np.atleast_2d(np.asarray(a_matrix, dtype=np.float64))
        self.b = np.atleast_1d(np.asarray(b, dtype=np.float64))
        moments = estimate_moments(samples)
        self.mean = moments.mean
        self.log_z = moments.log_norm
        self.const = (0.5 * self.mean @ self.A @ self.mean
                      + self.b @ self.mean)

    @classmethod
    def from_linear_net(cls, net, samples):
        if len(net.weights) != 1:
            raise ValueError("gaussian-assumption pathway needs a linear "
                             "(single-layer) score network")
        return cls(net.weights[0], net.biases[0], samples)

    def f(self, x):
        x = np.asarray(x, dtype=np.float64)
        quad = np.einsum("...i,ij,...j->...", x, self.A, x)
        return -0.5 * quad - x @ self.b + self.const

    def score(self, x):
        x = np.asarray(x, dtype=np.float64)
        return x @ self.A.T + self.b

    def grad_f(self, x):
        return -self.score(x)

    def log_pdf(self, x):
        return -self.f(x) - self.log_z


def quadratic_boundary_gamma(d0: QuadraticClassDensity,
                             d1: QuadraticClassDensity):
    """(gamma_fn, gamma_grad) for the generative boundary between two
    Gaussian-assumption densities: gamma = log p1 - log p0."""
    def gamma_fn(x):
        return d0.f(x) - d1.f(x) + d0.log_z - d1.log_z

    def gamma_grad(x):
        return d1.score(x) - d0.score(x)

    return gamma_fn, gamma_grad


@dataclass
class MLPConfig:
    layer_sizes: tuple
    learning_rate: float = 0.05
    epochs: int = 300
    batch_size: int | None = 128
    seed: int = 0


class MLPClassifier:
    """Binary MLP classifier reusing the score-net layer machinery (ReLU
    hidden layers, single logit output, cross-entropy SGD)."""

    def __init__(self, cfg: MLPConfig):
        if cfg.layer_sizes[-1] != 1:
            raise ValueError("classifier output layer must have size 1")
        self.cfg = cfg
        self.net = None

    def fit(self, data: LabeledDataset):
        cfg = self.cfg
        X, y = data.features, data.labels.astype(np.float64)
        if cfg.layer_sizes[0] != data.dim:
            raise ValueError("input layer does not match feature dim")
        root = RngStream(cfg.seed)
        init_rng, shuffle_rng = root.split(2)
        net = score_net.init_net(cfg.layer_sizes, init_rng)
        n = data.n
        batch = n if cfg.batch_size is None else min(cfg.batch_size, n)
        for _ in range(cfg.epochs):
            order = shuffle_rng.permutation(n) if batch < n else np.arange(n)
            for lo in range(0, n, batch):
                idx = order[lo:lo + batch]
                xb, yb = X[idx], y[idx]
                acts, zs = score_net._forward_cached(net, xb)
                masks = score_net._masks(zs)
                logit = zs[-1][:, 0]
                p = 1.0 / (1.0 + np.exp(-logit))
                G = ((p - yb) / len(yb))[:, None]
                for k in range(len(net.weights) - 1, -1, -1):
                    dW = G.T @ acts[k]
                    db = G.sum(axis=0)
                    if k > 0:
                        G = (G @ net.weights[k]) * masks[k - 1]
                    net.weights[k] -= cfg.learning_rate * dW
                    net.biases[k] -= cfg.learning_rate * db
        self.net = net
        return self

    def predict_proba(self, X):
        logit = score_net.forward(self.net, np.atleast_2d(X))[:, 0]
        return 1.0 / (1.0 + np.exp(-logit))

    def predict(self, X):
        return (self.predict_proba(X) >= 0.5).astype(np.int64)
