"""Feed-forward score networks trained by score matching.

A score network is a plain ReLU MLP s(x): R^d -> R^d held as explicit numpy
weight/bias arrays. Forward, parameter backprop and the input Jacobian are
all written out by hand; the Jacobian is propagated in forward mode (one
pass per input coordinate), which is exact and cheap at the dimensions this
package targets (d <= ~10).

Two objectives are provided, both with analytic parameter gradients:

  sm(x)  = 0.5*||s(x)||^2 + tr(ds/dx)
  ssm(x) = v'(ds/dx)v + 0.5*||s(x)||^2        averaged over random slices v

Each drops the data-dependent constant of the underlying divergence, so
loss values can legitimately be negative; a negative loss is not a bug.

The ReLU derivative at exactly 0 is taken as 0. Because the second
derivative of ReLU vanishes almost everywhere, the activation masks are
locally constant in the parameters, which is what makes the analytic
gradients of the trace / sliced terms exact (and finite-difference
checkable away from kinks).
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field

import numpy as np

from .numerics import RngStream

_MAGIC = b"SCORENET"
_VERSION = 1


class DivergedTraining(RuntimeError):
    """Loss became non-finite during training."""

    def __init__(self, epoch, loss):
        super().__init__(f"training diverged at epoch {epoch}: loss={loss}")
        self.epoch = epoch


class ModelFormatError(ValueError):
    """Malformed serialized model; carries the offending byte offset."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class UnsupportedVersion(ModelFormatError):
    pass


@dataclass
class ScoreNet:
    """ReLU MLP with identity output. weights[k] has shape (out, in)."""

    layer_sizes: tuple
    weights: list
    biases: list
    activation: str = "relu"

    @property
    def in_dim(self):
        return self.layer_sizes[0]

    @property
    def out_dim(self):
        return self.layer_sizes[-1]

    def n_params(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self):
        return ScoreNet(
            layer_sizes=tuple(self.layer_sizes),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            activation=self.activation,
        )


def init_net(layer_sizes, rng: RngStream) -> ScoreNet:
    """Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2:
        raise ValueError("need at least input and output layer sizes")
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, (fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return ScoreNet(layer_sizes=sizes, weights=weights, biases=biases)


def _forward_cached(net: ScoreNet, X):
    """Batched forward pass keeping activations and pre-activations.

    Returns (acts, zs): acts[0] = X, acts[k] = relu(zs[k-1]) for hidden
    layers; the last entry of zs is the (identity) output.
    """
    acts = [X]
    zs = []
    a = X
    last = len(net.weights) - 1
    for k, (W, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ W.T + b
        zs.append(z)
        if k < last:
            a = np.maximum(z, 0.0)
            acts.append(a)
    return acts, zs


def forward(net: ScoreNet, x):
    """Evaluate the network. Accepts (d,) or (n, d); returns same shape."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.shape[1] != net.in_dim:
        raise ValueError(
            f"input dim {X.shape[1]} does not match network dim {net.in_dim}")
    _, zs = _forward_cached(net, X)
    out = zs[-1]
    return out[0] if single else out


def as_field(net: ScoreNet):
    """The network as a score-field callable (..., d) -> (..., d)."""
    return lambda x: forward(net, x)


def _masks(zs):
    # ReLU subgradient at 0 is 0, hence strict inequality
    return [(z > 0.0).astype(np.float64) for z in zs[:-1]]


def input_jacobian(net: ScoreNet, x):
    """Jacobian ds/dx at a single point and its trace.

    Forward-mode: the identity seed is pushed through masked layers, so the
    result is exact wherever no pre-activation sits exactly on a kink.
    """
    x = np.asarray(x, dtype=np.float64)
    _, zs = _forward_cached(net, x[None, :])
    masks = _masks(zs)
    F = np.eye(net.in_dim)
    for k, W in enumerate(net.weights[:-1]):
        F = masks[k][0][:, None] * (W @ F)
    J = net.weights[-1] @ F
    return J, float(np.trace(J))


def _batched_trace_parts(net, X, masks):
    """Forward tensors F_k (n, n_k, d) and the Jacobians J (n, d, d)."""
    n, d = X.shape
    F = np.broadcast_to(np.eye(d), (n, d, d))
    Fs = [F]
    for k, W in enumerate(net.weights[:-1]):
        F = masks[k][:, :, None] * (W @ F)
        Fs.append(F)
    J = net.weights[-1] @ F
    return Fs, J


def sm_loss(net: ScoreNet, batch) -> float:
    """Mean over the batch of 0.5*||s(x)||^2 + tr(ds/dx)."""
    X = np.asarray(batch, dtype=np.float64)
    _, zs = _forward_cached(net, X)
    masks = _masks(zs)
    s = zs[-1]
    _, J = _batched_trace_parts(net, X, masks)
    traces = np.trace(J, axis1=1, axis2=2)
    return float(np.mean(0.5 * np.sum(s * s, axis=1) + traces))


def draw_slices(rng: RngStream, n, n_slices, d, distribution="gaussian"):
    """Projection vectors of shape (n, n_slices, d)."""
    if distribution == "gaussian":
        return rng.standard_normal((n, n_slices, d))
    if distribution == "rademacher":
        return rng.integers(0, 2, size=(n, n_slices, d)) * 2.0 - 1.0
    raise ValueError(f"unknown slice distribution: {distribution!r}")


def _slice_jvp(net, masks, V):
    """phi tensors (n, m, n_k) from pushing slices V forward; returns the
    full list [phi_0 .. phi_{L-1}] plus J@v."""
    phis = [V]
    phi = V
    for k, W in enumerate(net.weights[:-1]):
        phi = masks[k][:, None, :] * (phi @ W.T)
        phis.append(phi)
    Jv = phi @ net.weights[-1].T
    return phis, Jv


def ssm_loss(net: ScoreNet, batch, n_slices=1, distribution="gaussian",
             rng=None, slices=None) -> float:
    """Sliced objective: mean over batch and slices of
    v'(ds/dx)v + 0.5*||s(x)||^2.

    Pass `slices` explicitly for a deterministic value (e.g. gradient
    checks); otherwise they are drawn from `rng`.
    """
    X = np.asarray(batch, dtype=np.float64)
    n, d = X.shape
    if slices is None:
        if rng is None:
            raise ValueError("ssm_loss needs either slices or an rng")
        slices = draw_slices(rng, n, n_slices, d, distribution)
    _, zs = _forward_cached(net, X)
    masks = _masks(zs)
    s = zs[-1]
    _, Jv = _slice_jvp(net, masks, slices)
    vJv = np.sum(slices * Jv, axis=2)  # (n, m)
    return float(np.mean(vJv) + np.mean(0.5 * np.sum(s * s, axis=1)))


def _norm_part_grads(net, acts, masks, s, scale):
    """Backprop of scale * sum_i 0.5*||s(x_i)||^2; returns per-layer
    (dW, db) lists."""
    grads_w = [np.zeros_like(W) for W in net.weights]
    grads_b = [np.zeros_like(b) for b in net.biases]
    G = s * scale
    for k in range(len(net.weights) - 1, -1, -1):
        grads_w[k] += G.T @ acts[k]
        grads_b[k] += G.sum(axis=0)
        if k > 0:
            G = (G @ net.weights[k]) * masks[k - 1]
    return grads_w, grads_b


def param_gradients(net: ScoreNet, batch, objective="sm", n_slices=1,
                    distribution="gaussian", rng=None, slices=None):
    """Analytic parameter gradients of the chosen objective on `batch`.

    Returns a list of (dW, db) pairs matching net.weights/net.biases. The
    activation masks are treated as constants in the parameters (exact
    almost everywhere for ReLU), so these match central finite differences
    of the loss away from kinks.
    """
    X = np.asarray(batch, dtype=np.float64)
    n, d = X.shape
    acts, zs = _forward_cached(net, X)
    masks = _masks(zs)
    s = zs[-1]
    L = len(net.weights)

    if objective == "sm":
        grads_w, grads_b = _norm_part_grads(net, acts, masks, s, 1.0 / n)
        # trace term: d tr(J)/dW_k = (A_k' B_k')  with J = A_k W_k B_k,
        # B_k = F_{k-1} pushed forward, A_k pulled back from the output
        Fs, _ = _batched_trace_parts(net, X, masks)
        A = np.broadcast_to(np.eye(d), (n, d, d))
        for k in range(L - 1, -1, -1):
            grads_w[k] += np.einsum("nak,nsa->ks", A, Fs[k]) / n
            if k > 0:
                A = (A @ net.weights[k]) * masks[k - 1][:, None, :]
        return list(zip(grads_w, grads_b))

    if objective == "ssm":
        if slices is None:
            if rng is None:
                raise ValueError("ssm gradients need either slices or an rng")
            slices = draw_slices(rng, n, n_slices, d, distribution)
        m = slices.shape[1]
        grads_w, grads_b = _norm_part_grads(net, acts, masks, s, 1.0 / n)
        phis, _ = _slice_jvp(net, masks, slices)
        # d(v'Jv)/dW_k = (A_k'v)(B_k v)' = psi_k phi_{k-1}'
        psi = slices
        for k in range(L - 1, -1, -1):
            grads_w[k] += np.einsum("nmk,nms->ks", psi, phis[k]) / (n * m)
            if k > 0:
                psi = (psi @ net.weights[k]) * masks[k - 1][:, None, :]
        return list(zip(grads_w, grads_b))

    raise ValueError(f"unknown objective: {objective!r}")


@dataclass
class TrainConfig:
    """Training settings for a score network.

    batch_size None means full batch. The defaults (plain SGD, 2000
    full-batch epochs) suit the small datasets this package targets
    (n <= 2000); set batch_size for larger data. For SSM, n_slices and
    slice_distribution control the random projections.
    """

    layer_sizes: tuple
    learning_rate: float = 1e-3
    epochs: int = 2000
    batch_size: int | None = None
    objective: str = "sm"
    n_slices: int = 1
    slice_distribution: str = "gaussian"
    seed: int = 0
    plateau_patience: int | None = None

    def __post_init__(self):
        if self.objective not in ("sm", "ssm"):
            raise ValueError(f"unknown objective: {self.objective!r}")
        if self.objective == "ssm" and self.n_slices < 1:
            raise ValueError("n_slices must be >= 1 for ssm")


@dataclass
class TrainResult:
    net: ScoreNet
    losses: np.ndarray = field(repr=False)


def train(data, cfg: TrainConfig) -> TrainResult:
    """Fit a score network to samples with plain SGD.

    Deterministic under cfg.seed (init, shuffling and SSM slices all come
    from streams derived from it). Raises DivergedTraining, naming the
    epoch, if the loss goes non-finite. The recorded per-epoch loss is the
    mean of that epoch's batch losses.
    """
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("training data must be (n, d) with n >= 2")
    n, d = X.shape
    if cfg.layer_sizes[0] != d or cfg.layer_sizes[-1] != d:
        raise ValueError(
            f"layer sizes {cfg.layer_sizes} do not match data dim {d}")
    root = RngStream(cfg.seed)
    init_rng, shuffle_rng, slice_rng = root.split(3)
    net = init_net(cfg.layer_sizes, init_rng)
    batch = n if cfg.batch_size is None else min(cfg.batch_size, n)

    losses = []
    best_trailing = np.inf
    stale = 0
    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(n) if batch < n else np.arange(n)
        epoch_losses = []
        for start in range(0, n, batch):
            xb = X[order[start:start + batch]]
            if cfg.objective == "sm":
                loss = sm_loss(net, xb)
                grads = param_gradients(net, xb, "sm")
            else:
                sl = draw_slices(slice_rng, xb.shape[0], cfg.n_slices, d,
                                 cfg.slice_distribution)
                loss = ssm_loss(net, xb, slices=sl)
                grads = param_gradients(net, xb, "ssm", slices=sl)
            if not np.isfinite(loss):
                raise DivergedTraining(epoch, loss)
            for (dW, db), W, b in zip(grads, net.weights, net.biases):
                W -= cfg.learning_rate * dW
                b -= cfg.learning_rate * db
            epoch_losses.append(loss)
        losses.append(float(np.mean(epoch_losses)))
        if cfg.plateau_patience is not None and len(losses) >= 10:
            trailing = float(np.mean(losses[-10:]))
            if trailing < best_trailing - 1e-12:
                best_trailing = trailing
                stale = 0
            else:
                stale += 1
                if stale >= cfg.plateau_patience:
                    break
    return TrainResult(net=net, losses=np.asarray(losses))


def serialize(net: ScoreNet) -> bytes:
    """Pack the network into the versioned binary model format.

    Layout (little endian): magic "SCORENET", u32 version, u8 activation
    tag length + ascii tag, u32 layer count, u32 sizes, then per layer the
    row-major float64 weight matrix followed by the float64 bias vector.
    Float payloads are raw IEEE doubles, so round-trips are bit-exact.
    """
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<I", _VERSION))
    tag = net.activation.encode("ascii")
    buf.write(struct.pack("<B", len(tag)))
    buf.write(tag)
    buf.write(struct.pack("<I", len(net.layer_sizes)))
    buf.write(struct.pack(f"<{len(net.layer_sizes)}I", *net.layer_sizes))
    for W, b in zip(net.weights, net.biases):
        buf.write(np.ascontiguousarray(W, dtype="<f8").tobytes())
        buf.write(np.ascontiguousarray(b, dtype="<f8").tobytes())
    return buf.getvalue()


def _take(blob, offset, count, what):
    if offset + count > len(blob):
        raise ModelFormatError(f"truncated model file while reading {what}",
                               len(blob))
    return blob[offset:offset + count], offset + count


def deserialize(blob: bytes) -> ScoreNet:
    """Inverse of `serialize`. Raises ModelFormatError with the byte offset
    on malformed input and UnsupportedVersion on a version mismatch."""
    raw, off = _take(blob, 0, len(_MAGIC), "magic")
    if raw != _MAGIC:
        raise ModelFormatError("bad magic, not a score-net model file", 0)
    raw, off = _take(blob, off, 4, "version")
    version = struct.unpack("<I", raw)[0]
    if version != _VERSION:
        raise UnsupportedVersion(
            f"unsupported model version {version} (expected {_VERSION})",
            off - 4)
    raw, off = _take(blob, off, 1, "activation tag length")
    tag_len = raw[0]
    raw, off = _take(blob, off, tag_len, "activation tag")
    activation = raw.decode("ascii")
    raw, off = _take(blob, off, 4, "layer count")
    n_sizes = struct.unpack("<I", raw)[0]
    raw, off = _take(blob, off, 4 * n_sizes, "layer sizes")
    sizes = struct.unpack(f"<{n_sizes}I", raw)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        raw, off = _take(blob, off, 8 * fan_in * fan_out, "weights")
        weights.append(np.frombuffer(raw, dtype="<f8").reshape(fan_out, fan_in).copy())
        raw, off = _take(blob, off, 8 * fan_out, "biases")
        biases.append(np.frombuffer(raw, dtype="<f8").copy())
    if off != len(blob):
        raise ModelFormatError("trailing bytes after model payload", off)
    return ScoreNet(layer_sizes=tuple(sizes), weights=weights, biases=biases,
                    activation=activation)


def save_net(net: ScoreNet, path):
    with open(path, "wb") as fh:
        fh.write(serialize(net))


def load_net(path) -> ScoreNet:
    with open(path, "rb") as fh:
        return deserialize(fh.read())
