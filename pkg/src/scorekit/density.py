"""Density reconstruction from score fields.

A score field is any callable mapping points of shape (..., d) to scores of
the same shape (an analytic Gaussian score, a trained network wrapped by
score_net.as_field, or a plain function). Because a true score field is the
gradient of log p, its line integral between two points is the log-density
ratio, so one anchored value p(x0) fixes the whole surface:

    p(x) = p(x0) * exp( integral over a path x0 -> x of s . dx )

1D ratios use midpoint Monte-Carlo averaging (deterministic equidistant
midpoints by default, random abscissae opt-in) or a one-point Taylor step.
Multi-dimensional ratios use a straight-line path with the trapezoid of the
endpoint scores on each sub-segment; on locally linear fields (Gaussian
scores, ReLU nets between kinks) that rule is exact, and path independence
makes the walk order immaterial up to integration error.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .gaussians import estimate_moments
from .numerics import RngStream

_LOG_CLAMP = 700.0  # exp overflows just above 709; underflows to 0 below -745


def as_field(obj):
    """Normalize `obj` into a score-field callable."""
    if callable(obj):
        return obj
    if hasattr(obj, "score"):
        return obj.score
    raise TypeError(f"cannot interpret {type(obj).__name__} as a score field")


def log_ratio_1d(field_fn, a, b, n=1000, method="mc", rng=None):
    """log p(b) - log p(a) for a one-dimensional score field.

    method "mc": (delta/n) * sum of scores at n abscissae, equidistant
    midpoints by default or uniform draws when `rng` is given. Swapping the
    endpoints negates the result exactly (shared abscissae). method
    "taylor": the one-point approximation s(a)*(b-a).
    """
    field_fn = as_field(field_fn)
    a, b = float(a), float(b)
    if method == "taylor":
        return float(field_fn(np.array([[a]]))[0, 0] * (b - a))
    if method != "mc":
        raise ValueError(f"unknown method: {method!r}")
    if n < 1:
        raise ValueError("need n >= 1 abscissae")
    if a == b:
        return 0.0
    if rng is None:
        ts = (np.arange(n) + 0.5) / n
    else:
        ts = rng.uniform(0.0, 1.0, n)
    xs = a + ts * (b - a)
    scores = field_fn(xs[:, None])[:, 0]
    return float((b - a) / n * np.sum(scores))


def line_integral(field_fn, a, b, n=100):
    """Straight-line integral of the field from a to b with n trapezoid
    sub-segments; equals log p(b) - log p(a) for conservative fields."""
    field_fn = as_field(field_fn)
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    if n < 2:
        raise ValueError("need n >= 2 segments")
    ts = np.linspace(0.0, 1.0, n + 1)
    pts = a + ts[:, None] * (b - a)
    s = field_fn(pts)
    mids = 0.5 * (s[1:] + s[:-1])
    steps = pts[1:] - pts[:-1]
    return float(np.sum(mids * steps))


def _segment_log_ratios(field_fn, starts, ends, n):
    """Vectorized trapezoid integrals for a batch of straight segments.
    starts/ends: (m, d). Returns (m,) log ratios with one field call."""
    m, d = starts.shape
    ts = np.linspace(0.0, 1.0, n + 1)
    pts = starts[:, None, :] + ts[None, :, None] * (ends - starts)[:, None, :]
    s = field_fn(pts.reshape(m * (n + 1), d)).reshape(m, n + 1, d)
    mids = 0.5 * (s[:, 1:, :] + s[:, :-1, :])
    steps = pts[:, 1:, :] - pts[:, :-1, :]
    return np.sum(mids * steps, axis=(1, 2))


@dataclass
class DensityField:
    """Reconstructed densities on a set of points, anchored at
    (anchor_point, anchor_density). All densities are positive; clamped
    log values (overflow guard) are counted in meta["clamped"]."""

    points: np.ndarray
    densities: np.ndarray
    log_densities: np.ndarray = field(repr=False)
    anchor_point: np.ndarray = None
    anchor_density: float = None
    meta: dict = field(default_factory=dict)

    def save_table(self, path):
        """Tabular export: one row per point, coordinates then density."""
        d = self.points.shape[1]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"x{i + 1}" for i in range(d)] + ["density"])
            for p, v in zip(self.points, self.densities):
                writer.writerow([repr(float(c)) for c in p] + [repr(float(v))])


def construct_density(field_fn, anchor, grid, steps_per_segment=8):
    """Walk the grid in sequence order, accumulating log-density ratios.

    `anchor` is (x0, p0) with p0 > 0. Each grid point integrates from its
    predecessor (the first from x0), so density(g) = p0 * exp(accumulated
    log ratio along the walk); a grid point equal to x0 reproduces p0
    exactly. Path independence of conservative fields makes the ordering a
    numerical detail; use serpentine_grid_2d for short, cache-friendly
    steps. Log values beyond +-700 are clamped (recorded in meta) so the
    output stays positive and finite.
    """
    field_fn = as_field(field_fn)
    x0, p0 = anchor
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    p0 = float(p0)
    if p0 <= 0.0:
        raise ValueError("anchor density must be positive")
    pts = np.asarray(grid, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] == 0:
        return DensityField(points=pts, densities=np.array([]),
                            log_densities=np.array([]),
                            anchor_point=x0, anchor_density=p0)
    starts = np.vstack([x0[None, :], pts[:-1]])
    deltas = _segment_log_ratios(field_fn, starts, pts, steps_per_segment)
    log_p = math.log(p0) + np.cumsum(deltas)
    clamped = int(np.sum(np.abs(log_p) > _LOG_CLAMP))
    log_p = np.clip(log_p, -_LOG_CLAMP, _LOG_CLAMP)
    meta = {"steps_per_segment": steps_per_segment, "clamped": clamped}
    return DensityField(points=pts, densities=np.exp(log_p),
                        log_densities=log_p, anchor_point=x0,
                        anchor_density=p0, meta=meta)


def anchored_log_density(field_fn, anchor, targets, n_steps=128):
    """log densities at `targets` (m, d), each integrated straight from the
    anchor. The come-and-serve counterpart of construct_density."""
    field_fn = as_field(field_fn)
    x0, p0 = anchor
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    starts = np.broadcast_to(x0, targets.shape).copy()
    deltas = _segment_log_ratios(field_fn, starts, targets, n_steps)
    return math.log(float(p0)) + deltas


def smooth_scores(field_fn, x, radius, n=100, rng=None):
    """Identity-kernel smoothing: the mean field value over n points drawn
    uniformly from the radius-ball around x. radius=0 returns field(x)."""
    field_fn = as_field(field_fn)
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if radius < 0.0:
        raise ValueError("radius must be nonnegative")
    if n < 1:
        raise ValueError("need n >= 1 samples")
    if radius == 0.0:
        return field_fn(x[None, :])[0]
    rng = rng or RngStream(0)
    d = x.shape[0]
    dirs = rng.standard_normal((n, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = radius * rng.uniform(0.0, 1.0, n) ** (1.0 / d)
    return field_fn(x + radii[:, None] * dirs).mean(axis=0)


def ball_volume(radius, d):
    return math.pi ** (d / 2.0) * radius ** d / math.gamma(d / 2.0 + 1.0)


def initial_density(samples, method="gaussian", radius=None):
    """Anchor estimate (x0, p0) for a class sample, x0 = sample mean.

    method "gaussian": the Gaussian central value 1/((2 pi)^(d/2) |S|^(1/2))
    from the population moments. method "count": samples within the
    radius-ball around x0 divided by (n * ball volume); raises if the ball
    is empty, advising a larger radius.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need an (n, d) sample array with n >= 2")
    x0 = x.mean(axis=0)
    if method == "gaussian":
        model = estimate_moments(x)
        return x0, float(np.exp(-model.log_norm))
    if method == "count":
        if radius is None or radius <= 0.0:
            raise ValueError("counting estimate needs a positive radius")
        inside = int(np.sum(np.linalg.norm(x - x0, axis=1) <= radius))
        if inside == 0:
            raise ValueError(
                f"no samples within radius {radius} of the mean; "
                "use a larger radius")
        return x0, inside / (x.shape[0] * ball_volume(radius, x.shape[1]))
    raise ValueError(f"unknown method: {method!r}")


def grid_1d(lo, hi, n):
    """n points spanning [lo, hi] as an (n, 1) array."""
    return np.linspace(float(lo), float(hi), int(n))[:, None]


def serpentine_grid_2d(x_lo, x_hi, nx, y_lo, y_hi, ny):
    """Row-major lattice ordered as a serpentine sweep (row left-to-right,
    next row right-to-left), so consecutive walk steps are always adjacent
    cells. Returns (points (nx*ny, 2), xs, ys)."""
    xs = np.linspace(float(x_lo), float(x_hi), int(nx))
    ys = np.linspace(float(y_lo), float(y_hi), int(ny))
    rows = []
    for j, y in enumerate(ys):
        row_x = xs if j % 2 == 0 else xs[::-1]
        rows.append(np.column_stack([row_x, np.full(len(xs), y)]))
    return np.concatenate(rows, axis=0), xs, ys
