"""Linear algebra and random-stream primitives used across the package.

Everything is float64. The Cholesky routine is explicit (not LAPACK) so a
failed decomposition can report which pivot went nonpositive, and the
determinant of an SPD matrix is taken as the product of the squared factor
diagonal. Variances use the population (1/n) convention throughout the
package so moment estimates and learned score coefficients stay comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DecompositionError(ValueError):
    """Matrix is not symmetric positive-definite."""


def check_symmetric(a, tol: float = 1e-10) -> np.ndarray:
    """Return `a` as a float64 array, raising unless it is square and
    symmetric within `tol` (relative to the largest entry)."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    if a.size and float(np.max(np.abs(a - a.T))) > tol * scale:
        raise DecompositionError("matrix is not symmetric within tolerance")
    return a


def cholesky(a) -> np.ndarray:
    """Lower-triangular L with L @ L.T equal to `a`.

    Raises DecompositionError naming the failing pivot (1-based) when `a`
    is not positive-definite, e.g. "pivot 2 nonpositive".
    """
    a = check_symmetric(a)
    n = a.shape[0]
    L = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - L[j, :j] @ L[j, :j]
        if not np.isfinite(pivot) or pivot <= 0.0:
            raise DecompositionError(
                f"cholesky failed: pivot {j + 1} nonpositive ({pivot:.6g})"
            )
        L[j, j] = math.sqrt(pivot)
        if j + 1 < n:
            L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def solve_lower(L, b) -> np.ndarray:
    """Forward substitution: solve L x = b for lower-triangular L.
    `b` may be a vector or a matrix of stacked right-hand sides."""
    L = np.asarray(L, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    x = np.array(b, copy=True)
    n = L.shape[0]
    for i in range(n):
        x[i] -= L[i, :i] @ x[:i]
        x[i] /= L[i, i]
    return x


def solve_upper(U, b) -> np.ndarray:
    """Back substitution: solve U x = b for upper-triangular U."""
    U = np.asarray(U, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    x = np.array(b, copy=True)
    n = U.shape[0]
    for i in range(n - 1, -1, -1):
        x[i] -= U[i, i + 1:] @ x[i + 1:]
        x[i] /= U[i, i]
    return x


def spd_inverse_det(a) -> tuple[np.ndarray, float]:
    """Inverse and determinant of an SPD matrix via its Cholesky factor.

    det(a) = prod(diag(L))^2, always positive. Raises DecompositionError
    exactly as `cholesky` does.
    """
    L = cholesky(a)
    det = float(np.prod(np.diag(L)) ** 2)
    eye = np.eye(L.shape[0])
    inv = solve_upper(L.T, solve_lower(L, eye))
    return inv, det


def normal_cdf(z):
    """Standard normal CDF via the stdlib erf (accurate to double precision)."""
    z = np.asarray(z, dtype=np.float64)
    out = 0.5 * (1.0 + np.vectorize(math.erf)(z / math.sqrt(2.0)))
    return float(out) if out.ndim == 0 else out


class RngStream:
    """A deterministic random stream that can be split into independent
    child streams.

    Built on numpy SeedSequence + PCG64: identical seeds reproduce the same
    draw sequence, and streams spawned from one root do not share state, so
    e.g. Langevin chains can each own a stream and be stepped in any order.
    """

    def __init__(self, seed):
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
        else:
            self._seq = np.random.SeedSequence(int(seed))
        self.generator = np.random.Generator(np.random.PCG64(self._seq))

    def split(self, n: int) -> list["RngStream"]:
        """Spawn `n` independent child streams."""
        return [RngStream(s) for s in self._seq.spawn(n)]

    def standard_normal(self, size=None):
        return self.generator.standard_normal(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size=size)

    def permutation(self, n):
        return self.generator.permutation(n)

    def choice(self, n, size=None, replace=True, p=None):
        return self.generator.choice(n, size=size, replace=replace, p=p)

    def __repr__(self):
        return f"RngStream(entropy={self._seq.entropy})"


@dataclass
class ZScoreParams:
    """Per-column standardization parameters.

    `std` holds 1.0 for degenerate (constant) columns, which pass through
    unscaled; `degenerate` marks them.
    """

    mean: np.ndarray
    std: np.ndarray
    degenerate: np.ndarray

    def transform(self, x):
        x = np.asarray(x, dtype=np.float64)
        return (x - self.mean) / self.std

    def inverse(self, x):
        x = np.asarray(x, dtype=np.float64)
        return x * self.std + self.mean


def zscore(features) -> tuple[np.ndarray, ZScoreParams]:
    """Column-wise z-score standardization with population (1/n) std.

    Constant columns are passed through (std recorded as 1 and flagged).
    The inverse transform recovers the input to float64 round-off.
    """
    x = np.asarray(features, dtype=np.float64)
    mean = x.mean(axis=0)
    std = x.std(axis=0)  # ddof=0, population convention
    degenerate = std == 0.0
    std = np.where(degenerate, 1.0, std)
    params = ZScoreParams(mean=mean, std=std, degenerate=degenerate)
    return params.transform(x), params
