"""Decision boundaries three ways: logistic score fields, closed-form
Gaussian boundary analytics, and Newton-Raphson root finding.

A fitted logistic model induces discriminative densities p(y|x) whose score
fields change abruptly at the boundary while the density gradients peak
there; for two Gaussian classes the equal-density boundary is the QDA
quadratic with closed-form 1D roots; and Newton-Raphson walks onto the same
zero set from arbitrary starts using only boundary values and gradients.
"""

import numpy as np

from scorekit import classify
from scorekit.benchmarks import two_gaussians_1d, two_gaussians_2d
from scorekit.gaussians import (GaussianModel, boundary_roots_1d,
                                estimate_moments, misclass_prob,
                                qda_boundary, simulate)

# --- logistic regression on the 1D pair --------------------------------------
data = simulate(two_gaussians_1d(seed=11))
model = classify.logistic_fit(data, learning_rate=2.0, epochs=3000)
print(f"logistic fit: theta = {np.round(model.theta, 3)}, "
      f"boundary -t0/t1 = {model.boundary_1d():.4f}")

f0, f1 = classify.logistic_f_pair(model)
for x in (-2.0, model.boundary_1d(), 2.0):
    s0, s1, gp0 = classify.discriminative_score_fields(f0, f1, np.array([x]))
    print(f"  x = {x:+.3f}: s0 = {s0[0]:+.3f}, s1 = {s1[0]:+.3f}, "
          f"grad p0 = {gp0[0]:+.4f}")
print("  (scores transition at the boundary; the gradient peaks there)")

# --- closed-form boundary between two 1D Gaussians ----------------------------
a = GaussianModel([-2.0], [[1.0]])
b = GaussianModel([2.0], [[1.0]])
roots = boundary_roots_1d(a, b)
print(f"\nequal-variance pair: boundary root {roots}, misclassification "
      f"probability per class {misclass_prob(a, roots[:1]):.4f}")

c = GaussianModel([0.0], [[1.0]])
d = GaussianModel([1.0], [[4.0]])
roots = boundary_roots_1d(c, d)
print(f"unequal-variance pair: roots {np.round(roots, 4)}; "
      f"|be| at roots = "
      f"{[abs(qda_boundary(c, d, np.array([r]))[0]) for r in roots]}")

# --- Newton-Raphson on the 2D quadratic boundary -------------------------------
data2 = simulate(two_gaussians_2d(seed=5))
m0 = estimate_moments(data2.of_class(0))
m1 = estimate_moments(data2.of_class(1))
gamma = lambda x: qda_boundary(m0, m1, x)[0]  # noqa: E731
grad = lambda x: qda_boundary(m0, m1, x)[1]  # noqa: E731
print("\nNewton-Raphson boundary points from random starts "
      "(moment-estimated 2D models):")
rng = np.random.default_rng(3)
for _ in range(5):
    start = rng.uniform(-1, 5, 2)
    point = classify.newton_raphson_boundary(gamma, grad, start, tol=1e-10)
    print(f"  start {np.round(start, 2)} -> boundary point "
          f"{np.round(point, 4)} (residual {gamma(point):.1e})")
