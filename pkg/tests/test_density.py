import math

import numpy as np
import pytest

from scorekit import density
from scorekit.gaussians import GaussianModel
from scorekit.metrics import jsd
from scorekit.numerics import RngStream

STD_NORMAL_1D = GaussianModel([0.0], [[1.0]])
PAPER_M0 = GaussianModel([0.0, 0.0], [[1.0, -0.5], [-0.5, 1.0]])


def neg_x(x):
    return -np.asarray(x, dtype=float)


def test_log_ratio_1d_equal_endpoints():
    assert density.log_ratio_1d(neg_x, 1.3, 1.3, n=100) == 0.0


def test_log_ratio_1d_standard_normal():
    # integral of -x from 0 to 1 is -1/2
    val = density.log_ratio_1d(neg_x, 0.0, 1.0, n=1000)
    assert val == pytest.approx(-0.5, abs=1e-3)


def test_log_ratio_1d_taylor_one_point_bias():
    # taylor uses s(a) alone: 0 at a=0; mc sees the slope
    taylor = density.log_ratio_1d(neg_x, 0.0, 0.01, method="taylor")
    mc = density.log_ratio_1d(neg_x, 0.0, 0.01, n=100)
    assert taylor == 0.0
    assert mc == pytest.approx(-5e-5, rel=1e-6)


def test_log_ratio_1d_antisymmetric():
    fwd = density.log_ratio_1d(neg_x, -0.7, 1.9, n=333)
    bwd = density.log_ratio_1d(neg_x, 1.9, -0.7, n=333)
    assert fwd == pytest.approx(-bwd, abs=1e-15)


def test_log_ratio_1d_additive():
    a, b, c = -1.0, 0.4, 2.2
    ab = density.log_ratio_1d(STD_NORMAL_1D.score, a, b, n=20_000)
    bc = density.log_ratio_1d(STD_NORMAL_1D.score, b, c, n=20_000)
    ac = density.log_ratio_1d(STD_NORMAL_1D.score, a, c, n=20_000)
    assert ab + bc == pytest.approx(ac, abs=1e-6)


def test_log_ratio_1d_random_abscissae():
    val = density.log_ratio_1d(neg_x, 0.0, 1.0, n=50_000, rng=RngStream(4))
    assert val == pytest.approx(-0.5, abs=5e-3)


def test_line_integral_zero_length():
    assert density.line_integral(neg_x, [0.5, 0.5], [0.5, 0.5], n=10) == 0.0


def test_line_integral_radial_field():
    # potential -||x||^2/2: integral = (||a||^2 - ||b||^2)/2 = -1
    val = density.line_integral(neg_x, [0.0, 0.0], [1.0, 1.0], n=10_000)
    assert val == pytest.approx(-1.0, abs=1e-4)


def test_line_integral_path_independence():
    rng = RngStream(19)
    for _ in range(10):
        a = rng.standard_normal(2) * 2
        b = rng.standard_normal(2) * 2
        corner = np.array([b[0], a[1]])
        straight = density.line_integral(PAPER_M0.score, a, b, n=10_000)
        bent = (density.line_integral(PAPER_M0.score, a, corner, n=10_000)
                + density.line_integral(PAPER_M0.score, corner, b, n=10_000))
        assert abs(straight - bent) < 1e-3


def test_construct_density_matches_standard_normal():
    anchor = (np.array([0.0]), STD_NORMAL_1D.pdf(np.array([0.0])))
    grid = density.grid_1d(-4, 4, 801)
    recon = density.construct_density(STD_NORMAL_1D.score, anchor, grid)
    true = STD_NORMAL_1D.pdf(grid)
    assert jsd(recon.densities, true) < 0.01
    assert (recon.densities > 0).all()


def test_construct_density_anchor_reproduced_exactly():
    grid = density.grid_1d(-2, 2, 41)  # contains 0.0
    anchor = (np.array([0.0]), 0.3989)
    recon = density.construct_density(STD_NORMAL_1D.score, anchor, grid)
    at_anchor = recon.densities[np.flatnonzero(grid[:, 0] == 0.0)[0]]
    assert at_anchor == pytest.approx(0.3989, rel=1e-12)


def test_construct_density_anchor_scaling():
    grid = density.grid_1d(-3, 3, 101)
    base = density.construct_density(STD_NORMAL_1D.score,
                                     (np.array([0.0]), 0.4), grid)
    scaled = density.construct_density(STD_NORMAL_1D.score,
                                       (np.array([0.0]), 0.8), grid)
    ratio = scaled.densities / base.densities
    assert np.allclose(ratio, 2.0, rtol=1e-12)


def test_construct_density_2d_within_five_percent():
    pts, xs, ys = density.serpentine_grid_2d(-3, 3, 61, -3, 3, 61)
    anchor = (PAPER_M0.mean, PAPER_M0.pdf(PAPER_M0.mean))
    recon = density.construct_density(PAPER_M0.score, anchor, pts)
    true = PAPER_M0.pdf(pts)
    inside = np.linalg.norm(pts, axis=1) <= 3.0
    rel = np.abs(recon.densities[inside] - true[inside]) / true[inside]
    assert rel.max() < 0.05
    # grid-sum normalization within 3% after cell-volume weighting
    cell = (xs[1] - xs[0]) * (ys[1] - ys[0])
    assert recon.densities.sum() * cell == pytest.approx(1.0, abs=0.03)


def test_construct_density_anchor_invariance():
    grid = density.grid_1d(-3, 3, 121)
    a1 = (np.array([0.0]), STD_NORMAL_1D.pdf(np.array([0.0])))
    a2 = (np.array([1.0]), STD_NORMAL_1D.pdf(np.array([1.0])))
    r1 = density.construct_density(STD_NORMAL_1D.score, a1, grid,
                                   steps_per_segment=32)
    r2 = density.construct_density(STD_NORMAL_1D.score, a2, grid,
                                   steps_per_segment=32)
    rel = np.abs(r1.densities - r2.densities) / r1.densities
    assert rel.max() < 0.01


def test_construct_density_empty_grid():
    recon = density.construct_density(STD_NORMAL_1D.score,
                                      (np.array([0.0]), 0.4),
                                      np.empty((0, 1)))
    assert recon.densities.size == 0


def test_construct_density_clamps_overflow():
    # an explosive field overflows the log scale; values stay finite
    big = lambda x: np.full_like(np.atleast_2d(x), 50.0)  # noqa: E731
    grid = density.grid_1d(0, 100, 51)
    recon = density.construct_density(big, (np.array([0.0]), 1.0), grid)
    assert np.isfinite(recon.densities).all()
    assert recon.meta["clamped"] > 0


def test_save_table(tmp_path):
    grid = density.grid_1d(-1, 1, 11)
    recon = density.construct_density(STD_NORMAL_1D.score,
                                      (np.array([0.0]), 0.4), grid)
    path = tmp_path / "table.csv"
    recon.save_table(path)
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "x1,density"
    assert len(rows) == 12


def test_smooth_scores_zero_radius():
    val = density.smooth_scores(PAPER_M0.score, np.array([0.5, -0.5]), 0.0)
    assert np.array_equal(val, PAPER_M0.score(np.array([0.5, -0.5])))


def test_smooth_scores_linear_field_unbiased():
    a = np.array([[0.5, -1.0], [0.3, 2.0]])
    b = np.array([0.1, -0.4])
    field = lambda x: np.atleast_2d(x) @ a.T + b  # noqa: E731
    x = np.array([0.7, -0.2])
    val = density.smooth_scores(field, x, radius=0.5, n=10_000,
                                rng=RngStream(7))
    assert np.max(np.abs(val - (a @ x + b))) < 0.01


def test_smooth_scores_step_field_midpoint():
    step = lambda x: np.where(np.atleast_2d(x) >= 0.0, 1.0, -1.0)  # noqa: E731
    val = density.smooth_scores(step, np.array([0.0]), radius=1.0, n=20_000,
                                rng=RngStream(3))
    assert abs(val[0]) < 0.02  # midpoint of -1 and +1


def test_initial_density_1d_gaussian():
    rng = RngStream(11)
    samples = -2.0 + rng.standard_normal((1000, 1))
    x0, p0 = density.initial_density(samples, method="gaussian")
    assert x0[0] == pytest.approx(-2.0, abs=0.15)
    assert p0 == pytest.approx(0.40, abs=0.02)


def test_initial_density_2d_gaussian():
    samples = PAPER_M0.sample(200, RngStream(5))
    _, p0 = density.initial_density(samples, method="gaussian")
    assert p0 == pytest.approx(0.18, abs=0.02)


def test_initial_density_counting_uniform():
    rng = RngStream(9)
    samples = rng.uniform(0.0, 1.0, (50_000, 2))
    # ball around the mean (0.5, 0.5) is fully interior
    _, p0 = density.initial_density(samples, method="count", radius=0.2)
    assert p0 == pytest.approx(1.0, rel=0.1)


def test_initial_density_empty_ball():
    samples = np.array([[0.0, 0.0], [10.0, 10.0]])
    with pytest.raises(ValueError, match="larger radius"):
        density.initial_density(samples, method="count", radius=0.1)


def test_ball_volume():
    assert density.ball_volume(2.0, 1) == pytest.approx(4.0)
    assert density.ball_volume(1.0, 2) == pytest.approx(math.pi)
    assert density.ball_volume(1.0, 3) == pytest.approx(4 * math.pi / 3)


def test_serpentine_grid_steps_are_adjacent():
    pts, xs, ys = density.serpentine_grid_2d(0, 1, 5, 0, 1, 4)
    assert pts.shape == (20, 2)
    steps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    assert steps.max() <= max(xs[1] - xs[0], ys[1] - ys[0]) + 1e-12
