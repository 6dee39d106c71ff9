import numpy as np
import pytest

from scorekit.gaussians import GaussianModel
from scorekit.langevin import (DivergedSampling, LangevinConfig, chain,
                               generate, run_chains, start_weights)
from scorekit.numerics import RngStream, normal_cdf

STD_1D = GaussianModel([0.0], [[1.0]])
PAPER_M0 = GaussianModel([0.0, 0.0], [[1.0, -0.5], [-0.5, 1.0]])


def zero_field(x):
    return np.zeros_like(np.atleast_2d(x))


@pytest.mark.parametrize("length,rate,kept", [
    (10, 0.2, 8), (20, 0.9, 2), (40, 0.9, 4),
    (300, 0.1, 270), (100, 0.3, 70), (10, 0.1, 9),
])
def test_discard_arithmetic(length, rate, kept):
    cfg = LangevinConfig(step_size=0.01, chain_length=length,
                         discard_rate=rate)
    assert cfg.kept_per_chain == kept


def test_config_rejects_invalid_rates():
    with pytest.raises(ValueError):
        LangevinConfig(step_size=0.01, chain_length=10, discard_rate=1.0)
    with pytest.raises(ValueError):
        LangevinConfig(step_size=0.0, chain_length=10)
    with pytest.raises(ValueError, match="kept"):
        # a rate this close to 1 leaves no kept state on a length-1 chain
        LangevinConfig(step_size=0.01, chain_length=1,
                       discard_rate=1.0 - 1e-12)


def test_from_burn_in():
    cfg = LangevinConfig.from_burn_in(0.003, 1000, 200)
    assert cfg.kept_per_chain == 800


def test_chain_zero_field_random_walk_variance():
    # with no drift the displacement variance grows as l * eps
    eps, length = 0.01, 50
    cfg = LangevinConfig(step_size=eps, chain_length=length)
    kept, bad = run_chains(zero_field, np.zeros((2000, 2)), cfg, seed=2)
    assert (bad == -1).all()
    var = np.var(kept[:, -1, :], axis=0)
    assert np.allclose(var, length * eps, rtol=0.1)


def test_chain_frozen_dynamics():
    cfg = LangevinConfig(step_size=1e-12, chain_length=10)
    states = chain(STD_1D.score, np.array([1.7]), cfg, RngStream(0))
    assert np.max(np.abs(states - 1.7)) < 1e-5


def test_chain_stationary_moments():
    # many chains started at independent target draws: marginally
    # stationary, so pooled moments estimate the target's
    cfg = LangevinConfig(step_size=0.003, chain_length=400, discard_rate=0.5)
    starts = STD_1D.sample(500, RngStream(8))
    kept, bad = run_chains(STD_1D.score, starts, cfg, seed=8)
    assert (bad == -1).all()
    pooled = kept.reshape(-1)
    assert abs(pooled.mean()) < 0.05
    assert abs(pooled.var() - 1.0) < 0.1


def test_chain_divergence_error_carries_step():
    explode = lambda x: np.full_like(np.atleast_2d(x), 1e308)  # noqa: E731
    cfg = LangevinConfig(step_size=1.0, chain_length=10)
    with pytest.raises(DivergedSampling) as err:
        chain(explode, np.array([0.0]), cfg, RngStream(1))
    assert err.value.step >= 0


def test_start_weights_uniform_for_equal_norms():
    # all seeds at the same radius have equal score norm under s(x) = -x
    seeds = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    w = start_weights(lambda x: -np.atleast_2d(x), seeds)
    assert np.allclose(w, 0.25)


def test_start_weights_mode_seed_dominates():
    seeds = np.array([[0.0], [1.0], [2.0], [-1.5]])
    w = start_weights(STD_1D.score, seeds)
    assert w.argmax() == 0
    assert np.isfinite(w).all()
    assert w.sum() == pytest.approx(1.0)


def test_start_weights_rank_correlate_with_pdf():
    seeds = STD_1D.sample(400, RngStream(3))
    w = start_weights(STD_1D.score, seeds)
    pdf = STD_1D.pdf(seeds)
    # Spearman rank correlation, computed directly
    rw = np.argsort(np.argsort(w))
    rp = np.argsort(np.argsort(pdf))
    rho = np.corrcoef(rw, rp)[0, 1]
    assert rho > 0.9


def test_generate_paper_protocol_sample_count():
    seeds = PAPER_M0.sample(50, RngStream(2))
    cfg = LangevinConfig.from_burn_in(0.003, 1000, 200, n_chains=100, seed=1)
    out = generate(PAPER_M0.score, seeds, cfg)
    assert out.shape == (80_000, 2)
    assert np.isfinite(out).all()


def test_generate_target_zero():
    seeds = np.zeros((3, 2))
    cfg = LangevinConfig(step_size=0.01, chain_length=10, target_count=0)
    assert generate(zero_field, seeds, cfg).shape == (0, 2)


def test_generate_truncates_to_target():
    seeds = STD_1D.sample(10, RngStream(0))
    cfg = LangevinConfig(step_size=0.01, chain_length=10, discard_rate=0.2,
                         target_count=20, seed=3)  # kept 8 per chain
    out = generate(STD_1D.score, seeds, cfg)
    assert out.shape == (20, 1)


def test_generate_deterministic():
    seeds = PAPER_M0.sample(30, RngStream(4))
    cfg = LangevinConfig(step_size=0.01, chain_length=25, discard_rate=0.2,
                         target_count=100, seed=11)
    a = generate(PAPER_M0.score, seeds, cfg)
    b = generate(PAPER_M0.score, seeds, cfg)
    assert np.array_equal(a, b)


def test_generate_moment_recovery():
    seeds = PAPER_M0.sample(200, RngStream(1001))
    cfg = LangevinConfig.from_burn_in(0.003, 1000, 200, n_chains=100, seed=1)
    out = generate(PAPER_M0.score, seeds, cfg)
    mean = out.mean(axis=0)
    diff = out - mean
    cov = diff.T @ diff / len(out)
    assert np.max(np.abs(mean - PAPER_M0.mean)) < 0.1
    assert np.max(np.abs(cov - PAPER_M0.cov)) < 0.15


def test_generate_all_diverged_raises():
    explode = lambda x: np.full_like(np.atleast_2d(x), 1e308)  # noqa: E731
    seeds = np.zeros((5, 1))
    cfg = LangevinConfig(step_size=1.0, chain_length=5, target_count=10)
    with pytest.raises(DivergedSampling):
        generate(explode, seeds, cfg)


def test_kolmogorov_smirnov_stationarity():
    # 1e5 kept samples from 8000 stationary-start chains at eps = 0.005:
    # the dynamics must preserve the target distribution
    cfg = LangevinConfig(step_size=0.005, chain_length=65, discard_rate=0.8)
    starts = STD_1D.sample(8000, RngStream(6))
    kept, bad = run_chains(STD_1D.score, starts, cfg, seed=6)
    assert (bad == -1).all()
    out = kept.reshape(-1)
    assert out.size >= 100_000
    xs = np.sort(out)
    ecdf = np.arange(1, len(xs) + 1) / len(xs)
    ks = np.max(np.abs(ecdf - normal_cdf(xs)))
    assert ks < 0.02
