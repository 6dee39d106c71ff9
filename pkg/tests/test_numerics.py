import numpy as np
import pytest

from scorekit.numerics import (DecompositionError, RngStream, cholesky,
                               normal_cdf, spd_inverse_det, zscore)


def test_cholesky_identity():
    assert np.array_equal(cholesky(np.eye(2)), np.eye(2))


def test_cholesky_hand_case():
    a = np.array([[1.0, -0.5], [-0.5, 1.0]])
    L = cholesky(a)
    expected = np.array([[1.0, 0.0], [-0.5, np.sqrt(0.75)]])
    assert np.allclose(L, expected, atol=1e-12)


def test_cholesky_indefinite_names_pivot():
    with pytest.raises(DecompositionError, match="pivot 2"):
        cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_cholesky_asymmetric_rejected():
    with pytest.raises(DecompositionError):
        cholesky(np.array([[1.0, 0.2], [0.1, 1.0]]))


def test_cholesky_reconstruction_random_spd():
    rng = RngStream(42)
    for d in (1, 3, 7, 12, 20):
        b = rng.standard_normal((d, d))
        a = b @ b.T + np.eye(d)
        L = cholesky(a)
        assert np.max(np.abs(L @ L.T - a)) < 1e-10
        assert np.max(np.abs(np.triu(L, 1))) == 0.0


def test_spd_inverse_det_identity():
    inv, det = spd_inverse_det(np.eye(3))
    assert np.allclose(inv, np.eye(3))
    assert det == pytest.approx(1.0)


def test_spd_inverse_det_hand_case():
    inv, det = spd_inverse_det(np.array([[1.0, -0.5], [-0.5, 1.0]]))
    assert np.allclose(inv, np.array([[4 / 3, 2 / 3], [2 / 3, 4 / 3]]),
                       atol=1e-12)
    assert det == pytest.approx(0.75)


def test_spd_inverse_det_diagonal():
    inv, det = spd_inverse_det(np.diag([4.0, 9.0]))
    assert np.allclose(inv, np.diag([0.25, 1 / 9]))
    assert det == pytest.approx(36.0)


def test_spd_inverse_matches_adjugate_2x2():
    rng = RngStream(7)
    for _ in range(50):
        b = rng.standard_normal((2, 2))
        a = b @ b.T + 0.5 * np.eye(2)
        inv, det = spd_inverse_det(a)
        adj = np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]])
        true_det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
        assert det == pytest.approx(true_det, rel=1e-12)
        assert np.allclose(inv, adj / true_det, atol=1e-10)
        assert np.max(np.abs(a @ inv - np.eye(2))) < 1e-9


def test_standard_normal_empty():
    assert RngStream(0).standard_normal(0).shape == (0,)


def test_standard_normal_moments():
    draws = RngStream(42).standard_normal(1_000_000)
    assert abs(draws.mean()) < 0.005
    assert abs(draws.var() - 1.0) < 0.01


def test_standard_normal_deterministic():
    a = RngStream(123).standard_normal(100)
    b = RngStream(123).standard_normal(100)
    assert np.array_equal(a, b)


def test_split_streams_independent():
    s1, s2 = RngStream(5).split(2)
    a = s1.standard_normal(100_000)
    b = s2.standard_normal(100_000)
    rho = np.corrcoef(a, b)[0, 1]
    assert abs(rho) < 0.01
    # and they differ from one another
    assert not np.array_equal(a, b)


def test_zscore_constant_column():
    x = np.array([[1.0, 2.0], [1.0, 4.0], [1.0, 6.0]])
    scaled, params = zscore(x)
    assert np.array_equal(scaled[:, 0], x[:, 0] - 1.0)  # passthrough, std=1
    assert params.degenerate[0] and not params.degenerate[1]


def test_zscore_hand_case():
    # population std of [0, 2] is 1
    scaled, params = zscore(np.array([[0.0], [2.0]]))
    assert np.allclose(scaled[:, 0], [-1.0, 1.0])
    assert params.mean[0] == pytest.approx(1.0)
    assert params.std[0] == pytest.approx(1.0)


def test_zscore_roundtrip():
    x = RngStream(3).standard_normal((10, 5)) * 7.0 + 2.5
    scaled, params = zscore(x)
    assert np.max(np.abs(scaled.mean(axis=0))) < 1e-9
    assert np.max(np.abs(scaled.std(axis=0) - 1.0)) < 1e-9
    assert np.max(np.abs(params.inverse(scaled) - x)) < 1e-9


def test_normal_cdf_values():
    assert normal_cdf(0.0) == pytest.approx(0.5)
    assert normal_cdf(2.0) == pytest.approx(0.9772498680518208, abs=1e-12)
    z = np.array([-1.0, 0.0, 1.0])
    vals = normal_cdf(z)
    assert vals[0] + vals[2] == pytest.approx(1.0)
