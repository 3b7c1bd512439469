import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from linear_models import linear_model, sample_model
from localcca.cca import (CcaModel, attenuation_factor, attenuation_matrix,
                          batch_attenuation, fit_cca, fit_cca_population)
from localcca.errors import (DimensionMismatch, InsufficientSamples,
                             SampleCountMismatch, ZeroMatrix)


def _pair(seed, n=200, dx=3, dy=4, coupling=0.7):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, 2))
    x = np.hstack([z, rng.standard_normal((n, dx - 2))]) @ rng.standard_normal((dx, dx))
    y = (coupling * np.hstack([z, rng.standard_normal((n, dy - 2))])
         + rng.standard_normal((n, dy))) @ rng.standard_normal((dy, dy))
    return x, y


def test_self_correlation_is_one():
    x = np.random.default_rng(0).standard_normal((50, 3))
    model = fit_cca(x, x, ridge=0.0)
    assert np.allclose(model.lam, 1.0)


def test_independent_scalars_uncorrelated():
    rng = np.random.default_rng(42)
    x = rng.standard_normal((10000, 1))
    y = rng.standard_normal((10000, 1))
    assert fit_cca(x, y).lam[0] < 0.1


def test_linear_model_has_dz_unit_correlations():
    _, _, sxx, syy, sxy = linear_model(0)
    lam = fit_cca_population(sxx, syy, sxy).lam
    assert np.abs(lam[:3] - 1.0).max() < 1e-8
    assert np.abs(lam[3:]).max() < 1e-8


def test_population_identity():
    model = fit_cca_population(np.eye(2), np.eye(2), np.eye(2))
    assert np.allclose(model.lam, [1.0, 1.0])
    assert np.allclose(np.abs(model.p_x), np.eye(2))
    assert np.allclose(np.abs(model.p_y), np.eye(2))


def test_population_uncorrelated():
    model = fit_cca_population(np.eye(2), np.eye(2), np.zeros((2, 2)))
    assert np.allclose(model.lam, 0.0)


def test_population_diagonal_cross():
    model = fit_cca_population(np.eye(2), np.eye(2), np.diag([0.8, 0.3]))
    assert np.allclose(model.lam, [0.64, 0.09])


def test_population_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        fit_cca_population(np.eye(2), np.eye(3), np.eye(2))


def test_matches_gamma_eigenvalues():
    for seed in range(5):
        x, y = _pair(seed)
        xc, yc = x - x.mean(0), y - y.mean(0)
        n = x.shape[0]
        sxx, syy, sxy = xc.T @ xc / n, yc.T @ yc / n, xc.T @ yc / n
        gamma = np.linalg.solve(sxx, sxy) @ np.linalg.solve(syy, sxy.T)
        oracle = np.sort(np.real(scipy.linalg.eigvals(gamma)))[::-1]
        lam = fit_cca(x, y, ridge=0.0).lam
        assert np.allclose(lam, oracle[:lam.size], atol=1e-10)


def test_directions_solve_gamma():
    x, y = _pair(7)
    xc, yc = x - x.mean(0), y - y.mean(0)
    n = x.shape[0]
    sxx, syy, sxy = xc.T @ xc / n, yc.T @ yc / n, xc.T @ yc / n
    gamma = np.linalg.solve(sxx, sxy) @ np.linalg.solve(syy, sxy.T)
    model = fit_cca(x, y, ridge=0.0)
    assert np.allclose(gamma @ model.p_x, model.p_x * model.lam, atol=1e-8)


def test_whitening_and_unit_variance():
    x, y = _pair(3)
    model = fit_cca(x, y, ridge=0.0)
    xc = x - x.mean(0)
    sxx = xc.T @ xc / x.shape[0]
    assert np.allclose(model.p_x.T @ sxx @ model.p_x, np.eye(model.rank),
                       atol=1e-6)
    var = np.sum((xc @ model.p_x) ** 2, axis=0) / x.shape[0]
    assert np.allclose(var, 1.0, atol=1e-6)


def test_lambda_sorted_and_clamped():
    x, y = _pair(5)
    lam = fit_cca(x, y).lam
    assert np.all(np.diff(lam) <= 0)
    assert lam.min() >= 0.0 and lam.max() <= 1.0


def test_rank_deficient_neighborhood():
    # fewer samples than dimensions: only the sample span is whitened
    rng = np.random.default_rng(0)
    x = rng.standard_normal((8, 50))
    y = rng.standard_normal((8, 40))
    model = fit_cca(x, y)
    assert model.rank == 7
    assert model.p_x.shape == (50, 7)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(0.01, 100.0),
       st.sampled_from([-1.0, 1.0]))
def test_scale_invariance(seed, alpha, sign):
    x, y = _pair(seed, n=60)
    alpha *= sign
    a = fit_cca(x, y)
    b = fit_cca(alpha * x, y)
    assert np.allclose(a.lam, b.lam, atol=1e-8)
    dx = x[:10] - x[10:20]
    da = np.einsum("ij,jk,ik->i", dx, attenuation_matrix(a), dx)
    db = np.einsum("ij,jk,ik->i", alpha * dx, attenuation_matrix(b),
                   alpha * dx)
    assert np.allclose(da, db, rtol=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_symmetry_in_arguments(seed):
    x, y = _pair(seed, n=60)
    assert np.allclose(fit_cca(x, y).lam, fit_cca(y, x).lam, atol=1e-8)


def test_attenuation_zero_lambda():
    model = CcaModel(np.eye(3), np.eye(3), np.zeros(3))
    assert np.array_equal(attenuation_matrix(model), np.zeros((3, 3)))


def test_attenuation_identity_observation_is_inverse_covariance():
    g = np.random.default_rng(8).standard_normal((3, 3))
    sxx = g @ g.T
    model = fit_cca_population(sxx, sxx, sxx)
    assert np.allclose(attenuation_matrix(model), np.linalg.inv(sxx),
                       rtol=1e-8, atol=1e-10)


def test_attenuation_random_psd():
    for seed in range(10):
        x, y = _pair(seed, n=40)
        a = attenuation_matrix(fit_cca(x, y), "y")
        assert np.abs(a - a.T).max() < 1e-10
        assert np.linalg.eigvalsh(a).min() >= -1e-10
        f = attenuation_factor(fit_cca(x, y), "y")
        assert np.allclose(f @ f.T, a)


def test_attenuation_bad_side():
    with pytest.raises(ValueError):
        attenuation_matrix(CcaModel(np.eye(2), np.eye(2), np.ones(2)), "z")


def test_errors():
    with pytest.raises(InsufficientSamples):
        fit_cca([[1.0]], [[2.0]])
    with pytest.raises(SampleCountMismatch):
        fit_cca(np.zeros((3, 1)), np.zeros((4, 1)))
    with pytest.raises(ZeroMatrix):
        fit_cca(np.ones((5, 2)), np.random.default_rng(0).random((5, 2)))
    with pytest.raises(ValueError):
        fit_cca(np.eye(3), np.eye(3), ridge=-1.0)


def test_batch_matches_loop_low_dim():
    rng = np.random.default_rng(9)
    xs = rng.standard_normal((30, 12, 3))
    ys = xs @ rng.standard_normal((3, 4)) + 0.5 * rng.standard_normal((30, 12, 4))
    for side in ("x", "y"):
        batch = batch_attenuation(xs, ys, side=side)
        for p in range(30):
            loop = attenuation_matrix(fit_cca(xs[p], ys[p]), side)
            assert np.abs(batch[p] - loop).max() < 1e-10 * max(1, np.abs(loop).max())


def test_batch_matches_loop_high_dim():
    rng = np.random.default_rng(10)
    xs = rng.standard_normal((10, 8, 30))
    ys = rng.standard_normal((10, 8, 25))
    batch = batch_attenuation(xs, ys)
    for p in range(10):
        loop = attenuation_matrix(fit_cca(xs[p], ys[p]))
        assert np.abs(batch[p] - loop).max() < 1e-8 * np.abs(loop).max()


def test_linear_model_samples_reach_population():
    jx, jy, sxx, syy, sxy = linear_model(1)
    _, x, y = sample_model(jx, jy, 3, 20000)
    lam = fit_cca(x, y).lam
    assert np.all(lam[:3] > 0.99)
    assert np.all(lam[3:] < 0.01)
