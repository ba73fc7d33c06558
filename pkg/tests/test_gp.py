import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gabo.exceptions import NotPositiveDefiniteError, ThresholdNotFoundError
from gabo.gp import GPModel, fit_mle, gp_posterior, log_marginal_likelihood
from gabo.kernels import (
    BetaMinConfig,
    KernelParams,
    estimate_beta_min,
    geodesic_se_kernel,
    kernel_matrix,
)
from gabo.manifolds import SPD, Euclidean, Product, Sphere


def dense_posterior(m, pts, y, params, noise, mu, q):
    """Posterior moments by explicit inversion; independent of the Cholesky path."""
    k = np.array([[geodesic_se_kernel(m, a, b, params) for b in pts] for a in pts])
    kq = np.array([geodesic_se_kernel(m, q, b, params) for b in pts])
    inv = np.linalg.inv(k + noise * np.eye(len(pts)))
    return mu + kq @ inv @ (np.asarray(y) - mu), params.theta - kq @ inv @ kq


def dense_lml(m, pts, y, params, noise, mu):
    k = np.array([[geodesic_se_kernel(m, a, b, params) for b in pts] for a in pts])
    a = k + noise * np.eye(len(pts))
    r = np.asarray(y) - mu
    return -0.5 * r @ np.linalg.inv(a) @ r - 0.5 * math.log(np.linalg.det(a)) - 0.5 * len(r) * math.log(2 * math.pi)


# -- kernel -------------------------------------------------------------------------


def test_kernel_at_zero_distance_is_theta():
    x = np.array([0, 0, 1.0])
    assert geodesic_se_kernel(Sphere(2), x, x, KernelParams(2.5, 7.0, 6.5)) == 2.5


def test_kernel_orthogonal_points():
    val = geodesic_se_kernel(Sphere(2), np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), KernelParams(1, 1))
    assert val == pytest.approx(math.exp(-math.pi**2 / 4))
    assert val == pytest.approx(0.08475, abs=1e-4)


def test_kernel_decreasing_in_beta():
    s = Sphere(2)
    x, y = np.array([1.0, 0, 0]), np.array([np.cos(0.02), np.sin(0.02), 0])
    k2 = geodesic_se_kernel(s, x, y, KernelParams(1, 1e2))
    k3 = geodesic_se_kernel(s, x, y, KernelParams(1, 1e3))
    assert 0 < k3 < k2


def test_product_kernel_is_product_of_factor_kernels():
    p = Product([Sphere(2), SPD(2)])
    rng = np.random.default_rng(0)
    x, y = p.random_point(rng), p.random_point(rng)
    params = KernelParams(1.7, 0.9)
    unit = KernelParams(1.0, 0.9)
    expected = 1.7 * np.prod([geodesic_se_kernel(f, a, b, unit) for f, a, b in zip(p.factors, x, y)])
    assert geodesic_se_kernel(p, x, y, params) == pytest.approx(expected)


def test_kernel_params_invariants():
    with pytest.raises(ValueError):
        KernelParams(theta=0.0)
    with pytest.raises(ValueError):
        KernelParams(beta=1.0, beta_min=2.0)


def test_kernel_matrix_single_and_duplicate():
    x = np.array([0, 0, 1.0])
    p = KernelParams(3.0, 2.0)
    np.testing.assert_array_equal(kernel_matrix(Sphere(2), [x], p), [[3.0]])
    k = kernel_matrix(Sphere(2), [x, x], p)
    np.testing.assert_allclose(k, 3.0 * np.ones((2, 2)))
    assert np.linalg.eigvalsh(k)[0] == pytest.approx(0.0, abs=1e-12)


def test_kernel_matrix_on_s3_at_published_beta_min_is_pd():
    rng = np.random.default_rng(42)
    s = Sphere(3)
    pts = [s.random_point(rng) for _ in range(50)]
    k = kernel_matrix(s, pts, KernelParams(1.0, 2.0))
    np.testing.assert_allclose(k, k.T)
    assert np.linalg.eigvalsh(k)[0] > 0


# -- beta_min ------------------------------------------------------------------------


def test_beta_min_table_is_monotone_above_threshold():
    cfg = BetaMinConfig(n_samples=60, n_repeats=3, beta_grid=np.logspace(-1, 2, 16))
    beta, table = estimate_beta_min(Sphere(3), cfg, np.random.default_rng(0))
    assert beta in table.beta
    assert np.all(table.pct_pd[table.beta >= beta] == 100.0)
    i = list(table.beta).index(beta)
    assert i == 0 or table.pct_pd[i - 1] < 100.0


def test_beta_min_flat_control_returns_grid_minimum():
    # the grid floor is kept where float64 can still resolve the smallest Gram eigenvalue
    grid = np.logspace(0, 2, 10)
    cfg = BetaMinConfig(n_samples=100, n_repeats=3, beta_grid=grid)
    beta, table = estimate_beta_min(Euclidean(3), cfg, np.random.default_rng(0))
    assert beta == grid[0]
    assert np.all(table.pct_pd == 100.0)


def test_beta_min_threshold_not_found_carries_table():
    cfg = BetaMinConfig(n_samples=80, n_repeats=2, beta_grid=np.array([0.01, 0.02]))
    with pytest.raises(ThresholdNotFoundError) as info:
        estimate_beta_min(Sphere(2), cfg, np.random.default_rng(0))
    assert list(info.value.table.beta) == [0.01, 0.02]


def test_beta_min_csv_columns(tmp_path):
    cfg = BetaMinConfig(n_samples=40, n_repeats=2, beta_grid=np.logspace(0, 2, 5))
    _, table = estimate_beta_min(SPD(2), cfg, np.random.default_rng(0))
    path = tmp_path / "bm.csv"
    table.write_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["beta", "pct_pd", "lambda_min_q25", "lambda_min_q50", "lambda_min_q75"]
    assert len(rows) == 6
    q = [float(v) for v in rows[1][2:]]
    assert q[0] <= q[1] <= q[2]


def test_beta_grid_must_increase():
    with pytest.raises(ValueError):
        estimate_beta_min(Sphere(2), BetaMinConfig(beta_grid=np.array([2.0, 1.0])))


# -- posterior -----------------------------------------------------------------------


def test_prior_without_observations():
    model = GPModel.condition(Sphere(2), [], [], KernelParams(2.0, 6.5, 6.5), mean_const=0.7)
    assert gp_posterior(model, np.array([0, 0, 1.0])) == (0.7, 2.0)


def test_interpolation_at_observed_point():
    s = Sphere(2)
    rng = np.random.default_rng(3)
    pts = [s.random_point(rng) for _ in range(6)]
    y = rng.standard_normal(6)
    model = GPModel.condition(s, pts, y, KernelParams(1.0, 6.5, 6.5), noise_var=1e-12)
    mean, var = gp_posterior(model, pts[2])
    assert mean == pytest.approx(y[2], abs=1e-4)
    assert var < 1e-6


@pytest.mark.parametrize("m", [Sphere(2), SPD(2), Product([Sphere(2), SPD(2)])], ids=repr)
def test_posterior_matches_dense_oracle(m):
    rng = np.random.default_rng(5)
    pts = [m.random_point(rng) for _ in range(10)]
    y = rng.standard_normal(10)
    params = KernelParams(1.3, 6.5)
    model = GPModel.condition(m, pts, y, params, noise_var=1e-3, mean_const=0.2)
    for _ in range(5):
        q = m.random_point(rng)
        mean, var = gp_posterior(model, q)
        em, ev = dense_posterior(m, pts, y, params, 1e-3, 0.2, q)
        assert mean == pytest.approx(em, rel=1e-8, abs=1e-12)
        assert var == pytest.approx(ev, rel=1e-8, abs=1e-12)


def test_lml_single_point_standard_normal():
    x = np.array([0, 0, 1.0])
    val = log_marginal_likelihood(Sphere(2), [x], [0.5], KernelParams(1.0, 1.0), 0.0, 0.5)
    assert val == pytest.approx(-0.5 * math.log(2 * math.pi))
    assert val == pytest.approx(-0.9189, abs=1e-4)


def test_lml_matches_determinant_oracle():
    rng = np.random.default_rng(9)
    for m in [Sphere(3), SPD(2)] * 5:
        pts = [m.random_point(rng) for _ in range(8)]
        y = rng.standard_normal(8)
        params = KernelParams(rng.uniform(0.5, 2), rng.uniform(2, 10))
        got = log_marginal_likelihood(m, pts, y, params, 1e-2, 0.1)
        assert got == pytest.approx(dense_lml(m, pts, y, params, 1e-2, 0.1), rel=1e-8)


def test_lml_penalizes_larger_residuals():
    s = Sphere(3)
    rng = np.random.default_rng(4)
    pts = [s.random_point(rng) for _ in range(8)]
    r = rng.standard_normal(8)
    p = KernelParams(1.0, 2.0)
    assert log_marginal_likelihood(s, pts, 10 * r, p, 1e-2, 0.0) < log_marginal_likelihood(s, pts, r, p, 1e-2, 0.0)


def test_lml_not_pd_raises():
    x = np.array([0, 0, 1.0])
    with pytest.raises(NotPositiveDefiniteError):
        log_marginal_likelihood(Sphere(2), [x, x], [0.0, 1.0], KernelParams(1.0, 1.0), 0.0, 0.0)


# -- fitting -------------------------------------------------------------------------


def test_fit_constant_data():
    s = Sphere(3)
    rng = np.random.default_rng(0)
    pts = [s.random_point(rng) for _ in range(8)]
    model = fit_mle(s, pts, np.full(8, 3.0), beta_min=2.0, rng=rng)
    assert model.noise_var < 1e-3
    assert np.allclose(model.alpha, 0.0)
    for _ in range(5):
        assert gp_posterior(model, s.random_point(rng))[0] == pytest.approx(3.0)


def test_fit_respects_beta_min():
    s = Sphere(2)
    rng = np.random.default_rng(1)
    pts = [s.random_point(rng) for _ in range(15)]
    # a very smooth function favours small lengthscale parameters
    y = np.array([p[0] for p in pts])
    model = fit_mle(s, pts, y, beta_min=6.5, rng=rng)
    assert model.params.beta >= 6.5
    assert model.params.beta_min == 6.5


def test_fit_beats_generating_parameters():
    s = Sphere(3)
    rng = np.random.default_rng(2024)
    pts = [s.random_point(rng) for _ in range(100)]
    true = KernelParams(2.0, 4.0, 2.0)
    noise = 0.01
    k = kernel_matrix(s, pts, true) + noise * np.eye(100)
    y = 1.5 + np.linalg.cholesky(k) @ rng.standard_normal(100)
    model = fit_mle(s, pts, y, beta_min=2.0, rng=np.random.default_rng(0))
    fitted = log_marginal_likelihood(s, pts, y, model.params, model.noise_var, model.mean_const)
    at_truth = log_marginal_likelihood(s, pts, y, true, noise, model.mean_const)
    assert fitted >= at_truth - 1e-6


def test_fit_needs_two_points():
    with pytest.raises(ValueError):
        fit_mle(Sphere(2), [np.array([0, 0, 1.0])], [1.0])


def test_cholesky_reconstructs_covariance():
    s = Sphere(2)
    rng = np.random.default_rng(6)
    pts = [s.random_point(rng) for _ in range(12)]
    model = GPModel.condition(s, pts, rng.standard_normal(12), KernelParams(1.0, 6.5), 1e-6)
    a = kernel_matrix(s, pts, model.params) + 1e-6 * np.eye(12)
    np.testing.assert_allclose(model.chol @ model.chol.T, a, rtol=1e-8, atol=1e-14)
    np.testing.assert_allclose(np.diag(kernel_matrix(s, pts, model.params)), 1.0)


# -- properties ----------------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 10))
def test_variance_bounded_and_shrinks_with_data(seed, n):
    s = Sphere(2)
    rng = np.random.default_rng(seed)
    pts = [s.random_point(rng) for _ in range(n + 1)]
    y = rng.standard_normal(n + 1)
    params = KernelParams(1.5, 6.5, 6.5)
    small = GPModel.condition(s, pts[:n], y[:n], params, 1e-6)
    big = small.with_observation(pts[n], y[n])
    q = s.random_point(rng)
    v_small = gp_posterior(small, q)[1]
    v_big = gp_posterior(big, q)[1]
    assert 0 <= v_small <= params.theta + 1e-8
    assert v_big <= v_small + 1e-8


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_kernel_bounded_and_symmetric(seed):
    m = SPD(2)
    rng = np.random.default_rng(seed)
    x, y = m.random_point(rng), m.random_point(rng)
    p = KernelParams(1.2, 0.6, 0.6)
    k = geodesic_se_kernel(m, x, y, p)
    assert 0 < k < 1.2
    assert k == pytest.approx(geodesic_se_kernel(m, y, x, p), rel=1e-10)
