import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gabo.acquisition import (
    AcquisitionProblem,
    ei_from_moments,
    expected_improvement,
    fd_gradient,
    riemannian_gradient,
)
from gabo.gp import GPModel
from gabo.kernels import KernelParams
from gabo.manifolds import SPD, Sphere


def ei_scalar(mean, var, inc, sense="minimize"):
    return float(ei_from_moments(np.array([mean]), np.array([var]), inc, sense)[0])


def small_model(m, n=6, seed=0, beta=6.5, shift=0.0):
    rng = np.random.default_rng(seed)
    pts = [m.random_point(rng) for _ in range(n)]
    y = rng.standard_normal(n) + shift
    return GPModel.condition(m, pts, y, KernelParams(1.0, beta), 1e-6, mean_const=float(np.mean(y)))


def test_ei_no_improvement_no_uncertainty():
    assert ei_scalar(1.0, 0.0, 1.0) == 0.0


def test_ei_dominant_improvement():
    assert ei_scalar(-9.0, 1e-6, 1.0) == pytest.approx(10.0, rel=1e-6)


def test_ei_at_zero_z():
    assert ei_scalar(1.0, 1.0, 1.0) == pytest.approx(0.39894, abs=1e-5)
    assert ei_scalar(1.0, 1.0, 1.0, "maximize") == pytest.approx(1 / math.sqrt(2 * math.pi))


def test_ei_deterministic_limit_is_clamped_improvement():
    assert ei_scalar(0.5, 1e-30, 1.0) == 0.5
    assert ei_scalar(1.5, 1e-30, 1.0) == 0.0
    assert ei_scalar(1.5, 1e-30, 1.0, "maximize") == 0.5


def test_incumbent_follows_sense():
    model = small_model(Sphere(2))
    assert AcquisitionProblem.from_model(model).incumbent == model.y.min()
    assert AcquisitionProblem.from_model(model, "maximize").incumbent == model.y.max()
    with pytest.raises(ValueError):
        AcquisitionProblem(model, 0.0, "sideways")


def test_gradient_vanishes_far_from_data():
    s = Sphere(2)
    pts = [np.array([0, 0, 1.0]), np.array([0, 0.1, 1.0]) / np.linalg.norm([0, 0.1, 1.0])]
    model = GPModel.condition(s, pts, [0.0, 1.0], KernelParams(1.0, 1e3), 1e-6, mean_const=0.5)
    prob = AcquisitionProblem.from_model(model)
    g = riemannian_gradient(prob, np.array([0, 0, -1.0]))
    assert s.norm(np.array([0, 0, -1.0]), g) < 1e-6


@pytest.mark.parametrize("m", [Sphere(2), Sphere(3), SPD(2)], ids=repr)
def test_gradient_is_tangent(m):
    prob = AcquisitionProblem.from_model(small_model(m, beta=2.0))
    x = m.random_point(np.random.default_rng(1))
    g = riemannian_gradient(prob, x)
    m.check_tangent(x, g)
    if isinstance(m, Sphere):
        assert abs(x @ g) < 1e-12


@pytest.mark.parametrize("m", [Sphere(2), SPD(2)], ids=repr)
def test_central_gradient_matches_forward_difference(m):
    prob = AcquisitionProblem.from_model(small_model(m, beta=2.0))
    rng = np.random.default_rng(2)
    x = m.random_point(rng)

    def phi_batch(b):
        return -np.array([expected_improvement(prob, p) for p in m.unstack(b)])

    g = riemannian_gradient(prob, x)
    h = prob.fd_step / 2
    f0 = phi_batch(m.stack([x]))[0]
    for e in m.tangent_basis(x):
        fwd = (phi_batch(m.stack([m.exp_map(x, m.scale(e, h))]))[0] - f0) / h
        assert m.metric(x, g, e) == pytest.approx(fwd, abs=50 * h)


@pytest.mark.parametrize("m", [Sphere(3), SPD(2)], ids=repr)
def test_directional_derivative(m):
    prob = AcquisitionProblem.from_model(small_model(m, beta=2.0, seed=4))
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(10):
        x = m.random_point(rng)
        g = riemannian_gradient(prob, x)
        v = m.from_coords(x, rng.standard_normal(m.dim))
        v = m.scale(v, 1.0 / m.norm(x, v))
        h = 1e-6
        fd = (-expected_improvement(prob, m.exp_map(x, m.scale(v, h))) + expected_improvement(prob, x)) / h
        if abs(fd) < 1e-4:
            continue
        assert m.metric(x, g, v) == pytest.approx(fd, rel=5e-3)
        checked += 1
    assert checked >= 3


def test_fd_gradient_of_linear_functional_on_sphere():
    s = Sphere(2)
    p = np.array([0.0, 0.0, 1.0])
    x = np.array([1.0, 0.0, 0.0])

    def phi(b):
        return -(b @ p)

    g = fd_gradient(s, x, phi, 1e-5)
    np.testing.assert_allclose(g, -(p - (x @ p) * x), atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(-100, 100))
def test_ei_shift_equivariance(seed, c):
    s = Sphere(2)
    a = small_model(s, seed=seed % 1000)
    b = GPModel.condition(s, a.points, a.y + c, a.params, a.noise_var, mean_const=a.mean_const + c)
    x = s.random_point(np.random.default_rng(seed))
    ea = expected_improvement(AcquisitionProblem.from_model(a), x)
    eb = expected_improvement(AcquisitionProblem.from_model(b), x)
    assert ea >= 0
    assert eb == pytest.approx(ea, abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_ei_nonnegative(seed):
    m = SPD(2)
    prob = AcquisitionProblem.from_model(small_model(m, seed=seed % 997, beta=0.6))
    x = m.random_point(np.random.default_rng(seed))
    assert expected_improvement(prob, x) >= 0.0
