import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gabo.benchmarks import (
    BENCHMARKS,
    BIMODAL_S,
    BIMODAL_W,
    ackley,
    bimodal_modes,
    make_benchmark,
)
from gabo.manifolds import SPD


def reference_ackley(z, a=20.0, b=0.2, c=2 * math.pi):
    # plain-loop implementation kept independent of the vectorized one
    n = len(z)
    s1 = sum(v * v for v in z) / n
    s2 = sum(math.cos(c * v) for v in z) / n
    return -a * math.exp(-b * math.sqrt(s1)) - math.exp(s2) + a + math.e


def test_ackley_minimum():
    assert ackley([0.0, 0.0, 0.0]) == pytest.approx(0.0, abs=1e-12)


def test_ackley_known_value():
    assert ackley([1.0, 1.0]) == pytest.approx(3.6254, abs=1e-4)
    assert ackley([1.0, 1.0]) == pytest.approx(reference_ackley([1.0, 1.0]), rel=1e-14)


def test_ackley_empty_raises():
    with pytest.raises(ValueError):
        ackley([])


@settings(max_examples=50)
@given(st.lists(st.floats(-30, 30), min_size=1, max_size=6))
def test_ackley_even_and_matches_reference(z):
    z = np.array(z)
    assert ackley(z) == pytest.approx(ackley(-z), abs=1e-12)
    assert ackley(z) == pytest.approx(reference_ackley(list(z)), abs=1e-10)


@pytest.mark.parametrize("name", BENCHMARKS)
def test_registry_optimum_consistent(name):
    b = make_benchmark(name)
    assert abs(b(b.x_star) - b.f_star) <= 1e-10
    b.manifold.check_point(b.x_star)


def test_unknown_benchmarks_rejected():
    for name in ("rosenbrock-s2", "ackley-q7", "bimodal-s2", "ackley"):
        with pytest.raises(ValueError):
            make_benchmark(name)


@pytest.mark.parametrize("name", ["ackley-s2", "ackley-spd2"])
def test_ackley_zero_at_base(name):
    b = make_benchmark(name)
    assert b(b.base_point) == pytest.approx(0.0, abs=1e-12)


def test_sphere_ackley_along_basis_geodesic():
    b = make_benchmark("ackley-s2")
    s = b.manifold
    e = s.tangent_basis(b.base_point)[0]
    for phi in (0.1, 0.7, 2.0):
        x = math.cos(phi) * b.base_point + math.sin(phi) * e
        assert b(x) == pytest.approx(ackley([phi, 0.0]), abs=1e-10)


def test_sphere_ackley_antipode_is_finite():
    b = make_benchmark("ackley-s2")
    assert b(-b.base_point) == pytest.approx(ackley([math.pi, 0.0]))


def test_value_depends_only_on_point():
    # two tangent parameterizations of the same point: u and u + 2*pi*u/|u|
    b = make_benchmark("ackley-s3")
    s = b.manifold
    rng = np.random.default_rng(0)
    u = s.project_to_tangent(b.base_point, rng.standard_normal(4))
    u *= 1.0 / np.linalg.norm(u)
    x1 = s.exp_map(b.base_point, 0.8 * u)
    x2 = s.exp_map(b.base_point, (0.8 + 2 * math.pi) * u)
    assert b(x1) == pytest.approx(b(x2), abs=1e-10)


@pytest.mark.parametrize("name", ["ackley-s3", "ackley-spd2"])
def test_ackley_on_manifold_positive_away_from_base(name):
    b = make_benchmark(name)
    rng = np.random.default_rng(1)
    m = b.manifold
    for _ in range(10_000 if name.endswith("s3") else 2000):
        x = m.random_point(rng)
        if m.distance(x, b.base_point) > 1e-6:
            assert b(x) > 1e-9


def test_bimodal_modes_and_values():
    b = make_benchmark("bimodal-spd2")
    m1, m2 = bimodal_modes()
    d = b.manifold.distance(m1, m2)
    at_m1 = -(BIMODAL_W[0] + BIMODAL_W[1] * math.exp(-d * d / (2 * BIMODAL_S[1] ** 2)))
    assert b(m1) == pytest.approx(at_m1, abs=1e-12)
    assert b(m2) > b(m1)
    # the second mode pulls the true minimum off m1, so the refined optimum is lower still
    assert b.f_star <= b(m1)
    assert b.domain.contains(m1) and b.domain.contains(m2)


def test_bimodal_far_field_vanishes():
    b = make_benchmark("bimodal-spd2")
    far = np.diag([1e-3 * 1.0001, 1e-3 * 1.0001])
    m1, m2 = bimodal_modes()
    assert min(b.manifold.distance(far, m1), b.manifold.distance(far, m2)) > 6 * max(BIMODAL_S)
    assert b(far) > -1e-6


def test_spd_base_is_domain_centre():
    b = make_benchmark("ackley-spd3")
    assert isinstance(b.manifold, SPD)
    np.testing.assert_allclose(b.base_point, math.sqrt(1e-3 * 5.0) * np.eye(3))
