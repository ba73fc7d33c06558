"""Test objectives pulled back onto manifolds, with known optima for regret."""
import math
from dataclasses import dataclass

import numpy as np

from .domains import EigenvalueBox
from .exceptions import DegenerateGeodesicError
from .manifolds import SPD, Sphere, parse_manifold

ACKLEY_A = 20.0
ACKLEY_B = 0.2
ACKLEY_C = 2.0 * math.pi

# fixture constants for the bimodal SPD objective (not published values)
BIMODAL_W = (1.0, 0.7)
BIMODAL_S = (1.0, 1.0)


def ackley(z):
    z = np.asarray(z, dtype=float)
    if z.size == 0:
        raise ValueError("ackley needs a non-empty vector")
    r = math.sqrt(float(np.mean(z**2)))
    c = float(np.mean(np.cos(ACKLEY_C * z)))
    return -ACKLEY_A * math.exp(-ACKLEY_B * r) - math.exp(c) + ACKLEY_A + math.e


def _rotation(deg):
    t = math.radians(deg)
    return np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])


@dataclass
class Benchmark:
    """Objective ``fn(x)`` on ``manifold`` (inside ``domain``) with optimum ``(x_star, f_star)``."""

    name: str
    manifold: object
    domain: object
    base_point: object
    x_star: object
    f_star: float
    kind: str

    def __call__(self, x):
        if self.kind == "ackley":
            return ackley_on_manifold(self, x)
        if self.kind == "bimodal":
            return bimodal_spd(self, x)
        if self.kind == "constant":
            return 1.0
        raise ValueError(f"unknown benchmark kind {self.kind!r}")

    def tangent_coords(self, x):
        m = self.manifold
        try:
            u = m.log_map(self.base_point, x)
        except DegenerateGeodesicError:
            # antipode of the base point: any direction is a minimizing geodesic;
            # pin it to the first basis vector so the value stays finite and well defined
            c = np.zeros(m.dim)
            c[0] = math.pi
            return c
        return m.to_coords(self.base_point, u)


def ackley_on_manifold(b, x):
    return ackley(b.tangent_coords(x))


def bimodal_modes():
    r = _rotation(30.0)
    m1 = r @ np.diag([2.5, 0.5]) @ r.T
    m2 = np.diag([0.8, 2.0])
    return 0.5 * (m1 + m1.T), m2


def bimodal_spd(b, x):
    m = b.manifold
    total = 0.0
    for mode, w, s in zip(bimodal_modes(), BIMODAL_W, BIMODAL_S):
        total -= w * math.exp(-m.distance(x, mode) ** 2 / (2.0 * s * s))
    return total


def make_benchmark(name, lam_lo=1e-3, lam_hi=5.0):
    """Build a benchmark from ``<function>-<manifold>``, e.g. ``ackley-s3`` or ``bimodal-spd2``."""
    try:
        kind, mname = name.lower().split("-", 1)
        m = parse_manifold(mname)
    except ValueError as exc:
        raise ValueError(f"unknown benchmark {name!r}: {exc}") from None
    if isinstance(m, Sphere):
        domain = None
        base = np.zeros(m.ambient_dim)
        base[-1] = 1.0
    elif isinstance(m, SPD):
        domain = EigenvalueBox(m, lam_lo, lam_hi)
        base = domain.center
    else:
        raise ValueError(f"benchmarks are defined on spheres and SPD manifolds, not {mname!r}")

    if kind == "ackley":
        b = Benchmark(name, m, domain, base, base, 0.0, kind)
    elif kind == "constant":
        b = Benchmark(name, m, domain, base, base, 1.0, kind)
    elif kind == "bimodal":
        if not (isinstance(m, SPD) and m.n == 2):
            raise ValueError("the bimodal benchmark is defined on spd2 only")
        m1, m2 = bimodal_modes()
        b = Benchmark(name, m, domain, base, m1, 0.0, kind)
        b.x_star, b.f_star = _refine_bimodal(b, m1)
    else:
        raise ValueError(f"unknown benchmark function {kind!r}")
    if abs(b(b.x_star) - b.f_star) > 1e-10:
        raise AssertionError(f"{name}: objective(x_star) != f_star")
    return b


def _refine_bimodal(b, start):
    # the second mode pulls the mixture minimum slightly off M1; locate it exactly
    from .acquisition import fd_gradient
    from .optimizer import CGConfig, cg_minimize

    m = b.manifold

    def phi_batch(batch):
        return np.array([b(x) for x in m.unstack(batch)])

    cfg = CGConfig(max_iters=500, grad_tol=1e-10, initial_step=0.1)
    x, f = cg_minimize(b, lambda x: fd_gradient(m, x, phi_batch, 1e-6), m, start, cfg, b.domain)
    return x, float(b(x))


BENCHMARKS = (
    "ackley-s2", "ackley-s3", "ackley-s4", "ackley-spd2", "ackley-spd3", "bimodal-spd2",
    "constant-s2", "constant-s3", "constant-spd2",
)
