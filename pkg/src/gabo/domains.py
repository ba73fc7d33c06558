"""Bounded search domains inside a manifold and the projections back onto them."""
import numpy as np

from .exceptions import InfeasibleProjectionError, ManifoldMismatchError
from .manifolds import SPD, Product, Sphere

FEAS_TOL = 1e-10


class SphereBox:
    """Per-coordinate interval limits on a point of S^d.

    ``lower``/``upper`` may contain ``None`` (or +-inf) for unbounded coordinates.
    """

    def __init__(self, manifold, lower=None, upper=None):
        if not isinstance(manifold, Sphere):
            raise ManifoldMismatchError("SphereBox needs a Sphere manifold")
        n = manifold.ambient_dim
        self.manifold = manifold
        self.lower = _bounds(lower, n, -np.inf)
        self.upper = _bounds(upper, n, np.inf)
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound above upper bound")
        # smallest achievable squared norm with each coordinate in its interval
        closest = np.clip(0.0, self.lower, self.upper)
        farthest = np.maximum(np.abs(np.clip(self.lower, -1, 1)), np.abs(np.clip(self.upper, -1, 1)))
        if closest @ closest > 1.0 or farthest @ farthest < 1.0:
            raise ValueError("sphere bounds leave an empty feasible set")

    def contains(self, x, tol=FEAS_TOL):
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def project(self, x):
        if self.contains(x):
            return x
        z = np.array(x, dtype=float)
        fixed = np.zeros(z.shape, dtype=bool)
        # each round clamps at least one new coordinate, so d+1 rounds suffice
        for _ in range(z.size + 1):
            low, high = z < self.lower, z > self.upper
            violated = (low | high) & ~fixed
            if not violated.any():
                break
            z[low & ~fixed] = self.lower[low & ~fixed]
            z[high & ~fixed] = self.upper[high & ~fixed]
            fixed |= violated
            rest = 1.0 - z[fixed] @ z[fixed]
            if rest < -FEAS_TOL:
                raise InfeasibleProjectionError("clamped coordinates alone exceed unit norm")
            free_norm = np.linalg.norm(z[~fixed])
            if free_norm == 0.0:
                if rest > FEAS_TOL:
                    raise InfeasibleProjectionError("no free coordinate left to restore unit norm")
                break
            z[~fixed] *= np.sqrt(max(rest, 0.0)) / free_norm
        if not self.contains(z, tol=1e-8):
            raise InfeasibleProjectionError("projection did not reach the feasible set")
        return z

    def sample(self, rng, max_tries=10000):
        for _ in range(max_tries):
            x = self.manifold.random_point(rng)
            if self.contains(x):
                return x
        return self.project(self.manifold.random_point(rng))


class EigenvalueBox:
    """SPD matrices whose eigenvalues lie in ``[lo, hi]``."""

    def __init__(self, manifold, lo=1e-3, hi=5.0):
        if not isinstance(manifold, SPD):
            raise ManifoldMismatchError("EigenvalueBox needs an SPD manifold")
        if not 0 < lo < hi:
            raise ValueError(f"need 0 < lo < hi, got lo={lo}, hi={hi}")
        self.manifold = manifold
        self.lo = float(lo)
        self.hi = float(hi)

    def contains(self, x, tol=FEAS_TOL):
        w = np.linalg.eigvalsh(x)
        return bool(w[0] >= self.lo * (1 - tol) and w[-1] <= self.hi * (1 + tol))

    def project(self, x):
        w, v = np.linalg.eigh(x)
        if w[0] >= self.lo and w[-1] <= self.hi:
            return x
        w = np.clip(w, self.lo, self.hi)
        z = (v * w) @ v.T
        return 0.5 * (z + z.T)

    def sample(self, rng):
        return self.project(self.manifold.random_point(rng))

    @property
    def center(self):
        return np.sqrt(self.lo * self.hi) * np.eye(self.manifold.n)


class ProductDomain:
    """Per-factor domains; ``None`` leaves a factor unconstrained."""

    def __init__(self, manifold, factors):
        if not isinstance(manifold, Product) or len(factors) != len(manifold.factors):
            raise ManifoldMismatchError("ProductDomain needs one entry per product factor")
        self.manifold = manifold
        self.factors = tuple(factors)

    def contains(self, x, tol=FEAS_TOL):
        return all(d is None or d.contains(xi, tol) for d, xi in zip(self.factors, x))

    def project(self, x):
        if self.contains(x):
            return x
        return tuple(xi if d is None else d.project(xi) for d, xi in zip(self.factors, x))

    def sample(self, rng):
        return tuple(
            f.random_point(rng) if d is None else d.sample(rng)
            for f, d in zip(self.manifold.factors, self.factors)
        )


def project_to_domain(dom, x):
    return x if dom is None else dom.project(x)


def sample_feasible(m, dom, rng):
    return m.random_point(rng) if dom is None else dom.sample(rng)


def _bounds(b, n, fill):
    if b is None:
        return np.full(n, fill)
    out = np.array([fill if v is None else v for v in b], dtype=float)
    if out.shape != (n,):
        raise ValueError(f"expected {n} bounds, got {out.shape}")
    return out
