"""Geometry of the search spaces: hyperspheres, SPD matrices and their products.

Points and tangent vectors are plain numpy arrays (tuples of arrays for
products); the manifold object carries the geometry. A *batch* of points is
the stacked array (or tuple of stacked arrays) returned by ``stack``.
"""
import math

import numpy as np

from . import _linalg as la
from .exceptions import DegenerateGeodesicError, ManifoldMismatchError

POINT_TOL = 1e-10
ANTIPODAL_TOL = 1e-12
SMALL_STEP = 1e-12


class Manifold:
    """Common interface. Subclasses implement the geometry for one representation."""

    name = "manifold"

    @property
    def dim(self):
        raise NotImplementedError

    def check_point(self, x):
        raise NotImplementedError

    def check_tangent(self, x, u):
        raise NotImplementedError

    def distance(self, x, y):
        raise NotImplementedError

    def exp_map(self, x, u):
        raise NotImplementedError

    def exp_many(self, x, us):
        """Batch of ``exp_map(x, u)`` for every tangent vector in ``us``."""
        return self.stack([self.exp_map(x, u) for u in us])

    def log_map(self, x, y):
        raise NotImplementedError

    def parallel_transport(self, x, y, v):
        raise NotImplementedError

    def metric(self, x, u, v):
        raise NotImplementedError

    def norm(self, x, u):
        return math.sqrt(max(self.metric(x, u, u), 0.0))

    def project_to_tangent(self, x, w):
        raise NotImplementedError

    def random_point(self, rng):
        raise NotImplementedError

    def tangent_basis(self, x):
        """Metric-orthonormal basis of the tangent space at ``x``, as a list."""
        raise NotImplementedError

    def to_coords(self, x, u):
        """Coordinates of ``u`` in ``tangent_basis(x)``."""
        return np.array([self.metric(x, u, e) for e in self.tangent_basis(x)])

    def from_coords(self, x, c):
        basis = self.tangent_basis(x)
        out = self.zero_vector(x)
        for ci, e in zip(c, basis):
            out = self.add(out, self.scale(e, ci))
        return out

    def zero_vector(self, x):
        return np.zeros_like(x)

    def add(self, u, v):
        return u + v

    def scale(self, u, a):
        return a * u

    def stack(self, points):
        return np.stack([np.asarray(p, dtype=float) for p in points])

    def unstack(self, batch):
        return [b for b in batch]

    def pairwise_sq_dist(self, a, b):
        """Squared geodesic distances between two batches, shape ``(len(a), len(b))``."""
        raise NotImplementedError

    def allclose(self, x, y, atol=1e-8):
        return np.allclose(x, y, atol=atol)

    def __eq__(self, other):
        return type(self) is type(other) and self._key() == other._key()

    def __hash__(self):
        return hash((type(self).__name__, self._key()))

    def _key(self):
        raise NotImplementedError


class Sphere(Manifold):
    """Unit sphere S^d embedded in R^(d+1)."""

    def __init__(self, d):
        if int(d) < 1:
            raise ValueError(f"sphere dimension must be >= 1, got {d}")
        self.d = int(d)
        self.name = f"s{self.d}"

    def _key(self):
        return (self.d,)

    def __repr__(self):
        return f"Sphere({self.d})"

    @property
    def dim(self):
        return self.d

    @property
    def ambient_dim(self):
        return self.d + 1

    def check_point(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d + 1,):
            raise ManifoldMismatchError(f"expected shape ({self.d + 1},), got {x.shape}")
        if abs(np.linalg.norm(x) - 1.0) > POINT_TOL:
            raise ManifoldMismatchError(f"point norm {np.linalg.norm(x)!r} is not 1")
        return x

    def check_tangent(self, x, u):
        u = np.asarray(u, dtype=float)
        if u.shape != (self.d + 1,):
            raise ManifoldMismatchError(f"expected shape ({self.d + 1},), got {u.shape}")
        if abs(x @ u) > POINT_TOL * max(1.0, np.linalg.norm(u)):
            raise ManifoldMismatchError("vector is not tangent to the sphere at x")
        return u

    def _angle(self, x, y):
        # atan2 form of arccos(x.y); stays accurate near 0 and pi
        c = float(np.clip(x @ y, -1.0, 1.0))
        s = float(np.linalg.norm(y - c * x))
        return math.atan2(s, c), c, s

    def distance(self, x, y):
        if np.shape(x) != np.shape(y):
            raise ManifoldMismatchError(f"shape mismatch {np.shape(x)} vs {np.shape(y)}")
        return self._angle(x, y)[0]

    def exp_map(self, x, u):
        nu = float(np.linalg.norm(u))
        if nu < SMALL_STEP:
            return np.array(x, dtype=float)
        y = x * math.cos(nu) + (u / nu) * math.sin(nu)
        return y / np.linalg.norm(y)

    def log_map(self, x, y):
        theta, c, s = self._angle(x, y)
        if s < ANTIPODAL_TOL:
            if c > 0:
                return np.zeros_like(x, dtype=float)
            raise DegenerateGeodesicError("log map between antipodal points")
        return theta * (y - c * x) / s

    def parallel_transport(self, x, y, v):
        u = self.log_map(x, y)
        nu = float(np.linalg.norm(u))
        if nu < SMALL_STEP:
            return np.array(v, dtype=float)
        ub = u / nu
        a = ub @ v
        out = v - a * ub + a * (math.cos(nu) * ub - math.sin(nu) * x)
        return out - (y @ out) * y

    def metric(self, x, u, v):
        return float(np.dot(u, v))

    def project_to_tangent(self, x, w):
        return w - (x @ w) * x

    def random_point(self, rng):
        g = rng.standard_normal(self.d + 1)
        return g / np.linalg.norm(g)

    def tangent_basis(self, x):
        # Gram-Schmidt of the ambient axes against x, dropping the axis most aligned with x
        skip = int(np.argmax(np.abs(x)))
        basis = [np.asarray(x, dtype=float)]
        for i in range(self.d + 1):
            if i == skip:
                continue
            e = np.zeros(self.d + 1)
            e[i] = 1.0
            for b in basis:
                e = e - (b @ e) * b
            basis.append(e / np.linalg.norm(e))
        return basis[1:]

    def pairwise_sq_dist(self, a, b):
        g = np.clip(a @ b.T, -1.0, 1.0)
        return np.arccos(g) ** 2


class SPD(Manifold):
    """Symmetric positive-definite D x D matrices with the affine-invariant metric."""

    def __init__(self, n):
        if int(n) < 2:
            raise ValueError(f"SPD matrix size must be >= 2, got {n}")
        self.n = int(n)
        self.name = f"spd{self.n}"
        self._basis = la.mandel_basis(self.n)

    def _key(self):
        return (self.n,)

    def __repr__(self):
        return f"SPD({self.n})"

    @property
    def dim(self):
        return self.n * (self.n + 1) // 2

    @property
    def ambient_dim(self):
        return self.dim

    def check_point(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n, self.n):
            raise ManifoldMismatchError(f"expected shape ({self.n}, {self.n}), got {x.shape}")
        if np.max(np.abs(x - x.T)) > POINT_TOL * max(1.0, np.max(np.abs(x))):
            raise ManifoldMismatchError("matrix is not symmetric")
        if np.linalg.eigvalsh(x)[0] <= 0:
            raise ManifoldMismatchError("matrix is not positive definite")
        return x

    def check_tangent(self, x, u):
        u = np.asarray(u, dtype=float)
        if u.shape != (self.n, self.n):
            raise ManifoldMismatchError(f"expected shape ({self.n}, {self.n}), got {u.shape}")
        if np.max(np.abs(u - u.T)) > POINT_TOL * max(1.0, np.max(np.abs(u))):
            raise ManifoldMismatchError("tangent matrix is not symmetric")
        return u

    def distance(self, x, y):
        if np.shape(x) != np.shape(y):
            raise ManifoldMismatchError(f"shape mismatch {np.shape(x)} vs {np.shape(y)}")
        w = np.linalg.eigvalsh(la.invsqrtm(x) @ y @ la.invsqrtm(x))
        return float(np.sqrt(np.sum(np.log(w) ** 2)))

    def exp_map(self, x, u):
        if not np.any(u):
            return np.array(x, dtype=float)
        s, si = la.sqrt_and_invsqrt(x)
        return la.sym(s @ la.expm(la.sym(si @ u @ si)) @ s)

    def log_map(self, x, y):
        s, si = la.sqrt_and_invsqrt(x)
        return la.sym(s @ la.logm(la.sym(si @ y @ si)) @ s)

    def parallel_transport(self, x, y, v):
        a = la.sqrtm(y) @ la.invsqrtm(x)
        return la.sym(a @ v @ a.T)

    def metric(self, x, u, v):
        xi = np.linalg.inv(x)
        return float(np.trace(xi @ u @ xi @ v))

    def project_to_tangent(self, x, w):
        return x @ la.sym(np.asarray(w, dtype=float)) @ x

    def random_point(self, rng, scale=0.5, log_bounds=(math.log(1e-3), math.log(5.0))):
        s = la.from_mandel(scale * rng.standard_normal(self.dim), self.n)
        w, v = np.linalg.eigh(s)
        w = np.clip(w, *log_bounds)
        return la.sym((v * np.exp(w)) @ v.T)

    def tangent_basis(self, x):
        s = la.sqrtm(x)
        return [la.sym(s @ e @ s) for e in self._basis]

    def to_coords(self, x, u):
        si = la.invsqrtm(x)
        return la.to_mandel(la.sym(si @ u @ si))

    def from_coords(self, x, c):
        s = la.sqrtm(x)
        return la.sym(s @ la.from_mandel(c, self.n) @ s)

    def exp_many(self, x, us):
        s, si = la.sqrt_and_invsqrt(x)
        return la.sym(s @ la.expm(la.sym(si @ np.asarray(us) @ si)) @ s)

    def pairwise_sq_dist(self, a, b):
        if self.n == 2:
            return _spd2_pairwise_sq_dist(a, b)
        si = la.invsqrtm(a)
        m = si[:, None] @ b[None, :] @ si[:, None]
        w = np.linalg.eigvalsh(la.sym(m))
        return np.sum(np.log(np.maximum(w, la.EIG_FLOOR)) ** 2, axis=-1)


def _spd2_pairwise_sq_dist(a, b):
    # generalized eigenvalues of (b, a) are the roots of det(b - lam a) = 0
    a0, a1, a2 = a[:, 0, 0, None], a[:, 0, 1, None], a[:, 1, 1, None]
    b0, b1, b2 = b[None, :, 0, 0], b[None, :, 0, 1], b[None, :, 1, 1]
    det_a = a0 * a2 - a1 * a1
    det_b = b0 * b2 - b1 * b1
    t = a0 * b2 + a2 * b0 - 2.0 * a1 * b1
    root = np.sqrt(np.maximum(t * t - 4.0 * det_a * det_b, 0.0))
    # both roots written without cancellation
    hi = (t + root) / (2.0 * det_a)
    lo = 2.0 * det_b / (t + root)
    log_hi = np.log(np.maximum(hi, la.EIG_FLOOR))
    log_lo = np.log(np.maximum(lo, la.EIG_FLOOR))
    return log_hi**2 + log_lo**2


class Euclidean(Manifold):
    """Flat R^n. Used for the Euclidean baselines and as a curvature-free control."""

    def __init__(self, n):
        if int(n) < 1:
            raise ValueError(f"Euclidean dimension must be >= 1, got {n}")
        self.n = int(n)
        self.name = f"r{self.n}"

    def _key(self):
        return (self.n,)

    def __repr__(self):
        return f"Euclidean({self.n})"

    @property
    def dim(self):
        return self.n

    @property
    def ambient_dim(self):
        return self.n

    def check_point(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ManifoldMismatchError(f"expected shape ({self.n},), got {x.shape}")
        return x

    def check_tangent(self, x, u):
        return self.check_point(u)

    def distance(self, x, y):
        if np.shape(x) != np.shape(y):
            raise ManifoldMismatchError(f"shape mismatch {np.shape(x)} vs {np.shape(y)}")
        return float(np.linalg.norm(np.asarray(x) - np.asarray(y)))

    def exp_map(self, x, u):
        return np.asarray(x, dtype=float) + u

    def log_map(self, x, y):
        return np.asarray(y, dtype=float) - x

    def parallel_transport(self, x, y, v):
        return np.array(v, dtype=float)

    def metric(self, x, u, v):
        return float(np.dot(u, v))

    def project_to_tangent(self, x, w):
        return np.array(w, dtype=float)

    def random_point(self, rng):
        return rng.standard_normal(self.n)

    def tangent_basis(self, x):
        return list(np.eye(self.n))

    def to_coords(self, x, u):
        return np.array(u, dtype=float)

    def from_coords(self, x, c):
        return np.array(c, dtype=float)

    def pairwise_sq_dist(self, a, b):
        d = np.sum(a**2, 1)[:, None] + np.sum(b**2, 1)[None, :] - 2.0 * a @ b.T
        return np.maximum(d, 0.0)


class Product(Manifold):
    """Cartesian product; points and tangent vectors are tuples of factor values."""

    def __init__(self, factors):
        factors = tuple(factors)
        if not factors:
            raise ValueError("product manifold needs at least one factor")
        self.factors = factors
        self.name = "x".join(f.name for f in factors)

    def _key(self):
        return self.factors

    def __repr__(self):
        return f"Product({list(self.factors)!r})"

    @property
    def dim(self):
        return sum(f.dim for f in self.factors)

    @property
    def ambient_dim(self):
        return sum(f.ambient_dim for f in self.factors)

    def _zip(self, *args):
        for a in args:
            if not isinstance(a, (tuple, list)) or len(a) != len(self.factors):
                raise ManifoldMismatchError(f"expected a {len(self.factors)}-tuple")
        return zip(self.factors, *args)

    def check_point(self, x):
        return tuple(f.check_point(xi) for f, xi in self._zip(x))

    def check_tangent(self, x, u):
        return tuple(f.check_tangent(xi, ui) for f, xi, ui in self._zip(x, u))

    def distance(self, x, y):
        return math.sqrt(sum(f.distance(a, b) ** 2 for f, a, b in self._zip(x, y)))

    def exp_map(self, x, u):
        return tuple(f.exp_map(a, b) for f, a, b in self._zip(x, u))

    def log_map(self, x, y):
        return tuple(f.log_map(a, b) for f, a, b in self._zip(x, y))

    def parallel_transport(self, x, y, v):
        return tuple(f.parallel_transport(a, b, c) for f, a, b, c in self._zip(x, y, v))

    def metric(self, x, u, v):
        return sum(f.metric(a, b, c) for f, a, b, c in self._zip(x, u, v))

    def project_to_tangent(self, x, w):
        return tuple(f.project_to_tangent(a, b) for f, a, b in self._zip(x, w))

    def random_point(self, rng):
        return tuple(f.random_point(rng) for f in self.factors)

    def tangent_basis(self, x):
        basis = []
        zeros = [f.zero_vector(xi) for f, xi in self._zip(x)]
        for i, (f, xi) in enumerate(self._zip(x)):
            for e in f.tangent_basis(xi):
                vec = list(zeros)
                vec[i] = e
                basis.append(tuple(vec))
        return basis

    def to_coords(self, x, u):
        return np.concatenate([f.to_coords(a, b) for f, a, b in self._zip(x, u)])

    def from_coords(self, x, c):
        out, i = [], 0
        for f, xi in self._zip(x):
            out.append(f.from_coords(xi, c[i : i + f.dim]))
            i += f.dim
        return tuple(out)

    def zero_vector(self, x):
        return tuple(f.zero_vector(xi) for f, xi in self._zip(x))

    def add(self, u, v):
        return tuple(a + b for a, b in zip(u, v))

    def scale(self, u, a):
        return tuple(a * ui for ui in u)

    def stack(self, points):
        return tuple(f.stack([p[i] for p in points]) for i, f in enumerate(self.factors))

    def unstack(self, batch):
        return list(zip(*[f.unstack(b) for f, b in zip(self.factors, batch)]))

    def pairwise_sq_dist(self, a, b):
        return sum(f.pairwise_sq_dist(x, y) for f, x, y in zip(self.factors, a, b))

    def allclose(self, x, y, atol=1e-8):
        return all(f.allclose(a, b, atol) for f, a, b in self._zip(x, y))


def batch_size(batch):
    if isinstance(batch, tuple):
        return len(batch[0])
    return len(batch)


def sample_wrapped_gaussian(m, mean, cov, rng):
    """Push a tangent-space Gaussian N(0, cov) at ``mean`` through the exponential map.

    ``cov`` is expressed in the coordinates of ``m.tangent_basis(mean)``.
    """
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.shape != (m.dim, m.dim):
        raise ManifoldMismatchError(f"covariance must be {m.dim}x{m.dim}, got {cov.shape}")
    w, v = np.linalg.eigh(0.5 * (cov + cov.T))
    root = v * np.sqrt(np.maximum(w, 0.0))
    c = root @ rng.standard_normal(m.dim)
    if not np.any(c):
        return mean
    return m.exp_map(mean, m.from_coords(mean, c))


def parse_manifold(name):
    """Build a manifold from a short name: ``s3``, ``spd2``, ``r3`` or ``s2xspd2``."""
    name = name.strip().lower()
    if "x" in name and not name.startswith("x"):
        return Product([parse_manifold(p) for p in name.split("x")])
    for prefix, cls in (("spd", SPD), ("s", Sphere), ("r", Euclidean)):
        if name.startswith(prefix) and name[len(prefix):].isdigit():
            return cls(int(name[len(prefix):]))
    raise ValueError(f"unknown manifold {name!r}; expected e.g. s3, spd2, r3, s2xspd2")
