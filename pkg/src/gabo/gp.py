"""Gaussian-process surrogate over a manifold with a geodesic SE kernel."""
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize

from .exceptions import FittingError, NotPositiveDefiniteError
from .kernels import KernelParams, se_from_sq_dist
from .manifolds import batch_size

BETA_MAX = 1e4
BETA_FLOOR = 1e-3
NOISE_FLOOR = 1e-8
JITTER = 1e-8
LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class GPModel:
    """Conditioned GP. Build with ``GPModel.condition``; treat as immutable."""

    manifold: object
    points: list
    batch: object
    y: np.ndarray
    mean_const: float
    params: KernelParams
    noise_var: float
    chol: np.ndarray
    alpha: np.ndarray

    @classmethod
    def condition(cls, manifold, points, y, params, noise_var=NOISE_FLOOR, mean_const=None):
        points = list(points)
        y = np.asarray(y, dtype=float).reshape(-1)
        if len(points) != len(y):
            raise ValueError(f"{len(points)} points but {len(y)} values")
        if mean_const is None:
            mean_const = float(np.mean(y)) if len(y) else 0.0
        if not points:
            return cls(manifold, [], None, y, float(mean_const), params, float(noise_var),
                       np.zeros((0, 0)), np.zeros(0))
        batch = manifold.stack(points)
        d2 = _sym_sq_dist(manifold, batch)
        chol = _cholesky(se_from_sq_dist(d2, params), noise_var)
        alpha = cho_solve((chol, True), y - mean_const)
        return cls(manifold, points, batch, y, float(mean_const), params, float(noise_var),
                   chol, alpha)

    @property
    def n(self):
        return len(self.y)

    def cross_cov(self, queries):
        return se_from_sq_dist(self.manifold.pairwise_sq_dist(queries, self.batch), self.params)

    def predict(self, queries):
        """Posterior mean and variance for a batch of query points."""
        m = batch_size(queries)
        if self.n == 0:
            return np.full(m, self.mean_const), np.full(m, self.params.theta)
        k = self.cross_cov(queries)
        mean = self.mean_const + k @ self.alpha
        v = solve_triangular(self.chol, k.T, lower=True, check_finite=False)
        var = self.params.theta - np.sum(v * v, axis=0)
        if np.any(var < -1e-8):
            warnings.warn(f"negative posterior variance {var.min():.3e} clamped to 0")
        return mean, np.maximum(var, 0.0)

    def with_observation(self, x, y):
        return GPModel.condition(self.manifold, self.points + [x], np.append(self.y, y),
                                 self.params, self.noise_var, self.mean_const)


def gp_posterior(model, x):
    mean, var = model.predict(model.manifold.stack([x]))
    return float(mean[0]), float(var[0])


def _sym_sq_dist(m, batch):
    d2 = m.pairwise_sq_dist(batch, batch)
    d2 = 0.5 * (d2 + d2.T)
    np.fill_diagonal(d2, 0.0)
    return d2


def _cholesky(k, noise_var):
    a = k + noise_var * np.eye(len(k))
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            f"K + sigma^2 I is not positive definite (sigma^2={noise_var:.3e})"
        ) from exc


def _lml_from_sq_dist(d2, resid, params, noise_var):
    chol = _cholesky(se_from_sq_dist(d2, params), noise_var)
    a = solve_triangular(chol, resid, lower=True, check_finite=False)
    n = len(resid)
    return -0.5 * a @ a - np.sum(np.log(np.diag(chol))) - 0.5 * n * LOG_2PI


def log_marginal_likelihood(manifold, points, y, params, noise_var, mean_const):
    y = np.asarray(y, dtype=float)
    d2 = _sym_sq_dist(manifold, manifold.stack(list(points)))
    return float(_lml_from_sq_dist(d2, y - mean_const, params, noise_var))


def fit_mle(manifold, points, y, beta_min=0.0, restarts=5, rng=None, noise_floor=NOISE_FLOOR,
            beta_max=BETA_MAX, init=None):
    """Maximize the marginal likelihood over (log theta, log beta, log sigma^2).

    ``beta`` is boxed to ``[max(beta_min, BETA_FLOOR), beta_max]``; the prior mean
    is fixed to the sample mean of ``y``. ``init`` (a previous ``GPModel`` or
    ``(theta, beta, noise_var)``) adds one warm start on top of the random ones.
    """
    points = list(points)
    y = np.asarray(y, dtype=float)
    if len(points) < 2:
        raise ValueError("fit_mle needs at least two observations")
    rng = rng if rng is not None else np.random.default_rng()
    mean_const = float(np.mean(y))
    resid = y - mean_const
    d2 = _sym_sq_dist(manifold, manifold.stack(points))
    scale = float(np.var(y))
    if not scale > 1e-12:
        scale = 1.0

    beta_lo = max(float(beta_min), BETA_FLOOR)
    bounds = [
        (math.log(scale) - 14.0, math.log(scale) + 7.0),
        (math.log(beta_lo), math.log(beta_max)),
        (math.log(noise_floor), math.log(scale) + 1.0),
    ]

    def nll(p, noise_add=0.0):
        lt, lb, ls = np.clip(p, [b[0] for b in bounds], [b[1] for b in bounds])
        try:
            params = KernelParams(math.exp(lt), math.exp(lb), beta_min)
            return -_lml_from_sq_dist(d2, resid, params, math.exp(ls) + noise_add)
        except (NotPositiveDefiniteError, ValueError):
            return np.inf

    starts = []
    if init is not None:
        if isinstance(init, GPModel):
            init = (init.params.theta, init.params.beta, init.noise_var)
        starts.append(np.clip(np.log(np.asarray(init, dtype=float)),
                              [b[0] for b in bounds], [b[1] for b in bounds]))
    for stream in rng.spawn(restarts):
        starts.append(np.array([
            math.log(scale) + stream.uniform(-1.0, 1.0),
            stream.uniform(bounds[1][0], min(bounds[1][0] + math.log(100.0), bounds[1][1])),
            stream.uniform(bounds[2][0], bounds[2][0] + 0.5 * (bounds[2][1] - bounds[2][0])),
        ]))

    best = None
    for noise_add in (0.0, JITTER):
        for s in starts:
            if not np.isfinite(nll(s, noise_add)):
                continue
            res = minimize(nll, s, args=(noise_add,), method="Nelder-Mead", bounds=bounds,
                           options={"xatol": 1e-3, "fatol": 1e-6, "maxiter": 600})
            if np.isfinite(res.fun) and (best is None or res.fun < best[0]):
                best = (res.fun, res.x, noise_add)
        if best is not None:
            break
    if best is None:
        raise FittingError("every restart of the marginal-likelihood search failed")

    lt, lb, ls = best[1]
    params = KernelParams(math.exp(lt), max(math.exp(lb), beta_lo), beta_min)
    return GPModel.condition(manifold, points, y, params, math.exp(ls) + best[2], mean_const)


def refit_with(model, **changes):
    """Recondition ``model`` with some fields replaced (``params``, ``noise_var``, ...)."""
    fields = dict(params=model.params, noise_var=model.noise_var, mean_const=model.mean_const)
    fields.update(changes)
    return GPModel.condition(model.manifold, model.points, model.y, **fields)

