"""Expected improvement and its Riemannian gradient."""
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

SIGMA_EPS = 1e-12
INV_SQRT_2PI = 0.3989422804014327


@dataclass(frozen=True)
class AcquisitionProblem:
    model: object
    incumbent: float
    sense: str = "minimize"
    fd_step: float = 1e-5

    def __post_init__(self):
        if self.sense not in ("minimize", "maximize"):
            raise ValueError(f"sense must be 'minimize' or 'maximize', got {self.sense!r}")

    @classmethod
    def from_model(cls, model, sense="minimize", fd_step=None):
        if model.n == 0:
            incumbent = model.mean_const
        elif sense == "minimize":
            incumbent = float(np.min(model.y))
        else:
            incumbent = float(np.max(model.y))
        if fd_step is None:
            fd_step = default_fd_step(model.manifold)
        return cls(model, incumbent, sense, fd_step)

    @property
    def manifold(self):
        return self.model.manifold


def default_fd_step(m):
    from .manifolds import SPD, Product

    if isinstance(m, SPD) or (isinstance(m, Product) and any(isinstance(f, SPD) for f in m.factors)):
        return 1e-4
    return 1e-5


def ei_from_moments(mean, var, incumbent, sense="minimize"):
    s = incumbent - mean if sense == "minimize" else mean - incumbent
    sigma = np.sqrt(np.maximum(var, 0.0))
    if np.all(sigma >= SIGMA_EPS):
        z = s / sigma
        return np.maximum(s * ndtr(z) + sigma * INV_SQRT_2PI * np.exp(-0.5 * z * z), 0.0)
    out = np.maximum(s, 0.0)
    ok = sigma >= SIGMA_EPS
    z = s[ok] / sigma[ok]
    out[ok] = s[ok] * ndtr(z) + sigma[ok] * INV_SQRT_2PI * np.exp(-0.5 * z * z)
    return np.maximum(out, 0.0)


def ei_batch(prob, batch):
    mean, var = prob.model.predict(batch)
    return ei_from_moments(np.atleast_1d(mean), np.atleast_1d(var), prob.incumbent, prob.sense)


def expected_improvement(prob, x):
    return float(ei_batch(prob, prob.manifold.stack([x]))[0])


def riemannian_gradient(prob, x, phi_batch=None):
    """Central-difference gradient of ``-EI`` (or ``phi_batch``) along geodesics.

    ``phi_batch`` maps a batch of points to objective values; it defaults to
    the negated expected improvement of ``prob``.
    """
    m = prob.manifold
    if phi_batch is None:
        def phi_batch(b):
            return -ei_batch(prob, b)
    return fd_gradient(m, x, phi_batch, prob.fd_step)


def fd_gradient(m, x, phi_batch, h):
    basis = m.tangent_basis(x)
    steps = []
    for e in basis:
        steps.append(m.scale(e, h))
        steps.append(m.scale(e, -h))
    vals = phi_batch(m.exp_many(x, steps))
    coeffs = (vals[0::2] - vals[1::2]) / (2.0 * h)
    grad = m.zero_vector(x)
    for c, e in zip(coeffs, basis):
        grad = m.add(grad, m.scale(e, c))
    return grad
