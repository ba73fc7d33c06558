"""Conjugate gradient on Riemannian manifolds, with optional bound constraints."""
from dataclasses import dataclass

import numpy as np

from .acquisition import ei_batch, riemannian_gradient
from .domains import sample_feasible

ARMIJO = 0.5
HS_EPS = 1e-12


@dataclass(frozen=True)
class CGConfig:
    max_iters: int = 200
    grad_tol: float = 1e-6
    initial_step: float = 1.0
    contraction: float = 0.5
    max_ls_iters: int = 25
    restarts: int = 5

    def __post_init__(self):
        if not 0 < self.contraction < 1:
            raise ValueError("contraction must lie in (0, 1)")
        if self.max_iters < 1 or self.max_ls_iters < 1:
            raise ValueError("max_iters and max_ls_iters must be >= 1")
        if self.grad_tol <= 0 or self.initial_step <= 0:
            raise ValueError("grad_tol and initial_step must be positive")


@dataclass
class CGState:
    z: object
    eta: object
    grad: object
    phi_val: float


def _linesearch(phi, m, z, eta, grad, cfg, f0):
    eta_norm = m.norm(z, eta)
    if eta_norm == 0.0:
        return 0.0, f0
    slope = m.metric(z, grad, eta)
    alpha = cfg.initial_step / eta_norm
    for _ in range(cfg.max_ls_iters + 1):
        fc = phi(m.exp_map(z, m.scale(eta, alpha)))
        if fc <= f0 + ARMIJO * alpha * slope:
            # final guard: a step that does not strictly decrease phi is rejected
            return (alpha, fc) if fc < f0 else (0.0, f0)
        alpha *= cfg.contraction
    return 0.0, f0


def linesearch(phi, m, z, eta, grad, cfg, f0=None):
    """Backtracking step size along the geodesic ``t -> Exp_z(t * eta)``; 0 signals failure."""
    if f0 is None:
        f0 = phi(z)
    return _linesearch(phi, m, z, eta, grad, cfg, f0)[0]


def _projected_backtrack(phi, m, dom, z, eta, alpha, f0, cfg):
    """Shrink ``alpha`` until the projected step strictly decreases phi; ``(None, f0)`` if never."""
    for _ in range(cfg.max_ls_iters + 1):
        zc = dom.project(m.exp_map(z, m.scale(eta, alpha)))
        fc = phi(zc)
        if fc < f0:
            return zc, fc
        alpha *= cfg.contraction
    return None, f0


def cg_minimize(phi, grad_fn, m, z0, cfg=None, dom=None, trace=None):
    """Minimize ``phi`` over ``m`` (or the domain ``dom``) from ``z0``.

    Hestenes-Stiefel directions with transported previous gradient/direction.
    When a step leaves ``dom`` the iterate is projected back and the direction
    restarts as steepest descent. ``trace(k, phi, grad_norm, projected)`` is
    called once per iteration. Returns the best ``(point, value)`` seen.
    """
    cfg = cfg or CGConfig()
    z = m.check_point(z0)
    if dom is not None and not dom.contains(z):
        z = dom.project(z)
    f = phi(z)
    g = grad_fn(z)
    eta = m.scale(g, -1.0)
    steepest = True
    projected = False
    best_z, best_f = z, f

    for k in range(cfg.max_iters):
        gnorm = m.norm(z, g)
        if trace is not None:
            trace(k, f, gnorm, projected)
        if gnorm < cfg.grad_tol:
            break
        if m.metric(z, g, eta) >= 0:
            eta, steepest = m.scale(g, -1.0), True
        alpha, f_new = _linesearch(phi, m, z, eta, g, cfg, f)
        if alpha == 0.0:
            if steepest:
                break
            eta, steepest = m.scale(g, -1.0), True
            projected = False
            continue

        z_new = m.exp_map(z, m.scale(eta, alpha))
        projected = dom is not None and not dom.contains(z_new)
        if projected:
            z_new, f_new = _projected_backtrack(phi, m, dom, z, eta, alpha, f, cfg)
            if z_new is None:
                # no projected step along eta decreases phi: stationary on the boundary
                if steepest:
                    break
                eta, steepest = m.scale(g, -1.0), True
                projected = False
                continue
        g_new = grad_fn(z_new)

        if projected:
            eta_new, steepest = m.scale(g_new, -1.0), True
        else:
            t_eta = m.parallel_transport(z, z_new, eta)
            t_g = m.parallel_transport(z, z_new, g)
            diff = m.add(g_new, m.scale(t_g, -1.0))
            den = m.metric(z_new, t_eta, diff)
            beta = m.metric(z_new, g_new, diff) / den if abs(den) >= HS_EPS else 0.0
            eta_new = m.add(m.scale(g_new, -1.0), m.scale(t_eta, beta))
            steepest = beta == 0.0
            if m.metric(z_new, g_new, eta_new) >= 0:
                eta_new, steepest = m.scale(g_new, -1.0), True

        z, f, g, eta = z_new, f_new, g_new, eta_new
        if f < best_f:
            best_z, best_f = z, f
    return best_z, best_f


def maximize_acquisition(prob, dom=None, cfg=None, rng=None, trace=None, starts=None):
    """Multi-start CG on ``-EI``; returns the point with the largest EI found.

    Starts are ``cfg.restarts`` feasible random draws followed by the location
    of the incumbent observation (when there is one). Ties go to the earliest start.
    """
    cfg = cfg or CGConfig()
    rng = rng if rng is not None else np.random.default_rng()
    m = prob.manifold
    model = prob.model

    def phi(z):
        return -float(ei_batch(prob, m.stack([z]))[0])

    def grad_fn(z):
        return riemannian_gradient(prob, z)

    if starts is None:
        starts = [sample_feasible(m, dom, rng) for _ in range(cfg.restarts)]
        if model.n:
            idx = int(np.argmin(model.y) if prob.sense == "minimize" else np.argmax(model.y))
            starts.append(model.points[idx])

    best_z, best_f = None, np.inf
    for i, z0 in enumerate(starts):
        hook = None if trace is None else (lambda *a, i=i: trace(i, *a))
        z, f = cg_minimize(phi, grad_fn, m, z0, cfg, dom, hook)
        if best_z is None or f < best_f:
            best_z, best_f = z, f
    return best_z
