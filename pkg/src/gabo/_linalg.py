"""Spectral functions of symmetric matrices.

Every function here works on a single matrix ``(D, D)`` or a stack
``(..., D, D)`` and goes through ``numpy.linalg.eigh``.
"""
import numpy as np

from .exceptions import NonSPDError

EIG_FLOOR = 1e-12


def sym(a):
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def funcm(a, fn):
    """Apply the scalar function ``fn`` to the eigenvalues of symmetric ``a``."""
    w, v = np.linalg.eigh(a)
    return (v * fn(w)[..., None, :]) @ np.swapaxes(v, -1, -2)


def expm(a):
    return funcm(a, np.exp)


def logm(a):
    w, v = np.linalg.eigh(a)
    if np.any(w < EIG_FLOOR):
        raise NonSPDError(f"matrix logarithm of a matrix with eigenvalue {w.min():.3e}")
    return (v * np.log(w)[..., None, :]) @ np.swapaxes(v, -1, -2)


def sqrtm(a):
    return funcm(a, lambda w: np.sqrt(np.maximum(w, EIG_FLOOR)))


def invsqrtm(a):
    return funcm(a, lambda w: 1.0 / np.sqrt(np.maximum(w, EIG_FLOOR)))


def sqrt_and_invsqrt(a):
    w, v = np.linalg.eigh(a)
    w = np.maximum(w, EIG_FLOOR)
    vt = np.swapaxes(v, -1, -2)
    s = np.sqrt(w)[..., None, :]
    return (v * s) @ vt, (v / s) @ vt


def mandel_indices(n):
    """Row/column indices of the upper triangle, diagonal first."""
    rows = list(range(n))
    cols = list(range(n))
    for i in range(n):
        for j in range(i + 1, n):
            rows.append(i)
            cols.append(j)
    return np.array(rows), np.array(cols)


def mandel_weights(n):
    return np.concatenate([np.ones(n), np.full(n * (n - 1) // 2, np.sqrt(2.0))])


def to_mandel(a):
    """Vectorize symmetric ``a`` so that Frobenius inner products become dot products."""
    n = a.shape[-1]
    r, c = mandel_indices(n)
    return a[..., r, c] * mandel_weights(n)


def from_mandel(vec, n):
    r, c = mandel_indices(n)
    vals = np.asarray(vec, dtype=float) / mandel_weights(n)
    out = np.zeros(vals.shape[:-1] + (n, n))
    out[..., r, c] = vals
    out[..., c, r] = vals
    return out


def mandel_basis(n):
    """Frobenius-orthonormal basis of symmetric ``n x n`` matrices, shape ``(n(n+1)/2, n, n)``."""
    return from_mandel(np.eye(n * (n + 1) // 2), n)
