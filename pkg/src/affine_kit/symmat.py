"""Symmetric-matrix helpers: scaled flattening, PSD projection, PSD square root.

Flattening convention: row-major upper triangle with off-diagonal entries
scaled by sqrt(2), so that for symmetric x, y the Euclidean inner product of
the flat vectors equals tr(xy). A d x d symmetric matrix maps to a vector of
length d*(d+1)/2.
"""

import numpy as np

__all__ = [
    "flat_dim", "mat_dim", "sym_to_flat", "flat_to_sym", "flat_basis",
    "psd_project", "psd_sqrt",
]

_SQRT2 = np.sqrt(2.0)


def flat_dim(d):
    return d * (d + 1) // 2


def mat_dim(n):
    """Inverse of flat_dim; raises if n is not triangular."""
    d = int(round((np.sqrt(8 * n + 1) - 1) / 2))
    if flat_dim(d) != n:
        raise ValueError(f"flat length {n} is not d*(d+1)/2 for integer d")
    return d


def _triu_indices(d):
    return np.triu_indices(d)


def sym_to_flat(x):
    """Flatten a symmetric matrix (real or complex); tr(xy) = dot(flat x, flat y)."""
    x = np.asarray(x)
    d = x.shape[0]
    i, j = _triu_indices(d)
    v = x[i, j].copy()
    v[i != j] *= _SQRT2
    return v


def flat_to_sym(v, d=None):
    v = np.asarray(v)
    if d is None:
        d = mat_dim(v.shape[0])
    i, j = _triu_indices(d)
    w = v.astype(np.result_type(v.dtype, float), copy=True)
    w[i != j] /= _SQRT2
    x = np.zeros((d, d), dtype=w.dtype)
    x[i, j] = w
    x[j, i] = w
    return x


def flat_basis(d):
    """Orthonormal symmetric basis E_1..E_n (n = d(d+1)/2) matching the flattening."""
    n = flat_dim(d)
    out = []
    for idx in range(n):
        e = np.zeros(n)
        e[idx] = 1.0
        out.append(flat_to_sym(e, d))
    return out


def psd_project(c, tol=0.0):
    """Nearest PSD matrix in Frobenius norm (eigenvalue clipping at tol).

    Returns the input array unchanged (same object) when it is already PSD,
    so the projection is exactly idempotent.
    """
    c = np.asarray(c, dtype=float)
    s = 0.5 * (c + c.T)
    w, v = np.linalg.eigh(s)
    if w[0] >= tol:
        return c if np.array_equal(c, c.T) else s
    w = np.maximum(w, tol)
    return (v * w) @ v.T


def psd_sqrt(c):
    """Factor L with L @ L.T = psd_project(c).

    Cholesky when c is positive definite, otherwise the symmetric eigenvalue
    square root of the projected matrix (handles semidefinite and numerically
    indefinite input).
    """
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError("psd_sqrt expects a square matrix")
    if not np.allclose(c, c.T, rtol=0.0, atol=1e-10 * (1.0 + np.abs(c).max())):
        raise ValueError("psd_sqrt expects a symmetric matrix")
    try:
        return np.linalg.cholesky(c)
    except np.linalg.LinAlgError:
        pass
    w, v = np.linalg.eigh(0.5 * (c + c.T))
    w = np.maximum(w, 0.0)
    return (v * np.sqrt(w)) @ v.T
