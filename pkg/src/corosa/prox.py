"""Closed-form proximal maps for the ADMM splitting steps.

All maps act pixelwise on stacked fields (channel axis first) and also accept
a single vector.  Hessian fields ``(hxx, hyy, hxy)`` are identified with the
symmetric matrix ``[[hxx, hxy], [hxy, hyy]]``; distances between Hessian
fields are measured in the Frobenius norm of that matrix, which weights the
``hxy`` channel twice (see :data:`HESS_METRIC`).
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError

__all__ = [
    "HESS_METRIC",
    "vec_soft_threshold",
    "eig2_sym",
    "recompose",
    "frobenius_norm",
    "schatten_norm",
    "hs_prox",
    "box_project",
]

# Per-channel weights turning the Euclidean norm of (hxx, hyy, hxy) into the
# Frobenius norm of the symmetric embedding.
HESS_METRIC = np.array([1.0, 1.0, 2.0])


def _check_t(t):
    if np.any(np.asarray(t) < 0):
        raise ParameterError(f"threshold must be nonnegative, got {t}")


def vec_soft_threshold(x, t):
    """Shrink each vector (along axis 0) toward zero by ``t`` in norm."""
    _check_t(t)
    x = np.asarray(x, dtype=float)
    norm = np.sqrt(np.sum(x * x, axis=0))
    safe = np.where(norm > 0, norm, 1.0)
    scale = np.where(norm > t, (norm - t) / safe, 0.0)
    return x * scale


def eig2_sym(v):
    """Eigen-decomposition of the symmetric 2x2 matrix embedding of ``v``.

    Returns ``(l1, l2, vecs)`` with ``l1 >= l2`` and ``vecs[..., :, i]`` the
    unit eigenvector of ``li``.  When the eigenvalues coincide the standard
    basis is returned.
    """
    v = np.asarray(v, dtype=float)
    a, c, b = v[0], v[1], v[2]
    mean = 0.5 * (a + c)
    half = 0.5 * (a - c)
    rad = np.hypot(half, b)
    l1, l2 = mean + rad, mean - rad
    # rotation angle of the leading eigenvector
    theta = 0.5 * np.arctan2(b, half)
    cs, sn = np.cos(theta), np.sin(theta)
    cs = np.where(rad > 0, cs, 1.0)
    sn = np.where(rad > 0, sn, 0.0)
    vecs = np.stack([np.stack([cs, -sn], axis=-1), np.stack([sn, cs], axis=-1)], axis=-2)
    return l1, l2, vecs


def recompose(l1, l2, vecs):
    """Inverse of :func:`eig2_sym`; returns the 3-vector ``(a, c, b)``."""
    v1 = vecs[..., :, 0]
    v2 = vecs[..., :, 1]
    a = l1 * v1[..., 0] ** 2 + l2 * v2[..., 0] ** 2
    c = l1 * v1[..., 1] ** 2 + l2 * v2[..., 1] ** 2
    b = l1 * v1[..., 0] * v1[..., 1] + l2 * v2[..., 0] * v2[..., 1]
    return np.stack([a, c, b])


def frobenius_norm(v):
    v = np.asarray(v, dtype=float)
    return np.sqrt(v[0] ** 2 + v[1] ** 2 + 2.0 * v[2] ** 2)


def schatten_norm(v, p):
    """l_p norm of the Hessian eigenvalues, p in {1, 2}."""
    v = np.asarray(v, dtype=float)
    if p == 2:
        return frobenius_norm(v)
    if p == 1:
        mean = 0.5 * (v[0] + v[1])
        rad = np.hypot(0.5 * (v[0] - v[1]), v[2])
        # |l1| + |l2| = max(2|mean|, 2 rad)
        return 2.0 * np.maximum(np.abs(mean), rad)
    raise ParameterError(f"Schatten order must be 1 or 2, got {p}")


def _soft(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def hs_prox(v, t, p):
    """Prox of ``t * schatten_norm(., p)`` in the Frobenius metric.

    ``p = 2`` shrinks the Frobenius norm; ``p = 1`` soft-thresholds both
    eigenvalues and rebuilds the matrix in the original eigenbasis.
    """
    _check_t(t)
    v = np.asarray(v, dtype=float)
    if p == 2:
        norm = frobenius_norm(v)
        safe = np.where(norm > 0, norm, 1.0)
        return v * np.where(norm > t, (norm - t) / safe, 0.0)
    if p != 1:
        raise ParameterError(f"Schatten order must be 1 or 2, got {p}")
    a, c, b = v[0], v[1], v[2]
    mean = 0.5 * (a + c)
    half = 0.5 * (a - c)
    rad = np.hypot(half, b)
    m1 = _soft(mean + rad, t)
    m2 = _soft(mean - rad, t)
    new_mean = 0.5 * (m1 + m2)
    new_rad = 0.5 * (m1 - m2)
    # equal eigenvalues: new_rad is 0 too, no eigenbasis needed
    ratio = np.where(rad > 0, new_rad / np.where(rad > 0, rad, 1.0), 0.0)
    return np.stack([new_mean + ratio * half, new_mean - ratio * half, ratio * b])


def box_project(x, u):
    """Clip every pixel to ``[0, u]``."""
    if not u > 0:
        raise ParameterError(f"box bound must be positive, got {u}")
    return np.clip(np.asarray(x, dtype=float), 0.0, u)
