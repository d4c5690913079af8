"""Adaptive first/second-order weight and its barrier strength map."""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .grid import as_grid, grad, hess
from .prox import schatten_norm

__all__ = ["TAU_MIN", "TAU_MAX", "d_map", "beta_solve", "tau_map", "beta_objective"]

TAU_MIN = 0.01
TAU_MAX = 100.0


def d_map(f, p: int) -> np.ndarray:
    """Gradient magnitude minus Hessian eigenvalue p-norm, per pixel."""
    f = as_grid(f)
    g = grad(f)
    return np.sqrt(g[0] ** 2 + g[1] ** 2) - schatten_norm(hess(f), p)


def beta_solve(d, tau) -> np.ndarray:
    """Exact pixelwise minimizer over beta in (0, 1) of

        beta * v1 + (1 - beta) * v2 - tau * log(beta * (1 - beta)),  d = v1 - v2.
    """
    d = np.asarray(d, dtype=float)
    tau = np.broadcast_to(np.asarray(tau, dtype=float), d.shape)
    if np.any(tau <= 0):
        raise ParameterError("tau must be positive at every pixel")
    ad = np.abs(d)
    nonzero = ad >= 1e-300
    zeta = 2.0 * tau / np.where(nonzero, ad, 1.0)
    # sqrt(zeta^2 + 1) - zeta without cancellation
    shift = 1.0 / (np.hypot(zeta, 1.0) + zeta)
    beta = 0.5 * (1.0 - np.sign(d) * shift)
    return np.where(nonzero, beta, 0.5)


def beta_objective(beta, v1, v2, tau):
    """Scalar cost minimized by :func:`beta_solve`; used by tests and monitors."""
    return beta * v1 + (1.0 - beta) * v2 - tau * np.log(beta * (1.0 - beta))


def tau_map(f_bar) -> np.ndarray:
    """Affine rescale of ``exp(-100 f^2)`` onto ``[0.01, 100]``.

    ``f_bar`` is expected on a unit intensity scale.  A map with no dynamic
    range returns the insensitive end (100) everywhere.
    """
    f_bar = as_grid(f_bar)
    if not np.all(np.isfinite(f_bar)):
        raise ParameterError("tau source image must be finite")
    e = np.exp(-100.0 * f_bar**2)
    lo, hi = e.min(), e.max()
    if hi - lo <= 0:
        return np.full_like(e, TAU_MAX)
    tau = TAU_MIN + (e - lo) * ((TAU_MAX - TAU_MIN) / (hi - lo))
    return np.clip(tau, TAU_MIN, TAU_MAX)
