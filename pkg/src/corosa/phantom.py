"""Synthetic test image with flat, linear and quadratic regions."""

from __future__ import annotations

import numpy as np

__all__ = ["mixed_phantom"]


def mixed_phantom(n: int = 64):
    """Return ``(image, regions)`` for an ``n x n`` phantom with values in [0, 1].

    The top-left quadrant holds a bright square on a flat plateau, the
    top-right quadrant a horizontal linear ramp, and the bottom half a smooth
    quadratic bump.  ``regions`` maps ``"flat"``, ``"ramp"`` and
    ``"quadratic"`` to boolean masks that stay clear of the region borders.
    """
    h = n // 2
    y, x = np.mgrid[0:n, 0:n].astype(float)
    img = np.full((n, n), 0.3)
    regions = {k: np.zeros((n, n), bool) for k in ("flat", "ramp", "quadratic")}

    q = n // 8
    img[:h, :h] = 0.3
    img[q:h - q, q:h - q] = 0.8
    margin = max(n // 32, 1)
    flat = np.zeros((n, n), bool)
    flat[margin:h - margin, margin:h - margin] = True
    edge = np.zeros((n, n), bool)
    edge[q - margin:h - q + margin, q - margin:h - q + margin] = True
    edge[q + margin:h - q - margin, q + margin:h - q - margin] = False
    regions["flat"] = flat & ~edge

    ramp = 0.15 + 0.7 * (x - h) / max(h - 1, 1)
    img[:h, h:] = ramp[:h, h:]
    regions["ramp"][margin:h - margin, h + margin:n - margin] = True

    cy, cx, rad = h + h / 2, h, 0.45 * n
    r2 = ((y - cy) ** 2 + (x - cx) ** 2) / rad**2
    bump = 0.15 + 0.75 * np.clip(1.0 - r2, 0.0, None)
    img[h:, :] = bump[h:, :]
    regions["quadratic"] = (r2 < 0.5) & (y >= h + margin)
    return img, regions
