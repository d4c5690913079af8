"""Periodic stencil operators on 2-D image grids.

Images are plain ``float64`` arrays of shape ``(rows, cols)``; the x axis runs
along columns and the y axis along rows.  Vector fields are stacked arrays of
shape ``(channels, rows, cols)``: two channels for the gradient ``(dx, dy)``
and three for the Hessian ``(dxx, dyy, dxy)``.

All boundaries are periodic, so every operator here is circulant (or, for the
interpolation operators, a product of circulant filtering with dyadic
expansion/decimation).  Each forward map has an exact adjoint.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "StencilKernel",
    "InvalidFieldError",
    "as_grid",
    "conv2_periodic",
    "correlate2_periodic",
    "kernel_spectrum",
    "grad",
    "grad_adjoint",
    "hess",
    "hess_adjoint",
    "upsample2",
    "upsample2_adjoint",
    "upsample_j",
    "upsample_j_adjoint",
    "interp_kernel",
    "fft2",
    "ifft2",
    "DX",
    "DY",
    "DXX",
    "DYY",
    "DXY",
    "INTERP",
]


class InvalidFieldError(ValueError):
    """Raised when a vector field has the wrong channel count or shape."""


@dataclass(frozen=True)
class StencilKernel:
    """Small convolution kernel with an explicit origin.

    Convolution is ``out[r] = sum_k taps[k] * img[r - (k - origin)]``, i.e. the
    tap at index ``origin`` multiplies the pixel itself.
    """

    taps: np.ndarray
    origin: tuple[int, int] = (0, 0)

    def __post_init__(self):
        taps = np.atleast_2d(np.asarray(self.taps, dtype=float))
        if taps.size == 0:
            raise ValueError("stencil must have at least one tap")
        r, c = self.origin
        if not (0 <= r < taps.shape[0] and 0 <= c < taps.shape[1]):
            raise ValueError(f"origin {self.origin} outside taps of shape {taps.shape}")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "origin", (int(r), int(c)))

    @classmethod
    def centered(cls, taps) -> "StencilKernel":
        taps = np.atleast_2d(np.asarray(taps, dtype=float))
        return cls(taps, (taps.shape[0] // 2, taps.shape[1] // 2))

    def flipped(self) -> "StencilKernel":
        """Kernel of k(-r); the convolution adjoint."""
        rows, cols = self.taps.shape
        return StencilKernel(self.taps[::-1, ::-1].copy(),
                             (rows - 1 - self.origin[0], cols - 1 - self.origin[1]))

    def offsets(self):
        """Yield ``(dr, dc, tap)`` for nonzero taps in row-major order."""
        r0, c0 = self.origin
        for (i, j), t in np.ndenumerate(self.taps):
            if t != 0.0:
                yield i - r0, j - c0, float(t)


# Derivative stencils as convolution kernels.  dx s = s[:, c+1] - s[:, c].
DX = StencilKernel(np.array([[1.0, -1.0]]), (0, 1))
DY = StencilKernel(np.array([[1.0], [-1.0]]), (1, 0))
DXX = StencilKernel(np.array([[1.0, -2.0, 1.0]]), (0, 1))
DYY = StencilKernel(np.array([[1.0], [-2.0], [1.0]]), (1, 0))
DXY = StencilKernel(np.array([[1.0, -1.0], [-1.0, 1.0]]), (1, 1))

_U1 = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 8.0
INTERP = StencilKernel(np.outer(_U1, _U1), (2, 2))


def as_grid(img) -> np.ndarray:
    a = np.asarray(img, dtype=float)
    if a.ndim != 2 or a.size == 0:
        raise ValueError(f"expected a nonempty 2-D grid, got shape {a.shape}")
    return a


def conv2_periodic(img, k: StencilKernel) -> np.ndarray:
    """Circular convolution by direct summation over the taps."""
    img = as_grid(img)
    out = np.zeros_like(img)
    for dr, dc, t in k.offsets():
        out += t * np.roll(img, (dr, dc), axis=(0, 1))
    return out


def correlate2_periodic(img, k: StencilKernel) -> np.ndarray:
    """Circular correlation; the adjoint of :func:`conv2_periodic`."""
    return conv2_periodic(img, k.flipped())


def kernel_spectrum(k: StencilKernel, shape: tuple[int, int]) -> np.ndarray:
    """DFT (unnormalized) of ``k`` embedded periodically in a grid of ``shape``."""
    full = np.zeros(shape)
    for dr, dc, t in k.offsets():
        full[dr % shape[0], dc % shape[1]] += t
    return np.fft.fft2(full)


# Fast paths used by the solvers.  They agree with conv2_periodic on the
# corresponding kernels (tested against dense matrices).

def _fdiff(a, axis):
    return np.roll(a, -1, axis=axis) - a


def _bdiff(a, axis):
    return a - np.roll(a, 1, axis=axis)


def _d2(a, axis):
    return np.roll(a, -1, axis=axis) - 2.0 * a + np.roll(a, 1, axis=axis)


def _check_field(v, channels: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 3 or v.shape[0] != channels:
        raise InvalidFieldError(
            f"expected a field with {channels} channels, got shape {v.shape}")
    return v


def grad(img) -> np.ndarray:
    """Forward-difference gradient, shape ``(2, rows, cols)``."""
    img = as_grid(img)
    return np.stack([_fdiff(img, 1), _fdiff(img, 0)])


def grad_adjoint(v) -> np.ndarray:
    v = _check_field(v, 2)
    return -_bdiff(v[0], 1) - _bdiff(v[1], 0)


def hess(img) -> np.ndarray:
    """Hessian components ``(dxx, dyy, dxy)``, shape ``(3, rows, cols)``."""
    img = as_grid(img)
    return np.stack([_d2(img, 1), _d2(img, 0), _fdiff(_fdiff(img, 1), 0)])


def hess_adjoint(v) -> np.ndarray:
    v = _check_field(v, 3)
    return _d2(v[0], 1) + _d2(v[1], 0) + _bdiff(_bdiff(v[2], 0), 1)


def _filter_axis(a, taps, axis):
    # centered odd-length 1-D periodic filter
    half = len(taps) // 2
    out = np.zeros_like(a)
    for i, t in enumerate(taps):
        out += t * np.roll(a, i - half, axis=axis)
    return out


def upsample2(img) -> np.ndarray:
    """Two-fold expansion followed by the normalized [1 4 6 4 1] filter."""
    img = as_grid(img)
    rows, cols = img.shape
    out = np.zeros((2 * rows, 2 * cols))
    out[::2, ::2] = img
    return _filter_axis(_filter_axis(out, _U1, 1), _U1, 0)


def upsample2_adjoint(img) -> np.ndarray:
    img = as_grid(img)
    if img.shape[0] % 2 or img.shape[1] % 2:
        raise ValueError(f"adjoint upsampling needs even dims, got {img.shape}")
    filt = _filter_axis(_filter_axis(img, _U1, 1), _U1, 0)
    return filt[::2, ::2].copy()


def upsample_j(img, j: int) -> np.ndarray:
    """``j`` cascaded :func:`upsample2` stages (``j = 0`` is the identity)."""
    if j < 0:
        raise ValueError("level must be nonnegative")
    out = as_grid(img)
    for _ in range(j):
        out = upsample2(out)
    return out


def upsample_j_adjoint(img, j: int) -> np.ndarray:
    if j < 0:
        raise ValueError("level must be nonnegative")
    out = as_grid(img)
    for _ in range(j):
        out = upsample2_adjoint(out)
    return out


@lru_cache(maxsize=None)
def _interp_taps_1d(j: int) -> tuple[float, ...]:
    taps = np.array([1.0])
    for i in range(j):
        up = np.zeros(4 * 2**i + 1)
        up[:: 2**i] = _U1
        taps = np.convolve(taps, up)
    return tuple(taps)


def interp_kernel(j: int) -> StencilKernel:
    """Single-stage equivalent filter of ``upsample_j``.

    Upsampling by ``2**j`` equals ``2**j``-fold expansion followed by this
    kernel, whose z-transform is ``prod_i u(z**(2**i))``.
    """
    t = np.asarray(_interp_taps_1d(j))
    half = len(t) // 2
    return StencilKernel(np.outer(t, t), (half, half))


def fft2(grid) -> np.ndarray:
    """Unitary 2-D DFT."""
    return np.fft.fft2(np.asarray(grid), norm="ortho")


def ifft2(grid) -> np.ndarray:
    return np.fft.ifft2(np.asarray(grid), norm="ortho")
