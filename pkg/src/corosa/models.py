"""Forward models, their adjoints, and measurement simulators.

Two acquisition models are supported: periodic convolution with a PSF
(fluorescence deconvolution) and masked unitary Fourier sampling (MRI).
Simulators are pure functions of ``(image, parameters, seed)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .grid import StencilKernel, as_grid, conv2_periodic, fft2, ifft2, kernel_spectrum

__all__ = [
    "Convolution",
    "FourierMask",
    "MixedPoissonGaussian",
    "CalibratedComplexGaussian",
    "apply_H",
    "apply_Ht",
    "make_gaussian_psf",
    "tirf_simulate",
    "make_mask",
    "mask_center_radius",
    "noise_sigma_for_psnr",
    "mri_simulate",
    "zero_filled",
]


@dataclass(frozen=True, eq=False)
class Convolution:
    psf: StencilKernel
    _otf: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.psf.taps.sum() > 0:
            raise ParameterError("PSF taps must have a positive sum")

    def otf(self, shape):
        shape = tuple(shape)
        if shape not in self._otf:
            self._otf[shape] = kernel_spectrum(self.psf, shape)
        return self._otf[shape]

    def forward(self, s):
        s = as_grid(s)
        return np.fft.ifft2(np.fft.fft2(s) * self.otf(s.shape)).real

    def adjoint(self, y):
        y = as_grid(y)
        return np.fft.ifft2(np.fft.fft2(y) * np.conj(self.otf(y.shape))).real

    def gram_spectrum(self, shape):
        """Eigenvalues of H^T H (a circulant operator) in DFT order."""
        return np.abs(self.otf(shape)) ** 2


@dataclass(frozen=True, eq=False)
class FourierMask:
    mask: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=float)
        if m.ndim != 2 or not np.all((m == 0) | (m == 1)):
            raise ParameterError("mask entries must be 0 or 1")
        if not m.any():
            raise ParameterError("mask must contain at least one sample")
        object.__setattr__(self, "mask", m)

    def _check(self, shape):
        if tuple(shape) != self.mask.shape:
            raise ParameterError(f"grid shape {tuple(shape)} does not match mask {self.mask.shape}")

    def forward(self, s):
        s = as_grid(s)
        self._check(s.shape)
        return self.mask * fft2(s)

    def adjoint(self, y):
        y = np.asarray(y)
        self._check(y.shape)
        return ifft2(self.mask * y).real

    @property
    def density(self) -> float:
        return float(self.mask.mean())


def apply_H(s, model):
    return model.forward(s)


def apply_Ht(y, model):
    return model.adjoint(y)


@dataclass(frozen=True)
class MixedPoissonGaussian:
    gamma_p: float
    sigma_eta: float

    def __post_init__(self):
        if not self.gamma_p > 0:
            raise ParameterError("gamma_p must be positive")
        if not self.sigma_eta >= 0:
            raise ParameterError("sigma_eta must be nonnegative")


@dataclass(frozen=True)
class CalibratedComplexGaussian:
    target_psnr_db: float

    def __post_init__(self):
        if not math.isfinite(self.target_psnr_db):
            raise ParameterError("target PSNR must be finite")


def make_gaussian_psf(sigma: float = 2.0, radius: int = 8) -> StencilKernel:
    """Truncated, unit-sum isotropic Gaussian."""
    if not sigma > 0:
        raise ParameterError("PSF sigma must be positive")
    radius = int(radius)
    if radius < 2 * sigma:
        warnings.warn(f"PSF radius {radius} truncates a Gaussian of sigma {sigma}", stacklevel=2)
    x = np.arange(-radius, radius + 1, dtype=float)
    r2 = x[:, None] ** 2 + x[None, :] ** 2
    taps = np.exp(-r2 / (2.0 * sigma**2))
    return StencilKernel(taps / taps.sum(), (radius, radius))


def tirf_simulate(s, psf: StencilKernel, noise: MixedPoissonGaussian, seed: int) -> np.ndarray:
    """``Poisson(gamma_p * (h * s)) + N(0, sigma_eta^2)`` per pixel."""
    s = as_grid(s)
    if np.any(s < 0):
        raise ParameterError("ground truth must be nonnegative")
    mean = noise.gamma_p * conv2_periodic(s, psf)
    assert np.all(mean >= 0), "blurred mean must be nonnegative"
    rng = np.random.default_rng(seed)
    counts = rng.poisson(mean).astype(float)
    return counts + noise.sigma_eta * rng.standard_normal(s.shape)


def _centered_coords(shape):
    rows, cols = shape
    ky = np.arange(rows) - rows // 2
    kx = np.arange(cols) - cols // 2
    return np.meshgrid(ky, kx, indexing="ij")


def _radius_order(shape):
    ky, kx = _centered_coords(shape)
    rad = np.hypot(ky, kx).ravel()
    return rad, np.argsort(rad, kind="stable")


def mask_center_radius(shape, density: float) -> float:
    """Radius of the fully sampled disk used by the spiral mask."""
    count = int(round(density * shape[0] * shape[1]))
    budget = int(round(0.2 * count))
    rad, order = _radius_order(shape)
    if budget >= rad.size:
        return float(rad.max())
    cut = rad[order[budget]]
    inside = rad[order[:budget]]
    below = inside[inside < cut]
    return float(below.max()) if below.size else -1.0


def _spiral_points(shape, r0, r_max, pitch):
    # Archimedean spiral r = r0 + pitch * theta / (2 pi), sampled at <= 0.5 px
    rows, cols = shape
    turns = max((r_max - r0) / pitch, 1.0)
    theta_max = 2 * math.pi * turns
    length = math.pi * turns * (r0 + r_max) + 1.0
    theta = np.linspace(0.0, theta_max, int(4 * length) + 16)
    r = r0 + pitch * theta / (2 * math.pi)
    y = np.rint(r * np.sin(theta)).astype(int) + rows // 2
    x = np.rint(r * np.cos(theta)).astype(int) + cols // 2
    ok = (y >= 0) & (y < rows) & (x >= 0) & (x < cols)
    flat = y[ok] * cols + x[ok]
    _, first = np.unique(flat, return_index=True)
    return flat[np.sort(first)]


def make_mask(kind: str, shape, density: float, seed: int = 0) -> np.ndarray:
    """Binary k-space mask in DFT order with ``round(density * size)`` ones.

    ``variable-density-random`` draws samples without replacement with a
    density decaying away from DC; ``spiral-with-center-fill`` fully samples a
    central disk (20% of the budget) and spends the rest on an Archimedean
    spiral.
    """
    if not 0 < density <= 1:
        raise ParameterError(f"density must lie in (0, 1], got {density}")
    rows, cols = shape
    size = rows * cols
    count = int(round(density * size))
    centered = np.zeros(size)
    if count >= size:
        return np.ones(shape)
    rng = np.random.default_rng(seed)
    if kind == "variable-density-random":
        ky, kx = _centered_coords(shape)
        rad = np.hypot(ky / rows, kx / cols).ravel()
        w = 1.0 / (1.0 + (rad / 0.1) ** 2)
        # DC is always sampled so constants stay observable
        dc = (rows // 2) * cols + cols // 2
        w[dc] = 0.0
        picks = rng.choice(size, size=count - 1, replace=False, p=w / w.sum())
        centered[picks] = 1.0
        centered[dc] = 1.0
    elif kind == "spiral-with-center-fill":
        budget = int(round(0.2 * count))
        rad, order = _radius_order(shape)
        centered[order[:budget]] = 1.0
        r0 = max(mask_center_radius(shape, density), 0.0)
        r_max = math.hypot(rows / 2, cols / 2)
        need = count - budget
        pitch = max(math.pi * (r_max**2 - r0**2) / (2.0 * max(need, 1)), 1.0)
        pts = np.array([], dtype=int)
        while True:
            pts = _spiral_points(shape, r0, r_max, pitch)
            pts = pts[centered[pts] == 0]
            if pts.size >= need or pitch <= 0.25:
                break
            pitch /= 2.0
        if pts.size >= need:
            take = np.rint(np.linspace(0, pts.size - 1, need)).astype(int)
            centered[pts[take]] = 1.0
        else:
            centered[pts] = 1.0
            free = np.flatnonzero(centered == 0)
            centered[rng.choice(free, size=need - pts.size, replace=False)] = 1.0
    else:
        raise ParameterError(f"unknown mask kind {kind!r}")
    return np.fft.ifftshift(centered.reshape(shape))


def noise_sigma_for_psnr(peak: float, target_psnr_db: float) -> float:
    """Per-component std of complex k-space noise giving the target PSNR
    after unitary inverse transform of a fully sampled spectrum."""
    return peak * 10.0 ** (-target_psnr_db / 20.0) / math.sqrt(2.0)


def mri_simulate(s, mask, noise: CalibratedComplexGaussian, seed: int) -> np.ndarray:
    """Masked noisy spectrum ``mask * (F s + eta)``, zero off the mask."""
    s = as_grid(s)
    mask = np.asarray(mask, dtype=float)
    if np.any(s < 0):
        raise ParameterError("ground truth must be nonnegative")
    sigma = noise_sigma_for_psnr(float(s.max()), noise.target_psnr_db)
    rng = np.random.default_rng(seed)
    eta = sigma * (rng.standard_normal(s.shape) + 1j * rng.standard_normal(s.shape))
    return mask * (fft2(s) + eta)


def zero_filled(m_hat) -> np.ndarray:
    """Magnitude of the inverse transform of zero-filled k-space."""
    return np.abs(ifft2(m_hat))
