"""Image quality scores used to compare restorations."""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import ParameterError

__all__ = ["SNR_CAP_DB", "snr_db", "psnr_db", "ssim", "ssim_map"]

SNR_CAP_DB = 300.0

_K1, _K2 = 0.01, 0.03
_SIGMA = 1.5
_RADIUS = 5  # 11 x 11 window


def _pair(ref, est):
    ref = np.asarray(ref)
    est = np.asarray(est)
    if ref.shape != est.shape:
        raise ParameterError(f"shape mismatch: {ref.shape} vs {est.shape}")
    return ref, est


def _capped_db(num, den):
    if den == 0:
        return SNR_CAP_DB
    return float(min(10.0 * np.log10(num / den), SNR_CAP_DB))


def snr_db(ref, est) -> float:
    """``10 log10(||ref||^2 / ||ref - est||^2)``, capped at :data:`SNR_CAP_DB`."""
    ref, est = _pair(ref, est)
    sig = float(np.sum(np.abs(ref) ** 2))
    if sig == 0:
        raise ParameterError("reference image is all zero")
    return _capped_db(sig, float(np.sum(np.abs(ref - est) ** 2)))


def psnr_db(ref, est, peak=None) -> float:
    """Peak SNR; the error may be complex.  ``peak`` defaults to ``max|ref|``."""
    ref, est = _pair(ref, est)
    peak = float(np.max(np.abs(ref))) if peak is None else float(peak)
    if peak <= 0:
        raise ParameterError("peak must be positive")
    return _capped_db(peak**2, float(np.mean(np.abs(ref - est) ** 2)))


def _blur(a):
    return gaussian_filter(a, _SIGMA, mode="reflect", truncate=_RADIUS / _SIGMA)


def ssim_map(ref, est, data_range: float = 1.0) -> np.ndarray:
    """Local SSIM with an 11x11 Gaussian window (sigma 1.5)."""
    ref, est = _pair(ref, est)
    if ref.ndim != 2:
        raise ParameterError("SSIM expects 2-D images")
    x = ref.astype(float)
    y = est.astype(float)
    c1 = (_K1 * data_range) ** 2
    c2 = (_K2 * data_range) ** 2
    mx, my = _blur(x), _blur(y)
    vx = _blur(x * x) - mx * mx
    vy = _blur(y * y) - my * my
    cxy = _blur(x * y) - mx * my
    num = (2 * mx * my + c1) * (2 * cxy + c2)
    den = (mx * mx + my * my + c1) * (vx + vy + c2)
    return num / den


def ssim(ref, est, data_range: float = 1.0) -> float:
    """Mean SSIM over windows that lie fully inside the image.

    Images smaller than the window are averaged over every pixel.
    """
    m = ssim_map(ref, est, data_range)
    r = _RADIUS
    if m.shape[0] > 2 * r and m.shape[1] > 2 * r:
        m = m[r:-r, r:-r]
    return float(np.clip(m.mean(), -1.0, 1.0))
