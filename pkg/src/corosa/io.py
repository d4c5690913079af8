"""Image files: lossless raw grids, 8/16-bit PGM/PNG, binary masks."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ParameterError

__all__ = ["write_raw", "read_raw", "read_image", "write_png", "write_mask_pgm",
           "read_mask", "RAW_REAL", "RAW_COMPLEX"]

RAW_REAL = "COROSA-F64"
RAW_COMPLEX = "COROSA-C64"


def write_raw(path, grid) -> Path:
    """Write ``grid`` with an ASCII header and little-endian float64 payload.

    Complex grids interleave real and imaginary parts.
    """
    grid = np.asarray(grid)
    if grid.ndim != 2:
        raise ParameterError("raw files hold 2-D grids")
    rows, cols = grid.shape
    if np.iscomplexobj(grid):
        tag = RAW_COMPLEX
        payload = np.empty((rows, cols, 2), dtype="<f8")
        payload[..., 0] = grid.real
        payload[..., 1] = grid.imag
    else:
        tag = RAW_REAL
        payload = grid.astype("<f8")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(f"{tag} {cols} {rows}\n".encode("ascii"))
        fh.write(np.ascontiguousarray(payload).tobytes())
    return path


def read_raw(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii", errors="replace").split()
        body = fh.read()
    if len(header) != 3 or header[0] not in (RAW_REAL, RAW_COMPLEX):
        raise ParameterError(f"{path}: not a COROSA raw file")
    cols, rows = int(header[1]), int(header[2])
    per = 2 if header[0] == RAW_COMPLEX else 1
    if len(body) != rows * cols * per * 8:
        raise ParameterError(f"{path}: payload size does not match {cols}x{rows}")
    data = np.frombuffer(body, dtype="<f8").astype(float)
    if per == 2:
        data = data.reshape(rows, cols, 2)
        return data[..., 0] + 1j * data[..., 1]
    return data.reshape(rows, cols)


def _is_raw(path) -> bool:
    with open(path, "rb") as fh:
        head = fh.read(10)
    return head in (RAW_REAL.encode(), RAW_COMPLEX.encode())


def read_image(path) -> np.ndarray:
    """Load a grayscale image normalized to [0, 1]; raw files load unchanged."""
    path = Path(path)
    if _is_raw(path):
        return read_raw(path)
    with Image.open(path) as im:
        if im.mode in ("I;16", "I;16B", "I;16L", "I"):
            arr = np.asarray(im, dtype=float)
            top = 65535.0 if arr.max() > 255 or im.mode.startswith("I;16") else 255.0
        elif im.mode == "L":
            arr, top = np.asarray(im, dtype=float), 255.0
        elif im.mode in ("RGB", "RGBA", "P", "LA"):
            arr, top = np.asarray(im.convert("L"), dtype=float), 255.0
        else:
            raise ParameterError(f"{path}: unsupported image mode {im.mode}")
    return arr / top


def write_png(path, img, bits: int = 8) -> Path:
    """Clip to [0, 1] and store as 8- or 16-bit grayscale PNG."""
    img = np.clip(np.asarray(img, dtype=float), 0.0, 1.0)
    if bits == 8:
        im = Image.fromarray(np.rint(img * 255).astype(np.uint8))
    elif bits == 16:
        im = Image.fromarray(np.rint(img * 65535).astype(np.uint16))
    else:
        raise ParameterError("bits must be 8 or 16")
    path = Path(path)
    im.save(path, format="PNG")
    return path


def write_mask_pgm(path, mask) -> Path:
    """Binary mask as 8-bit PGM with values 0 and 255."""
    m = np.asarray(mask)
    im = Image.fromarray(np.where(m != 0, 255, 0).astype(np.uint8))
    path = Path(path)
    im.save(path, format="PPM")
    return path


def read_mask(path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return (arr > 127).astype(float)
