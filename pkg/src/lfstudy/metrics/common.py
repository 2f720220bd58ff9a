"""Shared metric machinery: color transform, PSNR, windows, padding."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from ..lightfield import View

# BT.709 luma coefficients
_LUMA = np.array([0.2126, 0.7152, 0.0722])


def to_luma(view: View) -> np.ndarray:
    """BT.709 luma plane Y = 0.2126 R + 0.7152 G + 0.0722 B, in [0, 1]."""
    return view.data @ _LUMA


def _check_planes(ref: np.ndarray, test: np.ndarray) -> None:
    if ref.shape != test.shape:
        raise ValueError(f"plane dimensions differ: {ref.shape} vs {test.shape}")
    if ref.ndim != 2:
        raise ValueError(f"expected 2-D planes, got {ref.ndim}-D")


def psnr(ref: np.ndarray, test: np.ndarray, cap_db: float = 100.0) -> float:
    """10*log10(1/MSE) on normalized samples; identical inputs report the cap."""
    _check_planes(ref, test)
    mse = float(np.mean((np.asarray(ref, float) - np.asarray(test, float)) ** 2))
    if mse == 0.0:
        return cap_db
    return min(cap_db, 10.0 * np.log10(1.0 / mse))


def gaussian_window(size: int, sigma: float) -> np.ndarray:
    """Normalized 2-D Gaussian window."""
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    win = np.outer(g, g)
    return win / win.sum()


def local_mean(plane: np.ndarray, window: np.ndarray) -> np.ndarray:
    """Windowed local mean with symmetric boundary handling."""
    return ndimage.correlate(plane, window, mode="reflect")


def pad_to_multiple(plane: np.ndarray, block: int) -> np.ndarray:
    """Symmetric-pad bottom/right so both dimensions are multiples of block."""
    h, w = plane.shape
    ph = (-h) % block
    pw = (-w) % block
    if ph == 0 and pw == 0:
        return plane
    return np.pad(plane, ((0, ph), (0, pw)), mode="symmetric")


def downsample2(plane: np.ndarray) -> np.ndarray:
    """2x2 box average + decimation (symmetric pad if a dimension is odd)."""
    plane = pad_to_multiple(plane, 2)
    return 0.25 * (
        plane[0::2, 0::2] + plane[1::2, 0::2] + plane[0::2, 1::2] + plane[1::2, 1::2]
    )
