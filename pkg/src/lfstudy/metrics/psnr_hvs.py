"""PSNR-HVS: PSNR with contrast-sensitivity weighting of 8x8 DCT coefficients.

Follows Egiazarian et al., "New full-reference quality metrics based on HVS"
(VPQM 2006): the squared error is accumulated over non-overlapping 8x8 block
DCT coefficients, each difference weighted by the CSF matrix entry. With an
all-ones CSF and the orthonormal DCT this reduces to plain PSNR by Parseval
(exactly so when dimensions are already multiples of 8; otherwise symmetric
padding makes the identity approximate).
"""

from __future__ import annotations

import numpy as np
from scipy import fft

from .common import _check_planes, pad_to_multiple
from .config import MetricConfig, default_config


def _block_dct(plane: np.ndarray) -> np.ndarray:
    """Orthonormal 2-D DCT of every non-overlapping 8x8 block.

    Returns shape (h/8, w/8, 8, 8)."""
    h, w = plane.shape
    blocks = plane.reshape(h // 8, 8, w // 8, 8).transpose(0, 2, 1, 3)
    return fft.dctn(blocks, axes=(-2, -1), norm="ortho")


def psnr_hvs(ref: np.ndarray, test: np.ndarray, cfg: MetricConfig | None = None) -> float:
    """CSF-weighted DCT-domain PSNR in dB, capped like psnr."""
    cfg = cfg or default_config()
    _check_planes(ref, test)
    ref8 = pad_to_multiple(np.asarray(ref, float), 8)
    test8 = pad_to_multiple(np.asarray(test, float), 8)
    diff = _block_dct(ref8) - _block_dct(test8)
    weighted = float(np.mean((diff * cfg.csf) ** 2))
    if weighted == 0.0:
        return cfg.psnr_cap_db
    return min(cfg.psnr_cap_db, 10.0 * np.log10(1.0 / weighted))
