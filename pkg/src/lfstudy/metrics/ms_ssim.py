"""Multi-scale SSIM (Wang, Simoncelli & Bovik, Asilomar 2003).

Contrast/structure terms are pooled at every scale, the luminance term only at
the coarsest; pooled means are combined as a weighted geometric mean using the
(normalized) published scale weights. Local statistics use an 11x11 Gaussian
window with symmetric boundary handling, and each scale halves the image with
a 2x2 box filter.
"""

from __future__ import annotations

import numpy as np

from .common import _check_planes, downsample2, gaussian_window, local_mean
from .config import MetricConfig, MsSsimParams, default_config

# pooled means are floored here before the fractional exponents so adversarial
# anti-correlated inputs cannot produce NaN; never binds on natural content
_POOL_FLOOR = 1e-12


def ssim_maps(
    ref: np.ndarray, test: np.ndarray, params: MsSsimParams
) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel luminance and contrast/structure maps (same size as input)."""
    win = gaussian_window(params.window_size, params.window_sigma)
    c1 = params.k1**2
    c2 = params.k2**2

    mu_x = local_mean(ref, win)
    mu_y = local_mean(test, win)
    sxx = local_mean(ref * ref, win) - mu_x * mu_x
    syy = local_mean(test * test, win) - mu_y * mu_y
    sxy = local_mean(ref * test, win) - mu_x * mu_y

    lum = (2.0 * mu_x * mu_y + c1) / (mu_x**2 + mu_y**2 + c1)
    cs = (2.0 * sxy + c2) / (sxx + syy + c2)
    return lum, cs


def ms_ssim(ref: np.ndarray, test: np.ndarray, cfg: MetricConfig | None = None) -> float:
    cfg = cfg or default_config()
    params = cfg.ms_ssim
    _check_planes(ref, test)
    if min(ref.shape) < params.min_dimension():
        raise ValueError(
            f"image min dimension {min(ref.shape)} < {params.min_dimension()} required "
            f"for {params.scales} scales (scale reduction is not applied implicitly)"
        )

    x = np.asarray(ref, float)
    y = np.asarray(test, float)
    value = 1.0
    for level, weight in enumerate(params.scale_weights):
        lum, cs = ssim_maps(x, y, params)
        if level == params.scales - 1:
            pooled = float(np.mean(lum * cs))
        else:
            pooled = float(np.mean(cs))
            x, y = downsample2(x), downsample2(y)
        value *= max(pooled, _POOL_FLOOR) ** weight
    return value
