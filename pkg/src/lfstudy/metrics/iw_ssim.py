"""Information-content-weighted SSIM (after Wang & Li, IEEE TIP 2011).

Shares the multi-scale SSIM skeleton of ms_ssim but pools each scale's map
with per-pixel weights derived from a local Gaussian source/channel model:
the reference patch is the source, the distorted patch is the source passed
through a gain-plus-noise channel, and the weight is the information the pair
carries relative to a fixed visual noise floor,

    w = log2(1 + s1/sn) + log2(1 + g^2 s1 / (sv + sn)),

with s1 the reference variance, g = cov/s1 the channel gain, sv the channel
residual and sn the noise floor. Disabling weighting reproduces ms_ssim.
"""

from __future__ import annotations

import numpy as np

from .common import _check_planes, downsample2, gaussian_window, local_mean
from .config import IwSsimParams, MetricConfig, default_config
from .ms_ssim import _POOL_FLOOR, ssim_maps

_EPS = 1e-12


def information_weights(ref: np.ndarray, test: np.ndarray, params: IwSsimParams) -> np.ndarray:
    win = gaussian_window(params.weight_window_size, params.weight_window_sigma)
    mu_x = local_mean(ref, win)
    mu_y = local_mean(test, win)
    s1 = np.maximum(local_mean(ref * ref, win) - mu_x * mu_x, 0.0)
    s2 = np.maximum(local_mean(test * test, win) - mu_y * mu_y, 0.0)
    s12 = local_mean(ref * test, win) - mu_x * mu_y

    g = s12 / (s1 + _EPS)
    sv = s2 - g * s12
    g = np.where(s1 < _EPS, 0.0, g)
    sv = np.where(s1 < _EPS, s2, sv)
    sv = np.maximum(sv, 0.0)

    sn = params.noise_variance
    return np.log2(1.0 + s1 / sn) + np.log2(1.0 + (g**2) * s1 / (sv + sn))


def _pool(score_map: np.ndarray, weights: np.ndarray | None) -> float:
    if weights is None:
        return float(np.mean(score_map))
    total = float(weights.sum())
    if total < _EPS:  # constant content carries no information; fall back
        return float(np.mean(score_map))
    return float((score_map * weights).sum() / total)


def iw_ssim(
    ref: np.ndarray,
    test: np.ndarray,
    cfg: MetricConfig | None = None,
    *,
    weighted: bool = True,
) -> float:
    """weighted=False disables information weighting and equals ms_ssim."""
    cfg = cfg or default_config()
    params = cfg.iw_ssim
    _check_planes(ref, test)
    if min(ref.shape) < params.min_dimension():
        raise ValueError(
            f"image min dimension {min(ref.shape)} < {params.min_dimension()} required "
            f"for {params.scales} scales"
        )

    x = np.asarray(ref, float)
    y = np.asarray(test, float)
    value = 1.0
    for level, weight in enumerate(params.scale_weights):
        lum, cs = ssim_maps(x, y, params)
        w = information_weights(x, y, params) if weighted else None
        if level == params.scales - 1:
            pooled = _pool(lum * cs, w)
        else:
            pooled = _pool(cs, w)
            x, y = downsample2(x), downsample2(y)
        value *= max(pooled, _POOL_FLOOR) ** weight
    return value
