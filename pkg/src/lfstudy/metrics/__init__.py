"""Full-reference objective quality metrics on normalized [0, 1] images."""

from .common import gaussian_window, psnr, to_luma
from .config import (
    FsimcParams,
    IwSsimParams,
    MetricConfig,
    MetricConfigError,
    MsSsimParams,
    default_config,
    load_metric_config,
)
from .fsim import fsim, fsimc, gradient_magnitude, phase_congruency
from .iw_ssim import information_weights, iw_ssim
from .ms_ssim import ms_ssim, ssim_maps
from .psnr_hvs import psnr_hvs
from .scoring import LightFieldScore, MetricId, MetricResult, compute_metric, score_light_field

__all__ = [
    "FsimcParams",
    "IwSsimParams",
    "LightFieldScore",
    "MetricConfig",
    "MetricConfigError",
    "MetricId",
    "MetricResult",
    "MsSsimParams",
    "compute_metric",
    "default_config",
    "fsim",
    "fsimc",
    "gaussian_window",
    "gradient_magnitude",
    "information_weights",
    "iw_ssim",
    "load_metric_config",
    "ms_ssim",
    "phase_congruency",
    "psnr",
    "psnr_hvs",
    "score_light_field",
    "ssim_maps",
    "to_luma",
]
