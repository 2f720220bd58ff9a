"""Metric parameter tables, loaded from versioned data files.

Defaults are transcribed from each metric's defining publication; a config
directory with the same file names overrides them, so parameter provenance
stays auditable without touching code.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np


class MetricConfigError(Exception):
    pass


def _read_data(name: str, config_dir: Path | None) -> str:
    if config_dir is not None:
        override = Path(config_dir) / name
        if override.exists():
            return override.read_text()
    return resources.files("lfstudy.metrics").joinpath(f"data/{name}").read_text()


@dataclass(frozen=True)
class MsSsimParams:
    scale_weights: tuple[float, ...]
    window_size: int
    window_sigma: float
    k1: float
    k2: float

    @property
    def scales(self) -> int:
        return len(self.scale_weights)

    def min_dimension(self) -> int:
        return self.window_size * 2 ** (self.scales - 1)


@dataclass(frozen=True)
class IwSsimParams(MsSsimParams):
    weight_window_size: int = 11
    weight_window_sigma: float = 1.5
    noise_variance: float = 6.1515e-06


@dataclass(frozen=True)
class FsimcParams:
    scales: int
    orientations: int
    min_wavelength: float
    mult: float
    sigma_on_f: float
    d_theta_on_sigma: float
    noise_k: float
    spread_cutoff: float
    spread_gain: float
    t_pc: float
    t_gradient: float
    t_chroma: float
    lambda_chroma: float
    downsample_base: int


@dataclass(frozen=True)
class MetricConfig:
    csf: np.ndarray
    ms_ssim: MsSsimParams
    iw_ssim: IwSsimParams
    fsimc: FsimcParams
    psnr_cap_db: float = 100.0


def _normalized_weights(raw, where: str) -> tuple[float, ...]:
    w = np.asarray(raw, dtype=float)
    if w.ndim != 1 or w.size < 1:
        raise MetricConfigError(f"{where}: scale_weights must be a non-empty list")
    if np.any(w <= 0):
        raise MetricConfigError(f"{where}: scale_weights must be positive")
    w = w / w.sum()
    assert abs(w.sum() - 1.0) < 1e-9
    return tuple(float(x) for x in w)


def load_metric_config(config_dir: str | Path | None = None, *, ms_ssim_scales: int | None = None) -> MetricConfig:
    """Load all parameter tables; ms_ssim_scales truncates the scale pyramid
    (and renormalizes weights) for content too small for the 5-scale default."""
    config_dir = Path(config_dir) if config_dir is not None else None

    csf = np.loadtxt(_read_data("psnr_hvs_csf.csv", config_dir).splitlines(), delimiter=",")
    if csf.shape != (8, 8):
        raise MetricConfigError(f"CSF matrix must be 8x8, got {csf.shape}")
    if np.any(csf <= 0):
        raise MetricConfigError("CSF matrix entries must be positive")

    ms_raw = json.loads(_read_data("ms_ssim.json", config_dir))
    iw_raw = json.loads(_read_data("iw_ssim.json", config_dir))
    fs_raw = json.loads(_read_data("fsimc.json", config_dir))

    if ms_ssim_scales is not None:
        for raw in (ms_raw, iw_raw):
            if not 1 <= ms_ssim_scales <= len(raw["scale_weights"]):
                raise MetricConfigError(f"cannot truncate to {ms_ssim_scales} scales")
            raw["scale_weights"] = raw["scale_weights"][:ms_ssim_scales]

    ms = MsSsimParams(
        scale_weights=_normalized_weights(ms_raw["scale_weights"], "ms_ssim"),
        window_size=int(ms_raw["window_size"]),
        window_sigma=float(ms_raw["window_sigma"]),
        k1=float(ms_raw["k1"]),
        k2=float(ms_raw["k2"]),
    )
    iw = IwSsimParams(
        scale_weights=_normalized_weights(iw_raw["scale_weights"], "iw_ssim"),
        window_size=int(iw_raw["window_size"]),
        window_sigma=float(iw_raw["window_sigma"]),
        k1=float(iw_raw["k1"]),
        k2=float(iw_raw["k2"]),
        weight_window_size=int(iw_raw["weight_window_size"]),
        weight_window_sigma=float(iw_raw["weight_window_sigma"]),
        noise_variance=float(iw_raw["noise_variance"]),
    )
    if iw.noise_variance <= 0:
        raise MetricConfigError("iw_ssim noise_variance must be positive")
    fs = FsimcParams(**{k: fs_raw[k] for k in FsimcParams.__dataclass_fields__})
    if fs.scales < 2 or fs.orientations < 1:
        raise MetricConfigError("fsimc needs >= 2 scales and >= 1 orientation")

    return MetricConfig(csf=csf, ms_ssim=ms, iw_ssim=iw, fsimc=fs)


_default_config: MetricConfig | None = None


def default_config() -> MetricConfig:
    global _default_config
    if _default_config is None:
        _default_config = load_metric_config()
    return _default_config
