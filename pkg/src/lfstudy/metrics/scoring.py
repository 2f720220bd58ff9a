"""Metric dispatch and per-view scoring over a light field."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from ..lightfield import LightField, View, ViewType, classify_view
from .common import psnr as _psnr
from .common import to_luma
from .config import MetricConfig, default_config
from .fsim import fsimc as _fsimc
from .iw_ssim import iw_ssim as _iw_ssim
from .ms_ssim import ms_ssim as _ms_ssim
from .psnr_hvs import psnr_hvs as _psnr_hvs


class MetricId(str, Enum):
    PSNR = "psnr"
    PSNR_HVS = "psnr_hvs"
    MS_SSIM = "ms_ssim"
    FSIMC = "fsimc"
    IW_SSIM = "iw_ssim"


@dataclass(frozen=True)
class MetricResult:
    metric: MetricId
    value: float


@dataclass(frozen=True)
class LightFieldScore:
    metric: MetricId
    per_view: dict  # (row, col) -> MetricResult
    mean: float
    per_type_mean: dict  # ViewType -> float

    def value(self, row: int, col: int) -> float:
        return self.per_view[(row, col)].value


def compute_metric(metric: MetricId, ref: View, test: View, cfg: MetricConfig | None = None) -> MetricResult:
    cfg = cfg or default_config()
    metric = MetricId(metric)
    if metric is MetricId.PSNR:
        value = _psnr(to_luma(ref), to_luma(test), cap_db=cfg.psnr_cap_db)
    elif metric is MetricId.PSNR_HVS:
        value = _psnr_hvs(to_luma(ref), to_luma(test), cfg)
    elif metric is MetricId.MS_SSIM:
        value = _ms_ssim(to_luma(ref), to_luma(test), cfg)
    elif metric is MetricId.IW_SSIM:
        value = _iw_ssim(to_luma(ref), to_luma(test), cfg)
    elif metric is MetricId.FSIMC:
        value = _fsimc(ref, test, cfg)
    else:  # pragma: no cover - the enum is exhaustive
        raise ValueError(f"unknown metric {metric}")
    return MetricResult(metric=metric, value=float(value))


def score_light_field(
    ref: LightField, test: LightField, metric: MetricId, cfg: MetricConfig | None = None
) -> LightFieldScore:
    if (ref.rows, ref.cols) != (test.rows, test.cols) or (
        ref.view_height,
        ref.view_width,
    ) != (test.view_height, test.view_width):
        raise ValueError(
            f"geometry mismatch: {ref.rows}x{ref.cols} views of "
            f"{ref.view_height}x{ref.view_width} vs {test.rows}x{test.cols} views of "
            f"{test.view_height}x{test.view_width}"
        )
    cfg = cfg or default_config()
    metric = MetricId(metric)

    per_view = {}
    by_type: dict[ViewType, list[float]] = {t: [] for t in ViewType}
    for r, c in ref.coordinates():
        result = compute_metric(metric, ref.view(r, c), test.view(r, c), cfg)
        per_view[(r, c)] = result
        by_type[classify_view(r, c)].append(result.value)

    values = [res.value for res in per_view.values()]
    per_type_mean = {t: float(sum(v) / len(v)) for t, v in by_type.items() if v}
    return LightFieldScore(
        metric=metric,
        per_view=per_view,
        mean=float(sum(values) / len(values)),
        per_type_mean=per_type_mean,
    )
