"""Synthetic content and simulated observers for desk-scale runs and demos.

Light fields are generated as shifted crops of a 1/f-spectrum image, which
gives plausible parallax and enough structure (edges, texture, smooth areas)
for codecs and metrics to react to. Observers answer triplets according to
the same Case V model the scaling stage assumes, so recovery against a known
ground truth is a meaningful end-to-end check.
"""

from __future__ import annotations

import random

import numpy as np
from scipy.stats import norm

from .lightfield import LightField, View
from .study import Choice, Response


def make_natural_image(height: int, width: int, seed: int = 0, color: bool = True) -> np.ndarray:
    """(h, w, 3) array in [0, 1] with a 1/f amplitude spectrum plus a few
    hard-edged disks; channels share most of their structure."""
    rng = np.random.default_rng(seed)
    fy = np.fft.fftfreq(height)[:, None]
    fx = np.fft.fftfreq(width)[None, :]
    radius = np.hypot(fy, fx)
    radius[0, 0] = 1.0
    amplitude = 1.0 / radius
    amplitude[0, 0] = 0.0

    shared = rng.uniform(0.0, 2.0 * np.pi, (height, width))
    channels = []
    for _ in range(3):
        jitter = 0.3 * rng.uniform(0.0, 2.0 * np.pi, (height, width)) if color else 0.0
        spectrum = amplitude * np.exp(1j * (shared + jitter))
        channels.append(np.fft.ifft2(spectrum).real)
    img = np.stack(channels, axis=-1)

    yy, xx = np.mgrid[0:height, 0:width]
    for _ in range(4):
        cy, cx = rng.uniform(0, height), rng.uniform(0, width)
        r = rng.uniform(min(height, width) / 12, min(height, width) / 5)
        tint = rng.uniform(0.0, 1.0, 3)
        mask = (yy - cy) ** 2 + (xx - cx) ** 2 < r**2
        img[mask] = 0.6 * img[mask] + 0.4 * (tint * np.ptp(img) + img.min())

    img = (img - img.min()) / (img.max() - img.min())
    return 0.02 + 0.96 * img


def make_light_field(
    content_id: str = "synthetic",
    rows: int = 5,
    cols: int = 5,
    height: int = 64,
    width: int = 64,
    seed: int = 0,
    bit_depth: int = 8,
    max_shift: int = 2,
) -> LightField:
    """Views are crops of one base image shifted proportionally to their grid
    offset, mimicking a translating camera."""
    margin = max_shift * max(rows, cols)
    base = make_natural_image(height + 2 * margin, width + 2 * margin, seed)
    scale = (1 << bit_depth) - 1
    cy, cx = rows // 2, cols // 2
    grid = []
    for r in range(rows):
        row = []
        for c in range(cols):
            dy = margin + (r - cy) * max_shift
            dx = margin + (c - cx) * max_shift
            data = base[dy : dy + height, dx : dx + width]
            # quantize to the declared depth so file round-trips are exact
            data = np.rint(data * scale) / scale
            row.append(View(data=data, bit_depth=bit_depth))
        grid.append(row)
    return LightField(content_id, grid)


def simulate_responses(
    triplets,
    sessions,
    truth: dict[str, float],
    seed: int = 0,
    not_sure_rate: float = 0.0,
) -> list[Response]:
    """Answer every scheduled entry per Thurstone Case V on quality scores.

    truth maps condition labels (REFERENCE included) to latent quality; the
    probability of calling the left side the stronger flicker (lower quality)
    is Phi((q_right - q_left) / sqrt(2)).
    """
    by_id = {t.id: t for t in triplets}
    rng = random.Random(seed)
    responses = []
    for session in sessions:
        for tid, swapped in session.entries:
            t = by_id[tid]
            la, lb = t.left.label(), t.right.label()
            if la not in truth or lb not in truth:
                missing = la if la not in truth else lb
                raise KeyError(f"no ground-truth score for condition {missing!r}")
            if not_sure_rate > 0.0 and rng.random() < not_sure_rate:
                choice = Choice.NOT_SURE
            else:
                p_left_flickers = float(norm.cdf((truth[lb] - truth[la]) / np.sqrt(2.0)))
                picked_left = rng.random() < p_left_flickers
                shown_left = picked_left != swapped  # swap moves the pick to the other side
                choice = Choice.LEFT if shown_left else Choice.RIGHT
            responses.append(
                Response(
                    observer_id=session.observer_id,
                    triplet_id=tid,
                    choice=choice,
                    latency_ms=rng.uniform(700.0, 2500.0),
                    presented_swapped=swapped,
                )
            )
    return responses


def ground_truth_for(triplets, quality_of) -> dict[str, float]:
    """Convenience: label -> quality for every condition appearing in triplets.

    quality_of runs once per distinct label, on its first carrier."""
    truth: dict[str, float] = {}
    for t in triplets:
        for s in (t.reference, t.left, t.right):
            label = s.label()
            if label not in truth:
                truth[label] = quality_of(s)
    return truth
