"""Feature similarity index (FSIM / FSIMc, after Zhang et al., IEEE TIP 2011).

Low-level features on luma: phase congruency (Kovesi's log-Gabor frequency
domain construction with Rayleigh noise thresholding and a frequency-spread
sigmoid penalty) and Scharr gradient magnitude. FSIMc adds chrominance
similarity on the I/Q opponent channels. Similarity maps are pooled with the
pointwise maximum of the two phase congruency maps.

Internally images are scaled to 0..255 so the stabilization constants keep
their published 8-bit magnitudes.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .config import FsimcParams, MetricConfig, default_config

_EPS = 1e-4

# RGB -> NTSC YIQ, rows are Y, I, Q
_YIQ = np.array(
    [
        [0.299, 0.587, 0.114],
        [0.596, -0.274, -0.322],
        [0.211, -0.523, 0.312],
    ]
)

_SCHARR_X = np.array([[3.0, 0.0, -3.0], [10.0, 0.0, -10.0], [3.0, 0.0, -3.0]]) / 16.0
_SCHARR_Y = _SCHARR_X.T


def _freq_range(n: int) -> np.ndarray:
    if n % 2:
        return np.arange(-(n - 1) // 2, (n - 1) // 2 + 1) / (n - 1)
    return np.arange(-(n // 2), n // 2) / n


def phase_congruency(plane: np.ndarray, params: FsimcParams) -> np.ndarray:
    """Phase congruency map in [0, 1]; zero for featureless input."""
    rows, cols = plane.shape
    imfft = np.fft.fft2(plane)

    x, y = np.meshgrid(_freq_range(cols), _freq_range(rows))
    radius = np.fft.ifftshift(np.hypot(x, y))
    theta = np.fft.ifftshift(np.arctan2(-y, x))
    lowpass = 1.0 / (1.0 + (radius / 0.45) ** 30)  # Butterworth, cutoff .45 order 15
    radius[0, 0] = 1.0  # avoid log(0) at DC; the filters zero it out again
    sintheta, costheta = np.sin(theta), np.cos(theta)

    log_gabors = []
    for s in range(params.scales):
        f0 = 1.0 / (params.min_wavelength * params.mult**s)
        lg = np.exp(-(np.log(radius / f0) ** 2) / (2 * np.log(params.sigma_on_f) ** 2))
        lg *= lowpass
        lg[0, 0] = 0.0
        log_gabors.append(lg)

    theta_sigma = np.pi / params.orientations / params.d_theta_on_sigma
    energy_all = np.zeros((rows, cols))
    an_all = np.zeros((rows, cols))

    for o in range(params.orientations):
        angle = o * np.pi / params.orientations
        ds = sintheta * np.cos(angle) - costheta * np.sin(angle)
        dc = costheta * np.cos(angle) + sintheta * np.sin(angle)
        dtheta = np.abs(np.arctan2(ds, dc))
        spread = np.exp(-(dtheta**2) / (2 * theta_sigma**2))

        responses = [np.fft.ifft2(imfft * (lg * spread)) for lg in log_gabors]
        amplitudes = [np.abs(eo) for eo in responses]
        sum_an = np.sum(amplitudes, axis=0)
        sum_e = np.sum([eo.real for eo in responses], axis=0)
        sum_o = np.sum([eo.imag for eo in responses], axis=0)
        max_an = np.max(amplitudes, axis=0)

        x_energy = np.hypot(sum_e, sum_o) + _EPS
        mean_e = sum_e / x_energy
        mean_o = sum_o / x_energy
        energy = np.zeros((rows, cols))
        for eo in responses:
            energy += eo.real * mean_e + eo.imag * mean_o
            energy -= np.abs(eo.real * mean_o - eo.imag * mean_e)

        # Rayleigh noise threshold estimated from the smallest-scale response
        tau = np.median(amplitudes[0]) / np.sqrt(np.log(4.0))
        total_tau = tau * (1 - (1 / params.mult) ** params.scales) / (1 - 1 / params.mult)
        noise_mean = total_tau * np.sqrt(np.pi / 2)
        noise_sigma = total_tau * np.sqrt((4 - np.pi) / 2)
        energy = np.maximum(energy - (noise_mean + params.noise_k * noise_sigma), 0.0)

        # penalize congruency measured over a narrow frequency spread
        width = (sum_an / (max_an + _EPS) - 1) / (params.scales - 1)
        weight = 1.0 / (1.0 + np.exp((params.spread_cutoff - width) * params.spread_gain))

        energy_all += weight * energy
        an_all += sum_an

    return energy_all / (an_all + _EPS)


def gradient_magnitude(plane: np.ndarray) -> np.ndarray:
    gx = ndimage.correlate(plane, _SCHARR_X, mode="reflect")
    gy = ndimage.correlate(plane, _SCHARR_Y, mode="reflect")
    return np.hypot(gx, gy)


def _downsample(plane: np.ndarray, factor: int) -> np.ndarray:
    if factor <= 1:
        return plane
    smoothed = ndimage.uniform_filter(plane, size=factor, mode="reflect")
    return smoothed[::factor, ::factor]


def _similarity(a: np.ndarray, b: np.ndarray, c: float) -> np.ndarray:
    return (2.0 * a * b + c) / (a**2 + b**2 + c)


def _rgb(view) -> np.ndarray:
    # accept both View objects and plain (h, w, 3) arrays; ndarrays expose a
    # .data memoryview, so an hasattr probe is not enough here
    data = view.data if not isinstance(view, np.ndarray) and hasattr(view, "data") else view
    data = np.asarray(data, float)
    if data.ndim != 3 or data.shape[2] != 3:
        raise ValueError("fsimc requires 3-channel color input")
    return data


def _score(ref, test, cfg: MetricConfig | None, with_chroma: bool) -> float:
    cfg = cfg or default_config()
    p = cfg.fsimc
    a, b = _rgb(ref), _rgb(test)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")

    yiq1 = (255.0 * a) @ _YIQ.T
    yiq2 = (255.0 * b) @ _YIQ.T
    factor = max(1, round(min(a.shape[:2]) / p.downsample_base))
    y1 = _downsample(yiq1[..., 0], factor)
    y2 = _downsample(yiq2[..., 0], factor)

    pc1 = phase_congruency(y1, p)
    pc2 = phase_congruency(y2, p)
    sim = _similarity(pc1, pc2, p.t_pc) * _similarity(
        gradient_magnitude(y1), gradient_magnitude(y2), p.t_gradient
    )
    if with_chroma:
        s_i = _similarity(_downsample(yiq1[..., 1], factor), _downsample(yiq2[..., 1], factor), p.t_chroma)
        s_q = _similarity(_downsample(yiq1[..., 2], factor), _downsample(yiq2[..., 2], factor), p.t_chroma)
        # opponent channels can be anticorrelated; keep the base positive
        # so the fractional exponent stays real
        sim = sim * np.maximum(s_i * s_q, _EPS) ** p.lambda_chroma

    pcm = np.maximum(pc1, pc2)
    mass = float(pcm.sum())
    if mass < _EPS:  # featureless pair: congruency carries no pooling signal
        return float(sim.mean())
    return float((sim * pcm).sum() / mass)


def fsimc(ref, test, cfg: MetricConfig | None = None) -> float:
    return _score(ref, test, cfg, with_chroma=True)


def fsim(ref, test, cfg: MetricConfig | None = None) -> float:
    """Luma-only variant; equals fsimc when both inputs are achromatic."""
    return _score(ref, test, cfg, with_chroma=False)
