"""Shared metric plumbing: PSNR, windows, padding, luma conversion."""

import numpy as np
import pytest

from lfstudy import View, psnr
from lfstudy.metrics.common import downsample2, gaussian_window, pad_to_multiple, to_luma

from oracles import psnr_reference


def test_psnr_matches_direct_formula():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = rng.random((13, 17))
        b = np.clip(a + rng.normal(0, 0.05, a.shape), 0, 1)
        assert psnr(a, b) == pytest.approx(psnr_reference(a, b), abs=1e-12)


def test_psnr_identity_hits_cap():
    a = np.random.default_rng(1).random((8, 8))
    assert psnr(a, a) == 100.0
    assert psnr(a, a, cap_db=60.0) == 60.0


def test_psnr_cap_binds_on_tiny_errors():
    a = np.zeros((16, 16))
    b = np.full_like(a, 1e-9)
    assert psnr(a, b) == 100.0


def test_psnr_rejects_shape_mismatch():
    with pytest.raises(ValueError):
        psnr(np.zeros((4, 4)), np.zeros((4, 5)))
    with pytest.raises(ValueError):
        psnr(np.zeros((4, 4, 3)), np.zeros((4, 4, 3)))


def test_gaussian_window_normalized_and_symmetric():
    w = gaussian_window(11, 1.5)
    assert w.shape == (11, 11)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(w, w.T)
    assert np.allclose(w, w[::-1, ::-1])
    assert w[5, 5] == w.max()


def test_pad_to_multiple_is_symmetric():
    x = np.arange(6.0).reshape(2, 3)
    p = pad_to_multiple(x, 4)
    assert p.shape == (4, 4)
    # bottom rows mirror back upward, right columns mirror leftward
    assert np.array_equal(p[2], p[1])
    assert np.array_equal(p[3], p[0])
    assert np.array_equal(p[:, 3], p[:, 2])
    y = np.ones((8, 8))
    assert pad_to_multiple(y, 8) is y


def test_downsample2_box_average():
    x = np.array([[1.0, 3.0], [5.0, 7.0]])
    assert downsample2(x).item() == pytest.approx(4.0)
    # odd extent duplicates the trailing row/col before averaging
    x3 = np.arange(9.0).reshape(3, 3)
    d = downsample2(x3)
    assert d.shape == (2, 2)
    assert d[0, 0] == pytest.approx((0 + 1 + 3 + 4) / 4)
    assert d[1, 1] == pytest.approx((8 + 8 + 8 + 8) / 4)


def test_to_luma_bt709():
    v = View(data=np.stack([np.full((2, 2), 0.25), np.full((2, 2), 0.5), np.full((2, 2), 1.0)], axis=-1))
    y = to_luma(v)
    assert y == pytest.approx(0.2126 * 0.25 + 0.7152 * 0.5 + 0.0722 * 1.0)
    white = View(data=np.ones((2, 2, 3)))
    assert to_luma(white) == pytest.approx(1.0)
