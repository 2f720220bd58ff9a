import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lfstudy import LightField, View, make_light_field, make_natural_image

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def luma_176():
    """Natural-statistics luma plane large enough for the 5-scale pyramid."""
    img = make_natural_image(176, 176, seed=7)
    return img @ np.array([0.2126, 0.7152, 0.0722])


@pytest.fixture(scope="session")
def luma_pair_176(luma_176):
    rng = np.random.default_rng(11)
    noisy = np.clip(luma_176 + rng.normal(0.0, 4.0 / 255.0, luma_176.shape), 0.0, 1.0)
    return luma_176, noisy


@pytest.fixture(scope="session")
def lf_5x5():
    return make_light_field("unitlf", rows=5, cols=5, height=32, width=32, seed=3)


@pytest.fixture(scope="session")
def lf_5x5_pair(lf_5x5):
    rng = np.random.default_rng(5)
    grid = []
    for r in range(lf_5x5.rows):
        row = []
        for c in range(lf_5x5.cols):
            v = lf_5x5.view(r, c)
            data = np.clip(v.data + rng.normal(0.0, 0.02, v.data.shape), 0.0, 1.0)
            row.append(View(data=data, bit_depth=v.bit_depth))
        grid.append(row)
    return lf_5x5, LightField("unitlf", grid)
