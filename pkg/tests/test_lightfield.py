"""Light field data model: classification, I/O round-trips, crop, sparse sampling."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lfstudy import (
    LightField,
    LightFieldError,
    View,
    ViewType,
    classify_view,
    crop_inner,
    load_light_field,
    make_light_field,
    sample_sparse,
    save_light_field,
    view_type_census,
)
from lfstudy.lightfield import load_view, save_view

from oracles import view_census_reference


class TestClassification:
    def test_parity_rules(self):
        assert classify_view(0, 0) is ViewType.S
        assert classify_view(2, 4) is ViewType.S
        assert classify_view(0, 1) is ViewType.X
        assert classify_view(3, 2) is ViewType.X
        assert classify_view(1, 1) is ViewType.O
        assert classify_view(3, 3) is ViewType.O

    def test_negative_coordinates_rejected(self):
        with pytest.raises(ValueError):
            classify_view(-1, 0)

    def test_census_5x5(self):
        assert view_type_census(5, 5) == {ViewType.S: 9, ViewType.X: 12, ViewType.O: 4}

    @given(st.integers(min_value=1, max_value=17))
    def test_census_matches_parity_combinatorics(self, n):
        got = {t.value: v for t, v in view_type_census(n, n).items()}
        assert got == view_census_reference(n)

    def test_census_rectangular(self):
        got = view_type_census(3, 5)
        assert sum(got.values()) == 15
        assert got[ViewType.S] == 2 * 3  # ceil(3/2) * ceil(5/2)


class TestViewModel:
    def test_shape_and_range_validation(self):
        with pytest.raises(LightFieldError):
            View(data=np.zeros((4, 4)))
        with pytest.raises(LightFieldError):
            View(data=np.full((4, 4, 3), 1.5))
        with pytest.raises(LightFieldError):
            View(data=np.zeros((4, 4, 3)), bit_depth=12)

    def test_codes_round_to_declared_depth(self):
        v = View(data=np.full((2, 2, 3), 0.5), bit_depth=10)
        assert v.codes().max() == round(0.5 * 1023)

    def test_grid_validation(self):
        good = View(data=np.zeros((4, 4, 3)))
        bad = View(data=np.zeros((4, 6, 3)))
        with pytest.raises(LightFieldError):
            LightField("x", [[good], [good, good]])
        with pytest.raises(LightFieldError):
            LightField("x", [[good, bad]])
        with pytest.raises(LightFieldError):
            LightField("x", [])


class TestFileRoundTrips:
    @pytest.mark.parametrize("bit_depth", [8, 10, 16])
    @pytest.mark.parametrize("fmt", ["ppm16", "png"])
    def test_view_round_trip_bit_exact(self, tmp_path, bit_depth, fmt):
        rng = np.random.default_rng(bit_depth)
        scale = (1 << bit_depth) - 1
        codes = rng.integers(0, scale + 1, (9, 7, 3))
        v = View(data=codes / scale, bit_depth=bit_depth)
        ext = "png" if fmt == "png" else "ppm"
        path = tmp_path / f"v.{ext}"
        save_view(v, path, fmt)
        back = load_view(path, bit_depth)
        assert np.array_equal(back.codes(), v.codes())

    def test_light_field_round_trip(self, tmp_path, lf_5x5):
        save_light_field(lf_5x5, tmp_path / "lf")
        back = load_light_field(tmp_path / "lf")
        assert back.content_id == lf_5x5.content_id
        assert (back.rows, back.cols) == (5, 5)
        assert back.bit_depth == lf_5x5.bit_depth
        for r, c in lf_5x5.coordinates():
            assert np.array_equal(back.view(r, c).codes(), lf_5x5.view(r, c).codes())

    def test_sidecar_drives_geometry(self, tmp_path, lf_5x5):
        save_light_field(lf_5x5, tmp_path / "lf")
        (tmp_path / "lf" / "lightfield.json").unlink()
        # no sidecar: extent is inferred from the file names
        back = load_light_field(tmp_path / "lf")
        assert (back.rows, back.cols) == (5, 5)

    def test_missing_view_reported(self, tmp_path, lf_5x5):
        save_light_field(lf_5x5, tmp_path / "lf")
        (tmp_path / "lf" / "v_03_02.ppm").unlink()
        with pytest.raises(LightFieldError, match=r"\(3, 2\)"):
            load_light_field(tmp_path / "lf")

    def test_depth_overflow_detected(self, tmp_path):
        v = View(data=np.full((4, 4, 3), 1.0), bit_depth=16)
        save_view(v, tmp_path / "v.ppm", "ppm16")
        with pytest.raises(LightFieldError, match="exceeds"):
            load_view(tmp_path / "v.ppm", 8)


class TestGridOps:
    def test_crop_inner_is_centered(self):
        lf = make_light_field("c", rows=9, cols=9, height=16, width=16, seed=1, max_shift=1)
        cropped = crop_inner(lf, 5, 5)
        assert (cropped.rows, cropped.cols) == (5, 5)
        # 9x9 -> 5x5 keeps source rows/cols 2..6
        assert np.array_equal(cropped.view(0, 0).data, lf.view(2, 2).data)
        assert np.array_equal(cropped.view(4, 4).data, lf.view(6, 6).data)

    def test_crop_rejects_uneven_margin(self, lf_5x5):
        with pytest.raises(LightFieldError):
            crop_inner(lf_5x5, 4, 4)
        with pytest.raises(LightFieldError):
            crop_inner(lf_5x5, 7, 7)

    def test_sample_sparse_keeps_even_coordinates(self, lf_5x5):
        sparse = sample_sparse(lf_5x5)
        assert (sparse.rows, sparse.cols) == (3, 3)
        for r in range(3):
            for c in range(3):
                assert np.array_equal(sparse.view(r, c).data, lf_5x5.view(2 * r, 2 * c).data)

    def test_sample_sparse_needs_odd_square_at_least_5(self):
        three = make_light_field("t", rows=3, cols=3, height=8, width=8, max_shift=1)
        with pytest.raises(LightFieldError):
            sample_sparse(three)
        four = LightField("f", [[View(data=np.zeros((4, 4, 3)))] * 4] * 4)
        with pytest.raises(LightFieldError):
            sample_sparse(four)

    def test_replace_view_does_not_mutate(self, lf_5x5):
        new = View(data=np.zeros((32, 32, 3)))
        out = lf_5x5.replace_view(1, 1, new)
        assert out.view(1, 1) is new
        assert lf_5x5.view(1, 1) is not new
