"""Condition pipeline: synthesis plan structure, stand-in codec behavior,
rate control, view selection, external adapters, manifest round-trip."""

import json
import os
import stat
import sys

import numpy as np
import pytest

from lfstudy import (
    BlendSynthesizer,
    EncodingMethod,
    ExternalCodec,
    ExternalSynthesizer,
    LightField,
    PipelineError,
    StandInCodec,
    View,
    ViewType,
    build_synthesis_plan,
    classify_view,
    make_light_field,
    run_condition,
    sample_sparse,
    select_test_views,
)
from lfstudy.pipeline import (
    BITRATE_LADDER,
    load_codec_adapters,
    read_condition_manifest,
    standin_encode_decode,
    write_condition_manifest,
)

from helpers import make_condition


class TestSynthesisPlan:
    def test_step_census_5x5(self):
        plan = build_synthesis_plan(5, 5)
        stage1 = [s for s in plan.steps if s.stage == 1]
        stage2 = [s for s in plan.steps if s.stage == 2]
        assert len(stage1) == 12
        assert len(stage2) == 4
        assert {s.target for s in stage1} == {
            (r, c) for r in range(5) for c in range(5) if classify_view(r, c) is ViewType.X
        }
        assert {s.target for s in stage2} == {(1, 1), (1, 3), (3, 1), (3, 3)}

    def test_stage1_sources_flank_their_target(self):
        plan = build_synthesis_plan(5, 5)
        for s in plan.steps:
            if s.stage != 1:
                continue
            (r1, c1), (r2, c2) = s.sources
            r, c = s.target
            assert classify_view(r1, c1) is ViewType.S
            assert classify_view(r2, c2) is ViewType.S
            if r % 2 == 0:  # even row: horizontal neighbors
                assert (r1, c1) == (r, c - 1) and (r2, c2) == (r, c + 1)
            else:  # even column: vertical neighbors
                assert (r1, c1) == (r - 1, c) and (r2, c2) == (r + 1, c)

    def test_stage2_sources_are_horizontal_stage1_views(self):
        plan = build_synthesis_plan(5, 5)
        stage1_targets = {s.target for s in plan.steps if s.stage == 1}
        for s in plan.steps:
            if s.stage != 2:
                continue
            r, c = s.target
            assert s.sources == ((r, c - 1), (r, c + 1))
            assert set(s.sources) <= stage1_targets

    def test_step_order_is_computable(self):
        # every source is available by the time its step runs
        plan = build_synthesis_plan(7, 7)
        have = {(r, c) for r in range(7) for c in range(7) if classify_view(r, c) is ViewType.S}
        for s in plan.steps:
            assert set(s.sources) <= have
            have.add(s.target)
        assert len(have) == 49

    def test_rejects_bad_geometry(self):
        for rows, cols in ((4, 4), (5, 7), (3, 3)):
            with pytest.raises(PipelineError):
                build_synthesis_plan(rows, cols)


class TestStandInCodec:
    def test_quality_100_is_lossless(self, lf_5x5):
        recon, bits = standin_encode_decode(lf_5x5, 100)
        assert recon is lf_5x5
        assert bits == 25 * 32 * 32 * 3 * 8

    def test_lower_quality_lower_rate_higher_error(self, lf_5x5):
        prev_bits = None
        prev_mse = -1.0
        for q in (90, 50, 20, 5):
            recon, bits = standin_encode_decode(lf_5x5, q)
            mse = np.mean(
                [
                    (recon.view(r, c).data - lf_5x5.view(r, c).data) ** 2
                    for r, c in lf_5x5.coordinates()
                ]
            )
            if prev_bits is not None:
                assert bits < prev_bits
                assert mse > prev_mse
            prev_bits, prev_mse = bits, mse

    def test_quality_range_enforced(self, lf_5x5):
        for q in (0, 101, -3):
            with pytest.raises(PipelineError):
                standin_encode_decode(lf_5x5, q)

    def test_rate_control_meets_target_when_reachable(self, lf_5x5):
        codec = StandInCodec(name="standin")
        pixels = 25 * 32 * 32
        _, bits = codec.encode_decode(lf_5x5, 2.0)
        assert bits / pixels <= 2.0
        # and it does not grossly undershoot: quality+1 would overshoot
        _, bits_hi = standin_encode_decode(lf_5x5, 99)
        assert bits_hi / pixels > 2.0

    def test_unreachable_target_degrades_to_worst_quality(self, lf_5x5):
        codec = StandInCodec(name="standin")
        recon, bits = codec.encode_decode(lf_5x5, 1e-6)
        floor, floor_bits = standin_encode_decode(lf_5x5, 1)
        assert bits == floor_bits
        for r, c in lf_5x5.coordinates():
            assert np.array_equal(recon.view(r, c).data, floor.view(r, c).data)

    def test_fixed_quality_wins_over_target(self, lf_5x5):
        codec = StandInCodec(name="q40", quality=40)
        recon, bits = codec.encode_decode(lf_5x5, 1e9)
        ref, ref_bits = standin_encode_decode(lf_5x5, 40)
        assert bits == ref_bits

    def test_table_scale_differentiates_variants(self, lf_5x5):
        a, _ = StandInCodec(name="a", quality=30).encode_decode(lf_5x5, 0)
        b, _ = StandInCodec(name="b", quality=30, table_scale=1.6).encode_decode(lf_5x5, 0)
        diff = max(
            np.abs(a.view(r, c).data - b.view(r, c).data).max() for r, c in lf_5x5.coordinates()
        )
        assert diff > 0.0


class TestRunCondition:
    def test_full_geometry_and_label(self, lf_5x5):
        recon, cond = run_condition(lf_5x5, StandInCodec(quality=50), "full5x5", 0.472)
        assert (recon.rows, recon.cols) == (5, 5)
        assert cond.label() == "standin_full5x5_0.472"
        assert cond.achieved_bitrate_bpp > 0
        assert cond.wall_clock_s >= 0

    def test_sparse_codes_9_views_and_synthesizes_16(self, lf_5x5):
        codec = StandInCodec(quality=100)
        recon, cond = run_condition(lf_5x5, codec, EncodingMethod.SPARSE3X3, 1.0)
        assert (recon.rows, recon.cols) == (5, 5)
        # S views pass through the lossless codec untouched
        for r, c in lf_5x5.coordinates():
            if classify_view(r, c) is ViewType.S:
                assert np.array_equal(recon.view(r, c).data, lf_5x5.view(r, c).data)
        # X views are the blend of their flanking S views
        x01 = (lf_5x5.view(0, 0).data + lf_5x5.view(0, 2).data) / 2
        assert np.allclose(recon.view(0, 1).data, x01)
        x10 = (lf_5x5.view(0, 0).data + lf_5x5.view(2, 0).data) / 2
        assert np.allclose(recon.view(1, 0).data, x10)
        # O views blend horizontally adjacent stage-1 X views
        assert np.allclose(
            recon.view(1, 1).data, (recon.view(1, 0).data + recon.view(1, 2).data) / 2
        )

    def test_constant_field_sparse_equals_full_exactly(self):
        flat = View(data=np.full((16, 16, 3), 0.5))
        lf = LightField("flat", [[flat] * 5 for _ in range(5)])
        codec = StandInCodec(quality=35)
        full, _ = run_condition(lf, codec, "full5x5", 1.0)
        sparse, _ = run_condition(lf, codec, "sparse3x3", 1.0)
        for r, c in lf.coordinates():
            assert np.array_equal(sparse.view(r, c).data, full.view(r, c).data)

    def test_sparse_bpp_accounts_only_coded_views(self, lf_5x5):
        codec = StandInCodec(quality=60)
        _, cond = run_condition(lf_5x5, codec, "sparse3x3", 1.0)
        _, bits = codec.encode_decode(sample_sparse(lf_5x5), 1.0)
        assert cond.achieved_bitrate_bpp == pytest.approx(bits / (9 * 32 * 32))


class TestSelectTestViews:
    def test_picks_worst_per_type(self):
        scores = {(r, c): 50.0 for r in range(5) for c in range(5)}
        scores[(2, 2)] = 10.0  # S
        scores[(0, 3)] = 9.0  # X
        scores[(3, 3)] = 8.0  # O
        got = select_test_views(scores)
        assert got == {ViewType.S: (2, 2), ViewType.X: (0, 3), ViewType.O: (3, 3)}

    def test_ties_break_row_major(self):
        scores = {(r, c): 1.0 for r in range(5) for c in range(5)}
        got = select_test_views(scores)
        assert got == {ViewType.S: (0, 0), ViewType.X: (0, 1), ViewType.O: (1, 1)}

    def test_missing_views_rejected(self):
        scores = {(r, c): 1.0 for r in range(5) for c in range(5)}
        del scores[(4, 4)]
        with pytest.raises(PipelineError, match="missing"):
            select_test_views(scores)


class TestExternalAdapters:
    @pytest.fixture()
    def copy_codec(self, tmp_path):
        """A do-nothing external codec: the bitstream is a tar-free directory
        copy, decode restores it."""
        enc = tmp_path / "enc.py"
        enc.write_text(
            "import shutil, sys\n"
            "shutil.make_archive(sys.argv[2], 'zip', sys.argv[1])\n"
            "shutil.move(sys.argv[2] + '.zip', sys.argv[2])\n"
        )
        dec = tmp_path / "dec.py"
        dec.write_text(
            "import shutil, sys\n"
            "shutil.unpack_archive(sys.argv[1], sys.argv[2], 'zip')\n"
        )
        return ExternalCodec(
            name="copy",
            encode_cmd=f"{sys.executable} {enc} {{input}} {{output}}",
            decode_cmd=f"{sys.executable} {dec} {{input}} {{output}}",
        )

    def test_external_codec_round_trip(self, copy_codec, lf_5x5):
        recon, bits = copy_codec.encode_decode(lf_5x5, 1.0)
        assert bits > 0
        for r, c in lf_5x5.coordinates():
            assert np.array_equal(recon.view(r, c).codes(), lf_5x5.view(r, c).codes())

    def test_external_codec_failure_reported(self, lf_5x5):
        codec = ExternalCodec(
            name="broken",
            encode_cmd=f"{sys.executable} -c 'import sys; sys.exit(3)'",
            decode_cmd="true {input} {output}",
        )
        with pytest.raises(PipelineError, match="exit 3"):
            codec.encode_decode(lf_5x5, 1.0)

    def test_external_synthesizer(self, tmp_path):
        script = tmp_path / "synth.py"
        script.write_text(
            "import sys\n"
            "import numpy as np\n"
            "sys.path.insert(0, {!r})\n".format(os.path.join(os.getcwd(), "src"))
            + "from lfstudy.lightfield import load_view, save_view, View\n"
            "a = load_view(sys.argv[1], 8)\n"
            "b = load_view(sys.argv[2], 8)\n"
            "save_view(View(np.minimum(a.data, b.data)), sys.argv[3], 'ppm16')\n"
        )
        synth = ExternalSynthesizer(command=f"{sys.executable} {script} {{left}} {{right}} {{output}}")
        a = View(data=np.full((8, 8, 3), 64 / 255))
        b = View(data=np.full((8, 8, 3), 192 / 255))
        out = synth.synthesize(a, b)
        assert np.array_equal(out.data, a.data)

    def test_blend_synthesizer_is_midpoint(self):
        a = View(data=np.zeros((4, 4, 3)))
        b = View(data=np.ones((4, 4, 3)))
        out = BlendSynthesizer().synthesize(a, b)
        assert np.array_equal(out.data, np.full((4, 4, 3), 0.5))

    def test_adapter_config_loading(self, tmp_path):
        cfg = tmp_path / "codecs.json"
        cfg.write_text(
            json.dumps(
                {
                    "pleno": {"type": "standin", "table_scale": 1.0},
                    "vvc": {"type": "standin", "table_scale": 1.6},
                    "real": {"encode_cmd": "enc {input} {output} {bpp}", "decode_cmd": "dec {input} {output}"},
                }
            )
        )
        adapters = load_codec_adapters(cfg)
        assert isinstance(adapters["pleno"], StandInCodec)
        assert adapters["vvc"].table_scale == 1.6
        assert isinstance(adapters["real"], ExternalCodec)
        assert adapters["real"].name == "real"


class TestConditionManifest:
    def test_round_trip(self, tmp_path):
        cond = make_condition("pleno", "sparse3x3", 0.472)
        entries = [
            {"content_id": "seagull", "light_field_dir": "lf/ref", "condition": None, "rows": 5, "cols": 5},
            {"content_id": "seagull", "light_field_dir": "lf/c1", "condition": cond, "rows": 5, "cols": 5},
        ]
        path = tmp_path / "conditions.json"
        write_condition_manifest(path, entries, extra={"synthesizer": "blend", "seed": 9})
        back = read_condition_manifest(path)
        assert back[0]["condition"] is None
        assert back[1]["condition"].label() == cond.label()
        assert back[1]["condition"].achieved_bitrate_bpp == cond.achieved_bitrate_bpp
        payload = json.loads(path.read_text())
        assert payload["synthesizer"] == "blend"
        assert payload["entries"][0]["view_types"]["0,1"] == "X"

    def test_schema_guard(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"schema": "other", "entries": []}))
        with pytest.raises(PipelineError, match="schema"):
            read_condition_manifest(p)


def test_paper_ladder_constant():
    assert BITRATE_LADDER == (0.118, 0.236, 0.472, 1.003)
