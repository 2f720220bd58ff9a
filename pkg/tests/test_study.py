"""Triplet question generation, session scheduling, attention screening."""

import math
from collections import Counter, defaultdict

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lfstudy import (
    Choice,
    QuestionType,
    Response,
    StudyError,
    TripletRuleset,
    census,
    default_ruleset,
    generate_triplets,
    read_study_manifest,
    schedule_sessions,
    validate_responses,
    write_study_manifest,
)
from lfstudy.study import CrossCodecExclusion, resolve_choice, ruleset_from_json, ruleset_to_json

from helpers import make_catalog, make_stimuli
from oracles import triplet_counts_reference

LADDER = (0.118, 0.236, 0.472, 1.003)


@pytest.fixture(scope="module")
def unit_triplets():
    return generate_triplets(make_stimuli(), default_ruleset())


class TestGeneration:
    def test_census_against_brute_force(self, unit_triplets):
        barred = {
            frozenset([("pleno", b), ("vvc", v)]) for b in LADDER[:2] for v in LADDER
        }
        expected = triplet_counts_reference(
            LADDER, ("pleno", "vvc"), ("full5x5", "sparse3x3"), barred
        )
        assert census(unit_triplets) == expected
        assert expected["total"] == 59

    def test_census_components(self, unit_triplets):
        got = census(unit_triplets)
        assert got["intra_method"] == 20
        assert got["cross_codec"] == 14
        assert got["encoding_method"] == 20
        assert got["bias_control"] == 1
        assert got["attention_check"] == 4

    def test_no_lowest_vs_highest_pair(self, unit_triplets):
        lo, hi = LADDER[0], LADDER[-1]
        for t in unit_triplets:
            if t.qtype in (QuestionType.BIAS_CONTROL, QuestionType.ATTENTION_CHECK):
                continue
            rates = {t.left.condition.target_bitrate_bpp, t.right.condition.target_bitrate_bpp}
            assert rates != {lo, hi}, t.id

    def test_no_barred_cross_codec_pair(self, unit_triplets):
        for t in unit_triplets:
            if t.qtype is not QuestionType.CROSS_CODEC:
                continue
            sides = {
                t.left.condition.codec: t.left.condition.target_bitrate_bpp,
                t.right.condition.codec: t.right.condition.target_bitrate_bpp,
            }
            if "pleno" in sides and "vvc" in sides:
                assert sides["pleno"] not in LADDER[:2], t.id

    def test_intra_method_shares_codec_and_method(self, unit_triplets):
        for t in unit_triplets:
            if t.qtype is QuestionType.INTRA_METHOD:
                assert t.left.condition.codec == t.right.condition.codec
                assert t.left.condition.method == t.right.condition.method
                assert t.left.condition.target_bitrate_bpp != t.right.condition.target_bitrate_bpp

    def test_encoding_method_distinct_rates(self, unit_triplets):
        for t in unit_triplets:
            if t.qtype is QuestionType.ENCODING_METHOD:
                assert t.left.condition.codec == t.right.condition.codec
                assert t.left.condition.method != t.right.condition.method
                assert t.left.condition.target_bitrate_bpp != t.right.condition.target_bitrate_bpp

    def test_bias_controls_are_identical_sides(self, unit_triplets):
        bias = [t for t in unit_triplets if t.qtype is QuestionType.BIAS_CONTROL]
        assert len(bias) == 1
        assert bias[0].left.is_reference and bias[0].right.is_reference

    def test_attention_checks_pit_reference_against_lowest_rate(self, unit_triplets):
        checks = [t for t in unit_triplets if t.qtype is QuestionType.ATTENTION_CHECK]
        assert len(checks) == 4
        for t in checks:
            coded = t.left if not t.left.is_reference else t.right
            other = t.right if coded is t.left else t.left
            assert other.is_reference
            assert coded.condition.target_bitrate_bpp == LADDER[0]

    def test_ids_are_unique_and_structured(self, unit_triplets):
        ids = [t.id for t in unit_triplets]
        assert len(set(ids)) == len(ids)
        assert all(i.startswith("seagull.r0c0.") for i in ids)

    def test_multi_unit_catalog_scales_linearly(self):
        catalog = make_catalog(contents=("a", "b"), views=((0, 0), (1, 1)))
        triplets = generate_triplets(catalog, default_ruleset())
        assert len(triplets) == 4 * 59
        per_unit = Counter((t.reference.content_id, t.reference.view) for t in triplets)
        assert set(per_unit.values()) == {59}

    def test_incomplete_catalog_rejected(self):
        stimuli = [s for s in make_stimuli() if not (
            s.condition is not None
            and s.condition.codec == "vvc"
            and s.condition.target_bitrate_bpp == LADDER[2]
        )]
        with pytest.raises(StudyError, match="lacks"):
            generate_triplets(stimuli, default_ruleset())

    def test_off_ladder_bitrate_rejected(self):
        stimuli = make_stimuli()
        extra = make_stimuli(ladder=(0.3,), codecs=("pleno",), methods=("full5x5",))
        stimuli.append(extra[-1])  # complete catalog plus one stray rate
        with pytest.raises(StudyError, match="not in the ruleset ladder"):
            generate_triplets(stimuli, default_ruleset())

    def test_single_method_catalog_emits_no_method_questions(self):
        stimuli = make_stimuli(methods=("full5x5",))
        got = census(generate_triplets(stimuli, default_ruleset()))
        assert got.get("encoding_method", 0) == 0
        assert got["intra_method"] == 10
        assert got["attention_check"] == 2


class TestRuleset:
    def test_defaults_round_trip_json(self):
        rs = default_ruleset()
        assert ruleset_from_json(ruleset_to_json(rs)) == rs

    def test_ladder_validation(self):
        with pytest.raises(StudyError):
            TripletRuleset(bitrate_ladder=(1.0,))
        with pytest.raises(StudyError):
            TripletRuleset(bitrate_ladder=(2.0, 1.0))
        with pytest.raises(StudyError):
            TripletRuleset(
                bitrate_ladder=(1.0, 2.0),
                cross_codec_exclusions=(CrossCodecExclusion("x", (3.0,)),),
            )

    def test_exclusion_without_other_codec_bars_everyone(self):
        excl = CrossCodecExclusion(codec="pleno", bitrates=(0.118,))
        assert excl.bars("pleno", 0.118, "vvc", 1.0)
        assert excl.bars("hevc", 0.5, "pleno", 0.118)
        assert not excl.bars("pleno", 0.236, "vvc", 1.0)

    def test_extreme_pair_toggle(self):
        rs = TripletRuleset(bitrate_ladder=LADDER, exclude_lowest_vs_highest=False)
        triplets = generate_triplets(make_stimuli(codecs=("pleno",), methods=("full5x5",)), rs)
        got = census(triplets)
        assert got["intra_method"] == 6  # all C(4,2) pairs


@pytest.fixture(scope="module")
def catalog_sessions():
    triplets = generate_triplets(make_catalog(contents=("a", "b")), default_ruleset())
    sessions = schedule_sessions(triplets, observers=8, evals_per_triplet=4, seed=11)
    return triplets, sessions


class TestScheduling:
    def test_every_triplet_gets_exact_evals(self, catalog_sessions):
        triplets, sessions = catalog_sessions
        counts = Counter(tid for s in sessions for tid, _ in s.entries)
        assert set(counts) == {t.id for t in triplets}
        assert set(counts.values()) == {4}

    def test_swap_balance_is_exact(self, catalog_sessions):
        triplets, sessions = catalog_sessions
        swapped = defaultdict(int)
        for s in sessions:
            for tid, sw in s.entries:
                swapped[tid] += int(sw)
        assert set(swapped.values()) == {2}

    def test_observers_distinct_per_triplet(self, catalog_sessions):
        _, sessions = catalog_sessions
        seen = defaultdict(set)
        for s in sessions:
            for tid, _ in s.entries:
                assert s.observer_id not in seen[tid]
                seen[tid].add(s.observer_id)

    def test_loads_within_one(self, catalog_sessions):
        _, sessions = catalog_sessions
        loads = [len(s.entries) for s in sessions]
        assert max(loads) - min(loads) <= 1

    def test_no_consecutive_same_content(self, catalog_sessions):
        triplets, sessions = catalog_sessions
        content = {t.id: t.reference.content_id for t in triplets}
        for s in sessions:
            seq = [content[tid] for tid, _ in s.entries]
            assert all(x != y for x, y in zip(seq, seq[1:])), s.observer_id

    def test_break_at_halfway(self, catalog_sessions):
        _, sessions = catalog_sessions
        for s in sessions:
            assert s.break_index == math.ceil(len(s.entries) / 2)

    def test_deterministic_in_seed(self):
        triplets = generate_triplets(make_catalog(contents=("a", "b")), default_ruleset())
        s1 = schedule_sessions(triplets, 8, 4, seed=3)
        s2 = schedule_sessions(triplets, 8, 4, seed=3)
        s3 = schedule_sessions(triplets, 8, 4, seed=4)
        assert s1 == s2
        assert s1 != s3

    def test_single_content_catalog_errors(self):
        triplets = generate_triplets(make_stimuli(), default_ruleset())
        with pytest.raises(StudyError, match="content distribution|attempts"):
            schedule_sessions(triplets, observers=4, evals_per_triplet=2, seed=0)

    def test_infeasible_counts_rejected(self):
        triplets = generate_triplets(make_catalog(), default_ruleset())
        with pytest.raises(StudyError, match="even"):
            schedule_sessions(triplets, observers=8, evals_per_triplet=3, seed=0)
        with pytest.raises(StudyError, match="at least"):
            schedule_sessions(triplets, observers=3, evals_per_triplet=4, seed=0)
        with pytest.raises(StudyError, match="no triplets"):
            schedule_sessions([], observers=8, evals_per_triplet=4, seed=0)

    @given(
        n_contents=st.integers(min_value=2, max_value=4),
        observers=st.integers(min_value=4, max_value=12),
        evals_half=st.integers(min_value=1, max_value=2),
        seed=st.integers(min_value=0, max_value=10_000),
    )
    @settings(max_examples=15)
    def test_invariants_hold_across_shapes(self, n_contents, observers, evals_half, seed):
        evals = 2 * evals_half
        if observers < evals:
            observers = evals
        contents = tuple(f"c{i}" for i in range(n_contents))
        triplets = generate_triplets(
            make_catalog(contents=contents, views=((0, 0),), codecs=("pleno",)),
            default_ruleset(),
        )
        sessions = schedule_sessions(triplets, observers, evals, seed)
        counts = Counter(tid for s in sessions for tid, _ in s.entries)
        assert set(counts.values()) == {evals}
        swaps = Counter(tid for s in sessions for tid, sw in s.entries if sw)
        assert set(swaps.values()) == {evals // 2}
        loads = [len(s.entries) for s in sessions]
        assert max(loads) - min(loads) <= 1
        content_of = {t.id: t.reference.content_id for t in triplets}
        for s in sessions:
            seq = [content_of[tid] for tid, _ in s.entries]
            assert all(x != y for x, y in zip(seq, seq[1:]))


@pytest.fixture(scope="module")
def checks():
    triplets = generate_triplets(make_stimuli(), default_ruleset())
    return triplets, [t for t in triplets if t.qtype is QuestionType.ATTENTION_CHECK]


class TestAttentionScreening:
    @staticmethod
    def _respond(t, observer, correct, swapped=False):
        coded_is_left = not t.left.is_reference
        pick_left = coded_is_left if correct else not coded_is_left
        if swapped:
            pick_left = not pick_left
        return Response(
            observer_id=observer,
            triplet_id=t.id,
            choice=Choice.LEFT if pick_left else Choice.RIGHT,
            latency_ms=900.0,
            presented_swapped=swapped,
        )

    def test_exactly_at_threshold_passes(self, checks):
        triplets, att = checks
        responses = [self._respond(att[i], "obs0", correct=(i < 3)) for i in range(4)]
        report = validate_responses([], responses, triplets, threshold=0.75)
        assert report.per_observer["obs0"] == 0.75
        assert report.passed("obs0")
        assert report.flagged == ()

    def test_below_threshold_flagged(self, checks):
        triplets, att = checks
        responses = [self._respond(att[i], "obs1", correct=(i < 2)) for i in range(4)]
        report = validate_responses([], responses, triplets, threshold=0.75)
        assert report.per_observer["obs1"] == 0.5
        assert not report.passed("obs1")

    def test_not_sure_counts_as_miss(self, checks):
        triplets, att = checks
        responses = [
            Response("obs2", att[0].id, Choice.NOT_SURE, 500.0, False),
            self._respond(att[1], "obs2", correct=True),
        ]
        report = validate_responses([], responses, triplets)
        assert report.per_observer["obs2"] == 0.5

    def test_swap_flag_respected(self, checks):
        triplets, att = checks
        responses = [self._respond(t, "obs3", correct=True, swapped=True) for t in att]
        report = validate_responses([], responses, triplets)
        assert report.per_observer["obs3"] == 1.0

    def test_observer_without_checks_passes_vacuously(self, checks):
        triplets, _ = checks
        intra = next(t for t in triplets if t.qtype is QuestionType.INTRA_METHOD)
        responses = [Response("obs4", intra.id, Choice.LEFT, 700.0, False)]
        report = validate_responses([], responses, triplets)
        assert report.passed("obs4")
        assert "obs4" not in report.per_observer

    def test_unknown_triplet_rejected(self, checks):
        triplets, _ = checks
        with pytest.raises(StudyError, match="unknown triplet"):
            validate_responses([], [Response("o", "nope", Choice.LEFT, 1.0, False)], triplets)


class TestResolveChoice:
    def test_swap_resolution(self, unit_triplets):
        t = next(x for x in unit_triplets if x.qtype is QuestionType.INTRA_METHOD)
        plain = Response("o", t.id, Choice.LEFT, 1.0, presented_swapped=False)
        swapped = Response("o", t.id, Choice.LEFT, 1.0, presented_swapped=True)
        assert resolve_choice(t, plain) is t.left
        assert resolve_choice(t, swapped) is t.right
        assert resolve_choice(t, Response("o", t.id, Choice.NOT_SURE, 1.0, False)) is None


class TestManifest:
    def test_round_trip_with_meta(self, tmp_path):
        triplets = generate_triplets(make_catalog(contents=("a", "b")), default_ruleset())
        sessions = schedule_sessions(triplets, 8, 4, seed=2)
        path = tmp_path / "manifest.json"
        write_study_manifest(
            path, triplets, sessions, extra={"flicker_ms": 500, "training": ["training.00"]}
        )
        t2, s2, meta = read_study_manifest(path)
        assert t2 == triplets
        assert s2 == sessions
        assert meta["flicker_ms"] == 500
        assert meta["training"] == ["training.00"]

    def test_schema_guard(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text('{"schema": "nope", "triplets": [], "sessions": []}')
        with pytest.raises(StudyError, match="schema"):
            read_study_manifest(p)


def test_triplet_sides_must_share_unit():
    from lfstudy import Stimulus, Triplet, ViewType

    a = make_stimuli(content="a")[0]
    b = make_stimuli(content="b")[0]
    with pytest.raises(StudyError, match="share content and view"):
        Triplet(id="x", reference=a, left=a, right=b, qtype=QuestionType.BIAS_CONTROL)
