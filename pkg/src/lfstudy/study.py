"""Triplet question generation and balanced observer session scheduling.

A triplet shows one reference view plus two coded versions of it; each side
flickers between reference and coded at 2 Hz and the observer picks the side
with the stronger flicker. Question types compare bitrates within one coding
setup, codecs against each other, full against sparse encoding, plus hidden
bias controls (both sides identical) and attention checks (reference against
the strongest distortion).

Generation is rule-driven from a JSON ruleset so the emitted census is
reproducible for any declared rule values.
"""

from __future__ import annotations

import json
import math
import random
from collections import Counter, defaultdict
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .lightfield import ViewType
from .pipeline import Condition, condition_from_json, condition_to_json


class StudyError(Exception):
    pass


class QuestionType(str, Enum):
    INTRA_METHOD = "intra_method"
    CROSS_CODEC = "cross_codec"
    ENCODING_METHOD = "encoding_method"
    BIAS_CONTROL = "bias_control"
    ATTENTION_CHECK = "attention_check"


class Choice(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    NOT_SURE = "not_sure"


@dataclass(frozen=True)
class Stimulus:
    """One displayable item: a (content, view) under a condition or pristine."""

    content_id: str
    view: tuple[int, int]
    view_type: ViewType
    condition: Condition | None  # None marks the REFERENCE rendering
    image: str

    @property
    def is_reference(self) -> bool:
        return self.condition is None

    def label(self) -> str:
        return "REFERENCE" if self.condition is None else self.condition.label()


@dataclass(frozen=True)
class Triplet:
    id: str
    reference: Stimulus
    left: Stimulus
    right: Stimulus
    qtype: QuestionType

    def __post_init__(self):
        key = (self.reference.content_id, self.reference.view)
        for side in (self.left, self.right):
            if (side.content_id, side.view) != key:
                raise StudyError(f"triplet {self.id}: sides must share content and view")


@dataclass(frozen=True)
class Response:
    observer_id: str
    triplet_id: str
    choice: Choice
    latency_ms: float
    presented_swapped: bool


@dataclass(frozen=True)
class SessionPlan:
    observer_id: str
    entries: tuple[tuple[str, bool], ...]  # (triplet_id, swapped)
    break_index: int


# ---------------------------------------------------------------------------
# ruleset


@dataclass(frozen=True)
class CrossCodecExclusion:
    codec: str
    bitrates: tuple[float, ...]
    other_codec: str | None = None  # None bars the listed rates against every other codec

    def bars(self, a_codec: str, a_bpp: float, b_codec: str, b_bpp: float) -> bool:
        for codec, bpp, other in ((a_codec, a_bpp, b_codec), (b_codec, b_bpp, a_codec)):
            if codec == self.codec and bpp in self.bitrates:
                if self.other_codec is None or other == self.other_codec:
                    return True
        return False


@dataclass(frozen=True)
class TripletRuleset:
    bitrate_ladder: tuple[float, ...]
    exclude_lowest_vs_highest: bool = True
    cross_codec_exclusions: tuple[CrossCodecExclusion, ...] = ()
    bias_controls_per_view: int = 1
    attention_checks_per_group: int = 1

    def __post_init__(self):
        if len(self.bitrate_ladder) < 2:
            raise StudyError("bitrate ladder needs at least two rates")
        if list(self.bitrate_ladder) != sorted(self.bitrate_ladder):
            raise StudyError("bitrate ladder must be ascending")
        for excl in self.cross_codec_exclusions:
            unknown = [b for b in excl.bitrates if b not in self.bitrate_ladder]
            if unknown:
                raise StudyError(f"exclusion for {excl.codec!r} references unknown bitrates {unknown}")

    def is_extreme_pair(self, a: float, b: float) -> bool:
        lo, hi = self.bitrate_ladder[0], self.bitrate_ladder[-1]
        return self.exclude_lowest_vs_highest and {a, b} == {lo, hi}

    def cross_codec_barred(self, a_codec: str, a_bpp: float, b_codec: str, b_bpp: float) -> bool:
        return any(e.bars(a_codec, a_bpp, b_codec, b_bpp) for e in self.cross_codec_exclusions)


def ruleset_from_json(obj: dict) -> TripletRuleset:
    exclusions = tuple(
        CrossCodecExclusion(
            codec=e["codec"],
            bitrates=tuple(e["bitrates"]),
            other_codec=e.get("other_codec"),
        )
        for e in obj.get("cross_codec_exclusions", ())
    )
    return TripletRuleset(
        bitrate_ladder=tuple(obj["bitrate_ladder"]),
        exclude_lowest_vs_highest=obj.get("exclude_lowest_vs_highest", True),
        cross_codec_exclusions=exclusions,
        bias_controls_per_view=obj.get("bias_controls_per_view", 1),
        attention_checks_per_group=obj.get("attention_checks_per_group", 1),
    )


def ruleset_to_json(rs: TripletRuleset) -> dict:
    return {
        "bitrate_ladder": list(rs.bitrate_ladder),
        "exclude_lowest_vs_highest": rs.exclude_lowest_vs_highest,
        "cross_codec_exclusions": [
            {"codec": e.codec, "bitrates": list(e.bitrates), "other_codec": e.other_codec}
            for e in rs.cross_codec_exclusions
        ],
        "bias_controls_per_view": rs.bias_controls_per_view,
        "attention_checks_per_group": rs.attention_checks_per_group,
    }


def default_ruleset(
    ladder: tuple[float, ...] = (0.118, 0.236, 0.472, 1.003),
    pleno_codec: str = "pleno",
    vvc_codec: str = "vvc",
) -> TripletRuleset:
    """Shipped reading of the question rules: the two lowest rates of the
    pleno-style codec never meet the vvc-style codec."""
    return TripletRuleset(
        bitrate_ladder=tuple(ladder),
        cross_codec_exclusions=(
            CrossCodecExclusion(codec=pleno_codec, bitrates=tuple(ladder[:2]), other_codec=vvc_codec),
        ),
    )


# ---------------------------------------------------------------------------
# generation


def _catalog_index(stimuli):
    by_unit: dict[tuple[str, tuple[int, int]], dict] = {}
    for s in stimuli:
        unit = by_unit.setdefault((s.content_id, s.view), {"reference": None, "coded": {}})
        if s.is_reference:
            unit["reference"] = s
        else:
            key = (s.condition.codec, s.condition.method, s.condition.target_bitrate_bpp)
            unit["coded"][key] = s
    return by_unit


def generate_triplets(stimuli, ruleset: TripletRuleset) -> list[Triplet]:
    """Emit the full question set for every (content, view) unit in the catalog."""
    by_unit = _catalog_index(stimuli)
    ladder = ruleset.bitrate_ladder
    triplets: list[Triplet] = []

    for unit_key in sorted(by_unit, key=lambda k: (k[0], k[1])):
        unit = by_unit[unit_key]
        content_id, view = unit_key
        ref = unit["reference"]
        if ref is None:
            raise StudyError(f"catalog has no reference for {content_id} view {view}")
        coded = unit["coded"]

        groups = sorted({(codec, method) for codec, method, _ in coded})
        for codec, method in groups:
            missing = [b for b in ladder if (codec, method, b) not in coded]
            if missing:
                raise StudyError(
                    f"catalog incomplete: {content_id} view {view} lacks "
                    f"{codec}/{method.value} at bitrates {missing}"
                )
        extra = {b for _, _, b in coded} - set(ladder)
        if extra:
            raise StudyError(f"catalog bitrates {sorted(extra)} not in the ruleset ladder")

        counter = 0

        def emit(left: Stimulus, right: Stimulus, qtype: QuestionType) -> None:
            nonlocal counter
            tid = f"{content_id}.r{view[0]}c{view[1]}.{qtype.value}.{counter:03d}"
            counter += 1
            triplets.append(Triplet(id=tid, reference=ref, left=left, right=right, qtype=qtype))

        # same codec and method, different bitrates
        for codec, method in groups:
            for i, b1 in enumerate(ladder):
                for b2 in ladder[i + 1 :]:
                    if ruleset.is_extreme_pair(b1, b2):
                        continue
                    emit(coded[(codec, method, b1)], coded[(codec, method, b2)], QuestionType.INTRA_METHOD)

        # same method, different codecs, any bitrate combination not barred
        methods = sorted({method for _, method in groups})
        for method in methods:
            codecs = sorted({codec for codec, m in groups if m == method})
            for i, ca in enumerate(codecs):
                for cb in codecs[i + 1 :]:
                    for ba in ladder:
                        for bb in ladder:
                            if ruleset.is_extreme_pair(ba, bb):
                                continue
                            if ruleset.cross_codec_barred(ca, ba, cb, bb):
                                continue
                            emit(coded[(ca, method, ba)], coded[(cb, method, bb)], QuestionType.CROSS_CODEC)

        # same codec, full against sparse, distinct bitrates
        codecs = sorted({codec for codec, _ in groups})
        for codec in codecs:
            pair = sorted({m for c, m in groups if c == codec}, key=lambda m: m.value)
            if len(pair) != 2:
                continue
            ma, mb = pair
            for ba in ladder:
                for bb in ladder:
                    if ba == bb or ruleset.is_extreme_pair(ba, bb):
                        continue
                    emit(coded[(codec, ma, ba)], coded[(codec, mb, bb)], QuestionType.ENCODING_METHOD)

        for _ in range(ruleset.bias_controls_per_view):
            emit(ref, ref, QuestionType.BIAS_CONTROL)

        # reference against the strongest distortion (lowest rate) of each group
        for codec, method in groups:
            for _ in range(ruleset.attention_checks_per_group):
                emit(coded[(codec, method, ladder[0])], ref, QuestionType.ATTENTION_CHECK)

    return triplets


def census(triplets) -> dict[str, int]:
    counts = Counter(t.qtype.value for t in triplets)
    counts["total"] = len(triplets)
    return dict(counts)


# ---------------------------------------------------------------------------
# scheduling


def _order_without_repeats(items, rng: random.Random) -> list:
    """Arrange items so no two consecutive ones share content_id.

    Most-frequent-first fill over even then odd slots; feasible exactly when
    no content holds more than ceil(n/2) items.
    """
    n = len(items)
    by_content: dict[str, list] = defaultdict(list)
    for it in items:
        by_content[it[2]].append(it)
    counts = {c: len(v) for c, v in by_content.items()}
    limit = math.ceil(n / 2)
    worst = max(counts.values(), default=0)
    if worst > limit:
        raise StudyError(
            f"cannot order {n} items without consecutive same-content repeats; "
            f"content distribution {dict(sorted(counts.items()))} exceeds limit {limit}"
        )

    contents = sorted(by_content)
    rng.shuffle(contents)
    contents.sort(key=lambda c: -counts[c])  # stable: equal counts keep shuffled order
    for c in contents:
        rng.shuffle(by_content[c])

    slots: list = [None] * n
    positions = list(range(0, n, 2)) + list(range(1, n, 2))
    cursor = 0
    for c in contents:
        for it in by_content[c]:
            slots[positions[cursor]] = it
            cursor += 1
    return slots


def schedule_sessions(
    triplets, observers: int, evals_per_triplet: int, seed: int, max_attempts: int = 20
) -> list[SessionPlan]:
    """Assign every triplet to evals_per_triplet distinct observers with exact
    swap balance, then order each session with no consecutive same-content items.

    Assignment is least-loaded greedy with a per-content tiebreak so no
    observer's session collects too much of one content; if ordering still
    fails, the whole assignment is redrawn a bounded number of times.
    """
    if evals_per_triplet <= 0 or evals_per_triplet % 2:
        raise StudyError(f"evals_per_triplet must be positive and even, got {evals_per_triplet}")
    if observers < evals_per_triplet:
        raise StudyError(
            f"{evals_per_triplet} distinct observers per triplet need at least "
            f"{evals_per_triplet} observers, got {observers}"
        )
    if not triplets:
        raise StudyError("no triplets to schedule")

    rng = random.Random(seed)
    last_error: StudyError | None = None
    for _ in range(max_attempts):
        loads = [0] * observers
        content_counts: list[dict[str, int]] = [defaultdict(int) for _ in range(observers)]
        per_observer: list[list] = [[] for _ in range(observers)]

        order = list(triplets)
        rng.shuffle(order)
        for t in order:
            content = t.reference.content_id
            jitter = [rng.random() for _ in range(observers)]
            ranked = sorted(
                range(observers),
                key=lambda i: (loads[i], content_counts[i][content], jitter[i]),
            )
            chosen = ranked[:evals_per_triplet]
            flags = [True] * (evals_per_triplet // 2) + [False] * (evals_per_triplet // 2)
            rng.shuffle(flags)
            for obs, swapped in zip(chosen, flags):
                loads[obs] += 1
                content_counts[obs][content] += 1
                per_observer[obs].append((t.id, swapped, content))

        try:
            plans = []
            for idx in range(observers):
                ordered = _order_without_repeats(per_observer[idx], rng)
                entries = tuple((tid, swapped) for tid, swapped, _ in ordered)
                plans.append(
                    SessionPlan(
                        observer_id=f"obs{idx:03d}",
                        entries=entries,
                        break_index=math.ceil(len(entries) / 2),
                    )
                )
            return plans
        except StudyError as exc:
            last_error = exc
    raise StudyError(f"session ordering failed after {max_attempts} attempts: {last_error}")


# ---------------------------------------------------------------------------
# attention screening


@dataclass(frozen=True)
class AttentionReport:
    threshold: float
    per_observer: dict  # observer_id -> fraction of checks answered correctly
    flagged: tuple[str, ...]

    def passed(self, observer_id: str) -> bool:
        return observer_id not in self.flagged


def resolve_choice(triplet: Triplet, response: Response) -> Stimulus | None:
    """Stimulus the observer called the stronger flicker; None for not_sure."""
    if response.choice is Choice.NOT_SURE:
        return None
    picked_left = response.choice is Choice.LEFT
    if response.presented_swapped:
        picked_left = not picked_left
    return triplet.left if picked_left else triplet.right


def validate_responses(sessions, responses, triplets, threshold: float = 0.75) -> AttentionReport:
    """Score attention checks: picking the reference side (or not_sure) is a miss.

    Observers strictly below the threshold are flagged; exactly at threshold
    passes. Observers who saw no checks pass vacuously.
    """
    by_id = {t.id: t for t in triplets}
    for r in responses:
        if r.triplet_id not in by_id:
            raise StudyError(f"response references unknown triplet {r.triplet_id!r}")

    seen: dict[str, list[bool]] = defaultdict(list)
    for r in responses:
        t = by_id[r.triplet_id]
        if t.qtype is not QuestionType.ATTENTION_CHECK:
            continue
        chosen = resolve_choice(t, r)
        seen[r.observer_id].append(chosen is not None and not chosen.is_reference)

    per_observer = {obs: sum(hits) / len(hits) for obs, hits in seen.items()}
    flagged = tuple(sorted(obs for obs, frac in per_observer.items() if frac < threshold))
    return AttentionReport(threshold=threshold, per_observer=per_observer, flagged=flagged)


# ---------------------------------------------------------------------------
# manifest serialization


def _stimulus_to_json(s: Stimulus) -> dict:
    return {
        "content_id": s.content_id,
        "view": list(s.view),
        "view_type": s.view_type.value,
        "condition": None if s.condition is None else condition_to_json(s.condition),
        "image": s.image,
    }


def _stimulus_from_json(obj: dict) -> Stimulus:
    return Stimulus(
        content_id=obj["content_id"],
        view=tuple(obj["view"]),
        view_type=ViewType(obj["view_type"]),
        condition=None if obj["condition"] is None else condition_from_json(obj["condition"]),
        image=obj["image"],
    )


def write_study_manifest(path, triplets, sessions, extra: dict | None = None) -> None:
    payload = {
        "schema": "lfstudy-manifest-v1",
        "triplets": [
            {
                "id": t.id,
                "qtype": t.qtype.value,
                "reference": _stimulus_to_json(t.reference),
                "left": _stimulus_to_json(t.left),
                "right": _stimulus_to_json(t.right),
            }
            for t in triplets
        ],
        "sessions": [
            {
                "observer_id": s.observer_id,
                "entries": [[tid, swapped] for tid, swapped in s.entries],
                "break_index": s.break_index,
            }
            for s in sessions
        ],
    }
    payload.update(extra or {})
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_study_manifest(path) -> tuple[list[Triplet], list[SessionPlan], dict]:
    payload = json.loads(Path(path).read_text())
    if payload.get("schema") != "lfstudy-manifest-v1":
        raise StudyError(f"unrecognized study manifest schema in {path}")
    return parse_study_manifest(payload)


def parse_study_manifest(payload: dict) -> tuple[list[Triplet], list[SessionPlan], dict]:
    triplets = [
        Triplet(
            id=t["id"],
            qtype=QuestionType(t["qtype"]),
            reference=_stimulus_from_json(t["reference"]),
            left=_stimulus_from_json(t["left"]),
            right=_stimulus_from_json(t["right"]),
        )
        for t in payload["triplets"]
    ]
    sessions = [
        SessionPlan(
            observer_id=s["observer_id"],
            entries=tuple((tid, swapped) for tid, swapped in s["entries"]),
            break_index=s["break_index"],
        )
        for s in payload["sessions"]
    ]
    meta = {k: v for k, v in payload.items() if k not in ("schema", "triplets", "sessions")}
    return triplets, sessions, meta
