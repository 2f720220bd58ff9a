import collections
import tempfile

from lfstudy import (
    Condition,
    EncodingMethod,
    QuestionType,
    Stimulus,
    census,
    default_ruleset,
    generate_triplets,
    read_study_manifest,
    schedule_sessions,
    write_study_manifest,
)
from lfstudy.lightfield import classify_view

# A triplet is one question: a reference in the middle, two coded renderings
# left and right, "which side flickers more against the reference?". This
# script builds the full question catalog for a small study and schedules it.

LADDER = (0.118, 0.236, 0.472, 1.003)
CODECS = ("pleno", "vvc")
METHODS = ("full5x5", "sparse3x3")


def catalog_for(content, view):
    # reference plus one stimulus per (codec, method, bitrate); images are
    # just asset handles here, the real pipeline writes PNGs behind them
    vtype = classify_view(*view)
    out = [Stimulus(content, view, vtype, None, f"{content}/ref.png")]
    for codec in CODECS:
        for method in METHODS:
            for bpp in LADDER:
                cond = Condition(codec, EncodingMethod(method), bpp, bpp * 0.98, 0.0)
                out.append(Stimulus(content, view, vtype, cond, f"{content}/{cond.label()}.png"))
    return out


stimuli = []
for content in ("seagull", "tram"):
    for view in ((0, 0), (0, 1), (1, 1)):  # one S, one X, one O view each
        stimuli.extend(catalog_for(content, view))
print("catalog stimuli:", len(stimuli))

# The default ruleset drops uninformative and unfair questions: the lowest
# rate never meets the highest (too obvious), and the two lowest pleno
# rates never meet vvc (cross-codec gap too large to scale).
rules = default_ruleset(ladder=LADDER, pleno_codec="pleno", vvc_codec="vvc")
triplets = generate_triplets(stimuli, rules)
print("questions per unit:", len(triplets) // 6)
print("census:", census(triplets))

# Check the exclusions actually hold over the generated set.
lo, hi = LADDER[0], LADDER[-1]
extreme = barred = 0
for t in triplets:
    if t.qtype in (QuestionType.BIAS_CONTROL, QuestionType.ATTENTION_CHECK):
        continue
    a, b = t.left.condition, t.right.condition
    if {a.target_bitrate_bpp, b.target_bitrate_bpp} == {lo, hi}:
        extreme += 1
    for x, y in ((a, b), (b, a)):
        if x.codec == "pleno" and x.target_bitrate_bpp in (0.118, 0.236) and y.codec == "vvc":
            barred += 1
            break
print("lowest-vs-highest pairs:", extreme, " barred cross-codec pairs:", barred)

# Scheduling: every triplet is answered by a fixed number of observers,
# half of them with the sides swapped, no observer sees the same content
# twice in a row, and session lengths differ by at most one question.
sessions = schedule_sessions(triplets, observers=32, evals_per_triplet=16, seed=0)
print()
print("observers:", len(sessions))

per_triplet = collections.Counter()
swapped = collections.Counter()
for plan in sessions:
    for tid, swap in plan.entries:
        per_triplet[tid] += 1
        swapped[tid] += int(swap)
print("evaluations per triplet:", sorted(set(per_triplet.values())))
print("swapped per triplet:", sorted(set(swapped.values())))

loads = sorted(len(p.entries) for p in sessions)
print("session load min/max:", loads[0], "/", loads[-1])

repeats = 0
for plan in sessions:
    contents = [tid.split(".", 1)[0] for tid, _ in plan.entries]
    repeats += sum(a == b for a, b in zip(contents, contents[1:]))
print("consecutive same-content pairs:", repeats)
print("break after question:", sessions[0].break_index)

# The whole design serializes to one manifest, the contract between the
# preparation pipeline, the study service and the analysis stage.
with tempfile.TemporaryDirectory() as d:
    path = f"{d}/manifest.json"
    write_study_manifest(path, triplets, sessions, extra={"flicker_ms": 500, "break_s": 60})
    t2, s2, meta = read_study_manifest(path)
    print()
    print("manifest round trip:", len(t2) == len(triplets), len(s2) == len(sessions))
    print("meta:", meta)
