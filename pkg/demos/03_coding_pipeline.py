import numpy as np

from lfstudy import (
    BITRATE_LADDER,
    BlendSynthesizer,
    EncodingMethod,
    LightField,
    MetricId,
    StandInCodec,
    build_synthesis_plan,
    run_condition,
    score_light_field,
    select_test_views,
)
from lfstudy.lightfield import View, classify_view
from lfstudy.simulate import make_light_field

# A condition is one (codec, encoding method, target bitrate) cell of the
# study design. Two methods exist:
#   full5x5   - code all 25 views
#   sparse3x3 - code the 9 anchor views, synthesize the other 16
# The stand-in codec is a DCT quantizer with a rate search, good enough to
# exercise the whole pipeline without an external binary.

lf = make_light_field("pipeline_demo", rows=5, cols=5, height=64, width=64, seed=1)
codec = StandInCodec("standin")

print("default bitrate ladder (bpp):", list(BITRATE_LADDER))
print()

# Rate control: the codec searches its quality knob so the achieved bitrate
# lands at or under the target. Lower targets mean coarser quantization.
print("method      target   achieved   mean psnr")
for method in (EncodingMethod.FULL5X5, EncodingMethod.SPARSE3X3):
    for target in (0.5, 2.0):
        coded, cond = run_condition(lf, codec, method, target)
        score = score_light_field(lf, coded, MetricId.PSNR)
        print(
            f"{cond.method.value:<10}  {cond.target_bitrate_bpp:>5.2f}   "
            f"{cond.achieved_bitrate_bpp:>7.3f}   {score.mean:8.2f}"
        )

# Condition labels are stable identifiers used all the way into scaling.
_, cond = run_condition(lf, codec, "full5x5", 1.0)
print()
print("label:", cond.label())

# The synthesis plan for sparse coding: stage 1 fills the X views from
# horizontal or vertical S neighbours, stage 2 fills the O corners from
# stage 1 results.
plan = build_synthesis_plan(5, 5)
stage1 = [s for s in plan.steps if s.stage == 1]
stage2 = [s for s in plan.steps if s.stage == 2]
print()
print("synthesis steps:", len(stage1), "stage-1 +", len(stage2), "stage-2")
print("example stage-1 step:", stage1[0].target, "from", stage1[0].sources)
print("example stage-2 step:", stage2[0].target, "from", stage2[0].sources)
for s in plan.steps:
    assert classify_view(*s.target).name in ("X", "O")

# On a constant-colour field the blend synthesizer is exact, so sparse
# coding reconstructs the full field bit for bit.
flat = LightField(
    "flat",
    [[View(data=np.full((64, 64, 3), 64 / 255.0), bit_depth=8) for _ in range(5)] for _ in range(5)],
)
full, _ = run_condition(flat, StandInCodec("standin", quality=35), "full5x5", 4.0)
sparse, _ = run_condition(flat, StandInCodec("standin", quality=35), "sparse3x3", 4.0, synth=BlendSynthesizer())
exact = all(np.array_equal(full.view(r, c).data, sparse.view(r, c).data) for r, c in flat.coordinates())
print()
print("constant field, sparse == full:", exact)

# Studies show one view per type to observers. select_test_views picks the
# worst-scoring coordinate of each type from a per-view score map.
coded, _ = run_condition(lf, codec, "sparse3x3", 0.5)
scores = {coord: res.value for coord, res in score_light_field(lf, coded, MetricId.PSNR).per_view.items()}
picks = select_test_views(scores)
print()
for vtype, coord in sorted(picks.items(), key=lambda kv: kv[0].name):
    print(f"worst {vtype.name} view: {coord}  ({scores[coord]:.2f} dB)")
