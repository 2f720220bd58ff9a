import dataclasses
import math

import numpy as np
from scipy.stats import norm

from lfstudy import (
    ComparisonMatrix,
    Condition,
    EncodingMethod,
    SessionPlan,
    Stimulus,
    Triplet,
    bootstrap_ci,
    build_matrix,
    finalize_scale,
    screen_outliers,
    thurstone_case_v,
)
from lfstudy.lightfield import classify_view
from lfstudy.simulate import simulate_responses
from lfstudy.study import QuestionType

# Thurstone Case V turns paired flicker judgements into an interval quality
# scale. The model: each condition has a latent quality q, and an observer
# asked "which side flickers more?" picks the lower-quality side with
# probability Phi((q_other - q_side) / sqrt(2)).

# Four conditions of one content/view unit, with known ground truth spaced
# unevenly so recovery is non-trivial.
TRUTH = {"condA": 0.0, "condB": 0.6, "condC": 1.4, "condD": 3.0}


def stim(label):
    # condition labels come out as "<codec>_full5x5_1", so name the codec
    # after the label we want and reuse it as the truth key
    cond = Condition(label, EncodingMethod.FULL5X5, 1.0, 1.0, 0.0)
    return Stimulus("scene", (0, 0), classify_view(0, 0), cond, f"{label}.png"), cond.label()


labels = []
stimuli = {}
for name in TRUTH:
    s, lab = stim(name)
    stimuli[lab] = s
    labels.append(lab)
truth = {lab: TRUTH[lab.split("_")[0]] for lab in labels}

# Every unordered pair, two copies each, gives 12 questions.
triplets = []
ref = Stimulus("scene", (0, 0), classify_view(0, 0), None, "ref.png")
k = 0
for copy in range(2):
    for i, la in enumerate(labels):
        for lb in labels[i + 1 :]:
            triplets.append(
                Triplet(f"scene.q{k:02d}", ref, stimuli[la], stimuli[lb], QuestionType.INTRA_METHOD)
            )
            k += 1

# 20 synthetic observers, each answering every question, alternating the
# side swap so left/right position bias cancels.
sessions = [
    SessionPlan(f"obs{o:02d}", tuple((t.id, (o + j) % 2 == 0) for j, t in enumerate(triplets)), None)
    for o in range(20)
]
responses = simulate_responses(triplets, sessions, truth, seed=1)
print("responses:", len(responses))

# Tally pairwise wins. A "win" goes to the side the observer did NOT pick
# as flickering more, i.e. the side judged better.
matrix = build_matrix(responses, triplets, group=("scene", "S"))
print("conditions:", list(matrix.conditions))
print("win matrix:")
print(matrix.wins)

# Fit. Scores are anchored at the first condition ( = 0 by convention).
q = thurstone_case_v(matrix)
expected = np.array([truth[c] for c in matrix.conditions])
expected -= expected[0]  # same anchor as the fit
print()
print("label            truth   recovered")
for lab, t, r in zip(matrix.conditions, expected, q):
    print(f"{lab:<16} {t:5.2f}   {r:9.3f}")
print("pearson r:", round(float(np.corrcoef(expected, q)[0, 1]), 4))

# Two conditions have a closed form: with w wins against l losses the gap
# is sqrt(2) * Phi^-1(w / (w + l)). 15 wins out of 16:
two = ComparisonMatrix(("a", "b"), np.array([[0.0, 15.0], [1.0, 0.0]]))
gap = thurstone_case_v(two, prior=0.0)
closed = math.sqrt(2.0) * float(norm.ppf(15 / 16))
print()
print("two-condition fit:", round(float(gap[0] - gap[1]), 6), " closed form:", round(closed, 6))

# Outlier screening: an observer answering against the consensus has a high
# held-out negative log-likelihood. Flip the truth for one extra observer.
inverted = {lab: -t for lab, t in truth.items()}
bad_session = [SessionPlan("obs_bad", tuple((t.id, False) for t in triplets), None)]
bad = [
    dataclasses.replace(r, observer_id="obs_bad")
    for r in simulate_responses(triplets, bad_session, inverted, seed=9)
]
flagged = screen_outliers(responses + bad, triplets)
print()
print("flagged observers:", flagged)

# Observer bootstrap gives per-condition confidence intervals, and the
# final scale is min-max normalized to [0, 1], higher = better.
cis = bootstrap_ci(responses, triplets, group=("scene", "S"), b=200, seed=4)
scale = finalize_scale(matrix.conditions, q, cis, orientation="quality")
print()
print("label            score   95% CI")
for lab, s, lo, hi in zip(scale.conditions, scale.score, scale.ci_low, scale.ci_high):
    print(f"{lab:<16} {s:5.3f}   [{lo:5.3f}, {hi:5.3f}]")
print("normalization:", scale.normalization)
