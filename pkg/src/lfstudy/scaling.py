"""Psychometric scaling of triplet responses.

Pairwise tallies go into a comparison matrix per (content, view type) group;
Thurstone Case V maximum likelihood turns tallies into interval-scale scores
under P(i beats j) = Phi((q_i - q_j) / sqrt(2)); observers are screened by a
leave-one-out likelihood statistic; confidence intervals come from an
observer bootstrap; min-max normalization maps the scale to [0, 1] with
higher = better quality.

Tallying convention: the observer picks the side with the STRONGER flicker,
which is the lower-quality side, so the win is credited to the side NOT
chosen. The resulting scores are therefore quality-oriented.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import log_ndtr

from .lightfield import ViewType
from .study import Choice, QuestionType, Response, Triplet, resolve_choice

_SQRT2 = math.sqrt(2.0)
REFERENCE_LABEL = "REFERENCE"


class ScalingError(Exception):
    pass


@dataclass(frozen=True)
class ComparisonMatrix:
    """wins[i, j] counts condition i judged better than j (halves from not_sure)."""

    conditions: tuple[str, ...]
    wins: np.ndarray
    group: tuple[str, str] | None = None

    def __post_init__(self):
        n = len(self.conditions)
        if self.wins.shape != (n, n):
            raise ScalingError(f"matrix shape {self.wins.shape} does not match {n} conditions")
        if np.any(np.diag(self.wins) != 0):
            raise ScalingError("diagonal tallies must be zero")
        if np.any(self.wins < 0):
            raise ScalingError("negative tallies")

    def presented(self) -> np.ndarray:
        return self.wins + self.wins.T

    def index(self, label: str) -> int:
        return self.conditions.index(label)


def group_of(triplet: Triplet) -> tuple[str, str]:
    return (triplet.reference.content_id, triplet.reference.view_type.value)


def groups_present(triplets) -> list[tuple[str, str]]:
    return sorted({group_of(t) for t in triplets})


def build_matrix(
    responses,
    triplets,
    group: tuple[str, str] | None = None,
    conditions: tuple[str, ...] | None = None,
) -> ComparisonMatrix:
    """Tally responses into a win matrix; bias controls never enter the tally.

    The win goes to the condition NOT chosen as stronger flicker; not_sure
    splits evenly. The swap flag is resolved before tallying.
    """
    if group is not None:
        group = (group[0], group[1].value if isinstance(group[1], ViewType) else group[1])
        selected = [t for t in triplets if group_of(t) == group]
    else:
        selected = list(triplets)
    by_id = {t.id: t for t in selected}

    if conditions is None:
        labels = set()
        for t in selected:
            if t.qtype is QuestionType.BIAS_CONTROL:
                continue
            labels.add(t.left.label())
            labels.add(t.right.label())
        ordered = sorted(labels - {REFERENCE_LABEL})
        if REFERENCE_LABEL in labels:
            ordered = [REFERENCE_LABEL] + ordered
        conditions = tuple(ordered)
    index = {label: i for i, label in enumerate(conditions)}

    wins = np.zeros((len(conditions), len(conditions)))
    for r in responses:
        t = by_id.get(r.triplet_id)
        if t is None:
            raise ScalingError(f"response for triplet {r.triplet_id!r} outside group {group}")
        if t.qtype is QuestionType.BIAS_CONTROL:
            continue
        la, lb = t.left.label(), t.right.label()
        if la not in index or lb not in index:
            missing = la if la not in index else lb
            raise ScalingError(f"unknown condition label {missing!r}")
        if la == lb:
            continue
        i, j = index[la], index[lb]
        if r.choice is Choice.NOT_SURE:
            wins[i, j] += 0.5
            wins[j, i] += 0.5
        else:
            loser = resolve_choice(t, r)  # stronger flicker = lower quality
            if loser is t.left:
                wins[j, i] += 1.0
            else:
                wins[i, j] += 1.0
    return ComparisonMatrix(conditions=conditions, wins=wins, group=group)


# ---------------------------------------------------------------------------
# Thurstone Case V maximum likelihood


def _connected_components(adjacency: np.ndarray) -> list[list[int]]:
    n = adjacency.shape[0]
    seen = [False] * n
    components = []
    for start in range(n):
        if seen[start]:
            continue
        stack, comp = [start], []
        seen[start] = True
        while stack:
            u = stack.pop()
            comp.append(u)
            for v in np.nonzero(adjacency[u] > 0)[0]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(int(v))
        components.append(sorted(comp))
    return components


def _inverse_mills(d: np.ndarray) -> np.ndarray:
    # phi(d) / Phi(d), computed in log space for stability at d << 0
    log_phi = -0.5 * d**2 - 0.5 * math.log(2 * math.pi)
    return np.exp(log_phi - log_ndtr(d))


def _loglik(w: np.ndarray, q: np.ndarray) -> float:
    d = (q[:, None] - q[None, :]) / _SQRT2
    return float(np.sum(w * log_ndtr(d)))


def _fit_mle(w: np.ndarray, tol: float = 1e-8, max_iter: int = 500) -> np.ndarray:
    """Damped Newton ascent of the concave log-likelihood, q[0] anchored at 0."""
    n = w.shape[0]
    q = np.zeros(n)
    if n == 1:
        return q
    for _ in range(max_iter):
        d = (q[:, None] - q[None, :]) / _SQRT2
        lam = _inverse_mills(d)
        g_pair = w * lam / _SQRT2
        grad = g_pair.sum(axis=1) - g_pair.sum(axis=0)
        if float(np.max(np.abs(grad[1:]))) < tol:
            break
        psi = -d * lam - lam**2  # d/dd of the inverse Mills ratio, always < 0
        s = w * psi
        m = (s + s.T) / 2.0
        hess = -m
        np.fill_diagonal(hess, m.sum(axis=1) - np.diag(m))
        h_red = hess[1:, 1:]
        try:
            step = np.linalg.solve(h_red, -grad[1:])
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(h_red, -grad[1:], rcond=None)[0]
        base = _loglik(w, q)
        alpha = 1.0
        for _ in range(60):
            trial = q.copy()
            trial[1:] += alpha * step
            if _loglik(w, trial) >= base:
                q = trial
                break
            alpha /= 2.0
        else:  # no improving step found; converged to working precision
            break
    return q


def thurstone_case_v(matrix: ComparisonMatrix, prior: float = 0.1) -> np.ndarray:
    """Raw scale scores aligned with matrix.conditions, first condition at 0.

    The prior adds pseudo-wins both ways on every compared pair so unanimous
    pairs stay finite; prior=0 gives the pure MLE.
    """
    n = len(matrix.conditions)
    if n == 0:
        raise ScalingError("empty comparison matrix")
    presented = matrix.presented()
    components = _connected_components(presented)
    if len(components) > 1:
        named = [[matrix.conditions[i] for i in comp] for comp in components]
        raise ScalingError(f"comparison graph is disconnected: components {named}")
    w = matrix.wins + prior * (presented > 0)
    return _fit_mle(w)


# ---------------------------------------------------------------------------
# observer screening


def _responses_by_observer(responses) -> dict[str, list[Response]]:
    grouped = defaultdict(list)
    for r in responses:
        grouped[r.observer_id].append(r)
    return grouped


def _fit_groupwise(responses, triplets, prior: float) -> dict[tuple[str, str], dict[str, float]]:
    """Per-group condition scores; disconnected groups fit per component."""
    fits: dict[tuple[str, str], dict[str, float]] = {}
    for group in groups_present(triplets):
        in_group = {t.id for t in triplets if group_of(t) == group}
        rs = [r for r in responses if r.triplet_id in in_group]
        matrix = build_matrix(rs, triplets, group)
        if not matrix.conditions:
            continue
        scores: dict[str, float] = {}
        for comp in _connected_components(matrix.presented()):
            sub = ComparisonMatrix(
                conditions=tuple(matrix.conditions[i] for i in comp),
                wins=matrix.wins[np.ix_(comp, comp)],
                group=group,
            )
            q = thurstone_case_v(sub, prior)
            scores.update(zip(sub.conditions, q))
        fits[group] = scores
    return fits


def _observer_nll(observer_responses, triplets_by_id, fits) -> float:
    nll = 0.0
    for r in observer_responses:
        t = triplets_by_id[r.triplet_id]
        if t.qtype is QuestionType.BIAS_CONTROL:
            continue
        scores = fits.get(group_of(t))
        if scores is None:
            continue
        la, lb = t.left.label(), t.right.label()
        if la == lb or la not in scores or lb not in scores:
            continue
        d = (scores[la] - scores[lb]) / _SQRT2
        log_p_left_better = float(log_ndtr(d))
        log_p_right_better = float(log_ndtr(-d))
        if r.choice is Choice.NOT_SURE:
            nll -= 0.5 * (log_p_left_better + log_p_right_better)
        else:
            loser = resolve_choice(t, r)
            nll -= log_p_right_better if loser is t.left else log_p_left_better
    return nll


def screen_outliers(responses, triplets, prior: float = 0.1) -> list[str]:
    """Exclude observers whose held-out negative log-likelihood sits beyond
    1.5 IQR above the third quartile. Applied once, never iterated."""
    by_observer = _responses_by_observer(responses)
    observers = sorted(by_observer)
    if len(observers) < 3:
        raise ScalingError(f"outlier screening needs at least 3 observers, got {len(observers)}")
    triplets_by_id = {t.id: t for t in triplets}

    stats = {}
    for held_out in observers:
        rest = [r for r in responses if r.observer_id != held_out]
        fits = _fit_groupwise(rest, triplets, prior)
        stats[held_out] = _observer_nll(by_observer[held_out], triplets_by_id, fits)

    values = np.array([stats[o] for o in observers])
    q1, q3 = np.percentile(values, [25, 75])
    cutoff = q3 + 1.5 * (q3 - q1)
    return [o for o in observers if stats[o] > cutoff]


# ---------------------------------------------------------------------------
# bootstrap confidence intervals


def percentile_ranks(b: int, level: float = 0.95) -> tuple[int, int]:
    """1-based order-statistic ranks for the two-sided interval."""
    alpha = (1.0 - level) / 2.0
    # snap before ceil/floor: 0.025 * 1000 is 25.000000000000004 in binary
    lo = math.ceil(round(alpha * b, 9))
    hi = math.floor(round((1.0 - alpha) * b, 9))
    return max(lo, 1), min(hi, b)


def bootstrap_ci(
    responses,
    triplets,
    group: tuple[str, str],
    b: int = 500,
    level: float = 0.95,
    seed: int = 0,
    prior: float = 0.1,
) -> dict[str, tuple[float, float]]:
    """Observer bootstrap: resample observers with replacement, rescore, and
    take percentile intervals per condition. Replicates whose comparison
    graph degenerates are redrawn within a bounded budget."""
    if b < 100:
        raise ScalingError(f"bootstrap needs at least 100 resamples, got {b}")
    in_group = {t.id for t in triplets if group_of(t) == group}
    group_responses = [r for r in responses if r.triplet_id in in_group]
    full = build_matrix(group_responses, triplets, group)
    conditions = full.conditions
    by_observer = _responses_by_observer(group_responses)
    observers = sorted(by_observer)
    if len(observers) < 2:
        raise ScalingError(f"bootstrap needs at least 2 observers, got {len(observers)}")

    rng = np.random.default_rng(seed)
    samples = np.empty((b, len(conditions)))
    budget = 20 * b
    done = 0
    while done < b:
        if budget <= 0:
            raise ScalingError("bootstrap exhausted its redraw budget on degenerate resamples")
        budget -= 1
        draw = rng.choice(len(observers), size=len(observers), replace=True)
        rs: list[Response] = []
        for k in draw:
            rs.extend(by_observer[observers[k]])
        matrix = build_matrix(rs, triplets, group, conditions=conditions)
        presented = matrix.presented()
        if np.any(presented.sum(axis=1) == 0) or len(_connected_components(presented)) > 1:
            continue
        q = thurstone_case_v(matrix, prior)
        samples[done] = q - q[0]  # re-anchor at the first (REFERENCE) condition
        done += 1

    lo_rank, hi_rank = percentile_ranks(b, level)
    ordered = np.sort(samples, axis=0)
    return {
        label: (float(ordered[lo_rank - 1, i]), float(ordered[hi_rank - 1, i]))
        for i, label in enumerate(conditions)
    }


# ---------------------------------------------------------------------------
# normalization


@dataclass(frozen=True)
class QualityScale:
    conditions: tuple[str, ...]
    score: tuple[float, ...]
    ci_low: tuple[float, ...]
    ci_high: tuple[float, ...]
    normalization: dict

    def as_dict(self) -> dict:
        return {
            "conditions": list(self.conditions),
            "score": list(self.score),
            "ci_low": list(self.ci_low),
            "ci_high": list(self.ci_high),
            "normalization": dict(self.normalization),
        }


def finalize_scale(
    conditions,
    raw_scores,
    cis: dict[str, tuple[float, float]] | None = None,
    orientation: str = "flicker_strength",
) -> QualityScale:
    """Min-max normalize to [0, 1] with higher = better quality.

    orientation names what the raw scores measure: "flicker_strength" inputs
    are negated first (more flicker = worse), quality-oriented inputs pass
    through. Score and CI endpoints go through the same affine map.
    """
    if orientation not in ("flicker_strength", "quality"):
        raise ScalingError(f"unknown orientation {orientation!r}")
    conditions = tuple(conditions)
    raw = np.asarray(raw_scores, float)
    if raw.shape != (len(conditions),):
        raise ScalingError("scores do not align with conditions")
    if cis is None:
        cis = {c: (s, s) for c, s in zip(conditions, raw)}
    lo = np.array([cis[c][0] for c in conditions], float)
    hi = np.array([cis[c][1] for c in conditions], float)

    sign = -1.0 if orientation == "flicker_strength" else 1.0
    raw, lo, hi = sign * raw, sign * lo, sign * hi
    if sign < 0:
        lo, hi = hi, lo

    span = float(raw.max() - raw.min())
    if span <= 0:
        raise ScalingError("constant scores cannot be min-max normalized")
    offset = float(raw.min())
    affine = lambda x: (x - offset) / span
    return QualityScale(
        conditions=conditions,
        score=tuple(float(v) for v in affine(raw)),
        ci_low=tuple(float(v) for v in affine(lo)),
        ci_high=tuple(float(v) for v in affine(hi)),
        normalization={"orientation": orientation, "offset": offset, "span": span},
    )


# ---------------------------------------------------------------------------
# response file I/O (JSON lines, one response per line)


def response_to_json(r: Response, phase: str = "testing") -> dict:
    return {
        "observer_id": r.observer_id,
        "triplet_id": r.triplet_id,
        "choice": r.choice.value,
        "latency_ms": r.latency_ms,
        "presented_swapped": r.presented_swapped,
        "phase": phase,
    }


def response_from_json(obj: dict) -> Response:
    return Response(
        observer_id=obj["observer_id"],
        triplet_id=obj["triplet_id"],
        choice=Choice(obj["choice"]),
        latency_ms=float(obj.get("latency_ms", 0.0)),
        presented_swapped=bool(obj["presented_swapped"]),
    )


def write_responses(path, responses, phase: str = "testing") -> None:
    with open(path, "w") as fh:
        for r in responses:
            fh.write(json.dumps(response_to_json(r, phase)) + "\n")


def read_responses(path, include_training: bool = False) -> list[Response]:
    out = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        if obj.get("phase") == "training" and not include_training:
            continue
        out.append(response_from_json(obj))
    return out
