"""Objective-metric validation against the subjective scale.

Metric scores O are mapped onto the subjective scale Q through the
4-parameter logistic

    Q~ = a + b / (1 + exp(-c (O - d)))

fitted by least squares, then compared with Pearson and Spearman
correlations, RMSE, and the outlier ratio (fraction of conditions whose
prediction misses Q by more than its confidence half-width). O and Q are
min-max normalized per benchmark group before fitting.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit
from scipy.stats import rankdata


class BenchError(Exception):
    pass


@dataclass(frozen=True)
class LogisticParams:
    a: float
    b: float
    c: float
    d: float

    def as_list(self) -> list[float]:
        return [self.a, self.b, self.c, self.d]


def predict(params: LogisticParams, o):
    """Evaluate the logistic at o (scalar or array); expit keeps the
    exponential stable on both sides of the midpoint."""
    o = np.asarray(o, float)
    value = params.a + params.b * expit(params.c * (o - params.d))
    return float(value) if value.ndim == 0 else value


def _sse(x: np.ndarray, o: np.ndarray, q: np.ndarray) -> float:
    p = LogisticParams(*x)
    r = predict(p, o) - q
    return float(r @ r)


def logistic_fit(points, seed: int = 0) -> LogisticParams:
    """Least-squares fit by multi-start Nelder-Mead simplex descent.

    Starts from (a = min Q, b = max Q - min Q, c = 4 / sigma_O, d = mean O)
    plus 5 seeded perturbations of it; the best SSE wins.
    """
    pts = [(float(o), float(q)) for o, q in points]
    if len(pts) < 5:
        raise BenchError(f"logistic fit needs at least 5 points, got {len(pts)}")
    o = np.array([p[0] for p in pts])
    q = np.array([p[1] for p in pts])
    sigma_o = float(o.std())
    if sigma_o == 0.0:
        raise BenchError("objective scores are all equal; the fit is undefined")
    if not (np.isfinite(o).all() and np.isfinite(q).all()):
        raise BenchError("non-finite input points")

    x0 = np.array([q.min(), q.max() - q.min(), 4.0 / sigma_o, o.mean()])
    rng = np.random.default_rng(seed)
    scale = np.maximum(np.abs(x0), 0.5)
    starts = [x0] + [x0 + 0.3 * scale * rng.standard_normal(4) for _ in range(5)]

    best_x, best_sse = x0, _sse(x0, o, q)
    for start in starts:
        res = minimize(
            _sse,
            start,
            args=(o, q),
            method="Nelder-Mead",
            options={"xatol": 1e-9, "fatol": 1e-9, "maxiter": 2000, "maxfev": 4000},
        )
        if np.isfinite(res.fun) and res.fun < best_sse:
            best_x, best_sse = res.x, float(res.fun)
    return LogisticParams(*(float(v) for v in best_x))


@dataclass(frozen=True)
class CorrelationStats:
    pcc: float
    srocc: float
    rmse: float
    outlier_ratio: float


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    if x.std() == 0.0 or y.std() == 0.0:
        raise BenchError("zero variance on one axis; correlation undefined")
    r = float(np.corrcoef(x, y)[0, 1])
    # exact linear relations must come out as exactly +-1; corrcoef can land
    # a few ulp inside the bound, and no attainable imperfect ranking at the
    # group sizes in play gets anywhere near this close
    if 1.0 - abs(r) < 1e-13:
        r = math.copysign(1.0, r)
    return r


def correlate(pairs, ci_halfwidths=None) -> CorrelationStats:
    """pairs: (predicted Q~, subjective Q); half-widths gate the outlier ratio.

    SROCC is Pearson on average-ranked data, so ties share their mean rank.
    """
    pred = np.array([p[0] for p in pairs], float)
    subj = np.array([p[1] for p in pairs], float)
    if pred.size < 3:
        raise BenchError(f"need at least 3 pairs, got {pred.size}")
    residual = pred - subj
    if ci_halfwidths is None:
        hw = np.full(pred.size, np.inf)
    else:
        hw = np.asarray(ci_halfwidths, float)
        if hw.shape != pred.shape:
            raise BenchError("half-widths do not align with pairs")
    return CorrelationStats(
        pcc=_pearson(pred, subj),
        srocc=_pearson(rankdata(pred), rankdata(subj)),
        rmse=float(np.sqrt(np.mean(residual**2))),
        outlier_ratio=float(np.mean(np.abs(residual) > hw)),
    )


# ---------------------------------------------------------------------------
# report assembly


def _minmax(values: np.ndarray) -> tuple[np.ndarray, float]:
    span = float(values.max() - values.min())
    if span <= 0:
        raise BenchError("cannot min-max normalize a constant series")
    return (values - values.min()) / span, span


@dataclass(frozen=True)
class GroupBenchmark:
    group: str
    metric: str
    params: LogisticParams
    stats: CorrelationStats
    conditions: tuple[str, ...]
    objective: tuple[float, ...]  # normalized O
    subjective: tuple[float, ...]  # normalized Q
    predicted: tuple[float, ...]
    ci_halfwidth: tuple[float, ...]


def benchmark_group(
    group: str,
    metric: str,
    objective: dict[str, float],
    subjective: dict[str, tuple[float, float, float]],
    seed: int = 0,
) -> GroupBenchmark:
    """objective: condition -> O; subjective: condition -> (q, ci_lo, ci_hi)."""
    conditions = tuple(sorted(subjective))
    missing = [c for c in conditions if c not in objective]
    if missing:
        raise BenchError(f"metric {metric!r} has no score for condition {missing[0]!r} in {group!r}")

    o_raw = np.array([objective[c] for c in conditions])
    q_raw = np.array([subjective[c][0] for c in conditions])
    hw_raw = np.array([(subjective[c][2] - subjective[c][1]) / 2.0 for c in conditions])
    o_norm, _ = _minmax(o_raw)
    q_norm, q_span = _minmax(q_raw)
    hw_norm = hw_raw / q_span

    params = logistic_fit(list(zip(o_norm, q_norm)), seed=seed)
    predicted = predict(params, o_norm)
    stats = correlate(list(zip(predicted, q_norm)), hw_norm)
    return GroupBenchmark(
        group=group,
        metric=metric,
        params=params,
        stats=stats,
        conditions=conditions,
        objective=tuple(float(v) for v in o_norm),
        subjective=tuple(float(v) for v in q_norm),
        predicted=tuple(float(v) for v in predicted),
        ci_halfwidth=tuple(float(v) for v in hw_norm),
    )


def emit_report(benchmarks, out_dir, bitrates: dict[str, float] | None = None) -> dict:
    """Write report.json plus plot CSVs; returns the report payload.

    Per (group, metric): a scatter CSV with fitted-curve samples. With a
    condition -> bpp map, also one rate-quality CSV per group.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    report: dict = {"groups": {}}
    seen_groups: dict[str, GroupBenchmark] = {}
    for b in benchmarks:
        entry = report["groups"].setdefault(b.group, {"metrics": {}})
        entry["metrics"][b.metric] = {
            "params": b.params.as_list(),
            "pcc": b.stats.pcc,
            "srocc": b.stats.srocc,
            "rmse": b.stats.rmse,
            "outlier_ratio": b.stats.outlier_ratio,
            "conditions": list(b.conditions),
            "objective": list(b.objective),
            "subjective": list(b.subjective),
            "predicted": list(b.predicted),
        }
        seen_groups.setdefault(b.group, b)

        safe = _safe_name(f"{b.group}_{b.metric}")
        with open(out_dir / f"scatter_{safe}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kind", "condition", "objective", "subjective", "predicted"])
            for cond, o, q, p in zip(b.conditions, b.objective, b.subjective, b.predicted):
                w.writerow(["point", cond, f"{o:.8f}", f"{q:.8f}", f"{p:.8f}"])
            for o in np.linspace(0.0, 1.0, 101):
                w.writerow(["curve", "", f"{o:.8f}", "", f"{predict(b.params, o):.8f}"])

    if bitrates is not None:
        for group, b in seen_groups.items():
            rows = []
            for cond, q, hw in zip(b.conditions, b.subjective, b.ci_halfwidth):
                if cond in bitrates:
                    rows.append((bitrates[cond], cond, q, q - hw, q + hw))
            if not rows:
                continue
            with open(out_dir / f"curve_{_safe_name(group)}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["bpp", "condition", "quality", "ci_low", "ci_high"])
                for bpp, cond, q, lo, hi in sorted(rows):
                    w.writerow([f"{bpp:g}", cond, f"{q:.8f}", f"{lo:.8f}", f"{hi:.8f}"])

    (out_dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report


def _safe_name(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_" else "-" for ch in name)
