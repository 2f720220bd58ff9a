import json
import os
import tempfile

import numpy as np

from lfstudy import (
    LogisticParams,
    benchmark_group,
    correlate,
    emit_report,
    logistic_fit,
    predict,
)

# After a study produces subjective quality scores, each objective metric is
# judged by how well a monotone logistic of the metric predicts them:
#   Q~ = a + b / (1 + exp(-c (O - d)))

# predict/logistic_fit round trip: sample a known curve and refit it.
true = LogisticParams(a=0.05, b=0.9, c=6.0, d=0.45)
objective = np.linspace(0.0, 1.0, 12)
quality = predict(true, objective)
fit = logistic_fit(list(zip(objective, quality)))
print("true params :", [round(v, 4) for v in true.as_list()])
print("fitted      :", [round(v, 4) for v in fit.as_list()])
print("max fit err :", float(np.max(np.abs(predict(fit, objective) - quality))))
print("midpoint    :", predict(fit, fit.d), "=", fit.a + fit.b / 2)

# Correlation statistics between mapped predictions and subjective scores:
# Pearson (linearity after the fit), Spearman (rank order), RMSE, and the
# share of points falling outside their own confidence interval.
perfect = [(0.1, 0.1), (0.4, 0.4), (0.9, 0.9)]
print()
print("perfect pairs:", correlate(perfect))
noisy = [(0.1, 0.12), (0.4, 0.35), (0.6, 0.66), (0.9, 0.88)]
stats = correlate(noisy, ci_halfwidths=[0.03, 0.03, 0.03, 0.03])
print("noisy pairs  :", stats)

# benchmark_group packages the whole per-group evaluation: both axes are
# min-max normalized, the logistic is fitted with multiple restarts, and
# the stats are computed on the fitted predictions.
rng = np.random.default_rng(2)
conds = [f"codecA_full5x5_{b:g}" for b in (0.25, 0.5, 1.0, 2.0, 4.0, 8.0)]
raw_obj = {c: 30.0 + 4.0 * i + rng.normal(0, 0.1) for i, c in enumerate(conds)}  # dB-like
raw_subj = {}
for i, c in enumerate(conds):
    q = float(predict(true, i / 5) + rng.normal(0, 0.01))
    raw_subj[c] = (q, q - 0.04, q + 0.04)

bench = benchmark_group("demo|S", "psnr_like", raw_obj, raw_subj)
print()
print("group:", bench.group, " metric:", bench.metric)
print("pcc %.4f  srocc %.4f  rmse %.4f  outliers %.2f" % (
    bench.stats.pcc, bench.stats.srocc, bench.stats.rmse, bench.stats.outlier_ratio))
print("normalized objective:", [round(v, 3) for v in bench.objective])
print("normalized subjective:", [round(v, 3) for v in bench.subjective])

# emit_report writes a machine-readable summary plus CSVs ready to plot:
# one scatter file per (group, metric) with 101 curve samples, and one
# rate-quality file per group when bitrates are supplied.
with tempfile.TemporaryDirectory() as d:
    bitrates = {c: b for c, b in zip(conds, (0.25, 0.5, 1.0, 2.0, 4.0, 8.0))}
    payload = emit_report([bench], d, bitrates=bitrates)
    print()
    print("files:", sorted(os.listdir(d)))
    on_disk = json.loads(open(os.path.join(d, "report.json")).read())
    print("report groups:", list(on_disk["groups"]))
    print("psnr_like pcc from disk:", on_disk["groups"]["demo|S"]["metrics"]["psnr_like"]["pcc"])
    scatter = open(os.path.join(d, "scatter_demo-S_psnr_like.csv")).read().splitlines()
    print("scatter header:", scatter[0], " rows:", len(scatter) - 1)
    curve = open(os.path.join(d, "curve_demo-S.csv")).read().splitlines()
    print("curve header  :", curve[0], " rows:", len(curve) - 1)
