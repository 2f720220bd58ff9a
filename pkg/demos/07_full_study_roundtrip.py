import json
import subprocess
import sys
import tempfile
import warnings
from pathlib import Path

warnings.filterwarnings("ignore", message="Using `httpx` with `starlette.testclient`")
from fastapi.testclient import TestClient  # noqa: E402

from lfstudy import read_study_manifest, write_responses
from lfstudy.service import StudyStore, create_app
from lfstudy.simulate import ground_truth_for, simulate_responses

# End to end: prepare a study from a config, collect (simulated) responses,
# analyze, and run the same study through the HTTP service. Everything here
# goes through the public command line and HTTP interfaces.

CONFIG = """\
[run]
name = "roundtrip"
seed = 3

[[contents]]
id = "alpha"
height = 32
width = 32

[[contents]]
id = "beta"
height = 32
width = 32

[codecs.pleno]
kind = "standin"

[codecs.vvc]
kind = "standin"
table_scale = 1.6

[study]
bitrate_ladder = [0.5, 1.0, 2.0, 4.0]
observers = 6
evals_per_triplet = 2
training_items = 2
break_s = 1

[metrics]
compute = ["psnr"]
selection_metric = "psnr"

[analyze]
bootstrap = 120
seed = 3
"""

work = Path(tempfile.mkdtemp(prefix="lfstudy_demo_"))
(work / "config.toml").write_text(CONFIG)

# Stage 1: prepare. Synthesizes the content, codes every condition, scores
# all views, picks test views, renders PNG assets, generates the questions
# and schedules the sessions. Reruns with the same config are byte-stable.
run = subprocess.run(
    [sys.executable, "-m", "lfstudy.cli", "prepare", "--config", str(work / "config.toml"),
     "--out-dir", str(work / "runs")],
    capture_output=True, text=True,
)
print(run.stdout.strip() or run.stderr.strip())
run_dir = next((work / "runs").iterdir())
print("artifacts:", sorted(p.name for p in run_dir.iterdir()))

# Stage 2: collect responses. A real deployment points observers at the
# study service; here synthetic observers answer from a hidden quality
# scale so the analysis has something to recover.
triplets, sessions, meta = read_study_manifest(run_dir / "manifest.json")
print()
print("triplets:", len(triplets), " sessions:", len(sessions), " meta keys:", sorted(meta)[:4], "...")

truth = ground_truth_for(
    triplets,
    lambda s: 12.0 if s.is_reference else 2.0 * s.condition.target_bitrate_bpp,
)
responses = simulate_responses(triplets, sessions, truth, seed=3)
write_responses(work / "responses.jsonl", responses)
print("responses written:", len(responses))

# Stage 3: analyze. Screens attention failures and outliers, fits the Case V
# scale per (content, view type) group with bootstrap CIs, and benchmarks
# every computed metric against the subjective scale.
run = subprocess.run(
    [sys.executable, "-m", "lfstudy.cli", "analyze", "--run-dir", str(run_dir),
     "--responses", str(work / "responses.jsonl")],
    capture_output=True, text=True,
)
print()
print(run.stdout.strip() or run.stderr.strip())

screening = json.loads((run_dir / "analysis" / "screening.json").read_text())
print("kept", screening["responses_kept"], "of", screening["responses_in"], "responses")

scales = json.loads((run_dir / "analysis" / "scales.json").read_text())
group = scales["groups"]["alpha|S"]
print("alpha|S conditions:", len(group["conditions"]))
top = max(zip(group["score"], group["conditions"]))
print("best scored:", top[1], "at", round(top[0], 3))

report = json.loads((run_dir / "analysis" / "bench" / "report.json").read_text())
stats = report["groups"]["alpha|S"]["metrics"]["psnr"]
print("psnr benchmark on alpha|S: pcc %.3f srocc %.3f" % (stats["pcc"], stats["srocc"]))

# Stage 4: the same run dir feeds the HTTP service. The service keeps an
# append-only event log per study, so crashes never lose acknowledged
# responses and restarts replay to the exact same state.
store = StudyStore(root=work / "service-data")
app = create_app(store=store)
client = TestClient(app)

manifest = json.loads((run_dir / "manifest.json").read_text())
created = client.post("/studies", json={"manifest": manifest, "assets_dir": str(run_dir / "assets")})
sid = created.json()["study_id"]
print()
print("study id:", sid)

obs = sessions[0].observer_id
client.post(f"/studies/{sid}/observers/{obs}/register",
            json={"consent": True, "acuity_ok": True, "color_vision_ok": True})

# walk the first three items: training first, then testing
for _ in range(3):
    item = client.get(f"/studies/{sid}/observers/{obs}/next").json()
    png = client.get(item["reference"])
    client.post(f"/studies/{sid}/observers/{obs}/responses",
                json={"triplet_id": item["triplet_id"], "choice": "left", "latency_ms": 900})
    print(f"answered {item['triplet_id']}  phase={item['phase']}  asset={png.status_code} ({len(png.content)} bytes)")

export = store.export_responses(sid)
print("exported testing responses so far:", len(export))
print()
print("working dir kept at", work)
