"""Command-line front end: prepare, serve, analyze, metrics, bench.

One TOML or JSON config drives a run. prepare writes a self-contained run
directory whose name embeds the config hash; rerunning the same config
reproduces it byte for byte (timings.json is the one volatile file).
analyze consumes a run directory plus an exported response file.

Exit codes: 0 success, 2 config or usage error, 3 stage failure.
"""

from __future__ import annotations

import hashlib
import json
import time
from contextlib import contextmanager
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

import click

from .bench import benchmark_group, emit_report
from .lightfield import LightField, load_light_field
from .metrics import MetricId, load_metric_config, score_light_field
from .pipeline import (
    BITRATE_LADDER,
    BlendSynthesizer,
    EncodingMethod,
    ExternalCodec,
    ExternalSynthesizer,
    StandInCodec,
    run_condition,
    select_test_views,
    write_condition_manifest,
)
from .scaling import (
    REFERENCE_LABEL,
    bootstrap_ci,
    build_matrix,
    finalize_scale,
    group_of,
    groups_present,
    read_responses,
    screen_outliers,
    thurstone_case_v,
)
from .service import DATA_ENV, create_app, render_asset_png
from .simulate import make_light_field
from .study import (
    QuestionType,
    Stimulus,
    Triplet,
    default_ruleset,
    generate_triplets,
    read_study_manifest,
    ruleset_to_json,
    schedule_sessions,
    validate_responses,
    write_study_manifest,
)

_METRIC_NAMES = tuple(m.value for m in MetricId)


class ConfigError(click.ClickException):
    exit_code = 2


class StageError(click.ClickException):
    exit_code = 3

    def __init__(self, stage: str, artifact, cause):
        super().__init__(f"stage {stage!r} failed ({artifact}): {cause}")
        self.stage = stage


@contextmanager
def _stage(name: str, artifact):
    try:
        yield
    except (ConfigError, StageError):
        raise
    except Exception as exc:
        raise StageError(name, artifact, exc) from exc


# ---------------------------------------------------------------------------
# configuration


def load_config(path) -> dict:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix == ".toml":
            return tomllib.loads(blob.decode())
        if path.suffix == ".json":
            return json.loads(blob)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    raise ConfigError(f"config must be .toml or .json, got {path.name!r}")


def resolve_config(raw: dict) -> dict:
    """Fill defaults and validate; returns a plain JSON-ready dict."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a table")
    run = raw.get("run", {})
    cfg: dict = {
        "run": {
            "name": str(run.get("name", "study")),
            "seed": int(run.get("seed", 0)),
            "out_dir": str(run.get("out_dir", "runs")),
        }
    }
    seed = cfg["run"]["seed"]

    contents = raw.get("contents")
    if not contents:
        raise ConfigError("config needs at least one [[contents]] entry")
    resolved = []
    for i, entry in enumerate(contents):
        cid = str(entry.get("id", f"content{i}"))
        if any(c["id"] == cid for c in resolved):
            raise ConfigError(f"duplicate content id {cid!r}")
        kind = entry.get("kind", "synthetic")
        if kind == "synthetic":
            resolved.append(
                {
                    "id": cid,
                    "kind": "synthetic",
                    "rows": int(entry.get("rows", 5)),
                    "cols": int(entry.get("cols", 5)),
                    "height": int(entry.get("height", 64)),
                    "width": int(entry.get("width", 64)),
                    "bit_depth": int(entry.get("bit_depth", 8)),
                    "max_shift": int(entry.get("max_shift", 2)),
                    "seed": int(entry.get("seed", seed + i)),
                }
            )
        elif kind == "directory":
            if "path" not in entry:
                raise ConfigError(f"content {cid!r}: directory kind needs a path")
            resolved.append({"id": cid, "kind": "directory", "path": str(entry["path"])})
        else:
            raise ConfigError(f"content {cid!r}: unknown kind {kind!r}")
    cfg["contents"] = resolved

    codecs_raw = raw.get("codecs")
    if not codecs_raw:
        raise ConfigError("config needs a [codecs] table")
    codecs = {}
    for name, entry in codecs_raw.items():
        kind = entry.get("kind", "standin")
        if kind == "standin":
            codecs[name] = {
                "kind": "standin",
                "table_scale": float(entry.get("table_scale", 1.0)),
                "quality": int(entry["quality"]) if "quality" in entry else None,
            }
        elif kind == "external":
            missing = [k for k in ("encode_cmd", "decode_cmd") if k not in entry]
            if missing:
                raise ConfigError(f"codec {name!r}: external kind needs {missing[0]}")
            codecs[name] = {
                "kind": "external",
                "encode_cmd": str(entry["encode_cmd"]),
                "decode_cmd": str(entry["decode_cmd"]),
                "io_format": str(entry.get("io_format", "ppm16")),
            }
        else:
            raise ConfigError(f"codec {name!r}: unknown kind {kind!r}")
    cfg["codecs"] = codecs

    syn = raw.get("synthesis", {})
    syn_kind = syn.get("kind", "blend")
    if syn_kind == "blend":
        cfg["synthesis"] = {"kind": "blend"}
    elif syn_kind == "external":
        if "command" not in syn:
            raise ConfigError("synthesis: external kind needs a command")
        cfg["synthesis"] = {
            "kind": "external",
            "command": str(syn["command"]),
            "io_format": str(syn.get("io_format", "ppm16")),
            "name": str(syn.get("name", "external")),
        }
    else:
        raise ConfigError(f"synthesis: unknown kind {syn_kind!r}")

    st = raw.get("study", {})
    ladder = tuple(float(b) for b in st.get("bitrate_ladder", BITRATE_LADDER))
    if len(ladder) < 2 or any(b >= a for a, b in zip(ladder[1:], ladder)):
        raise ConfigError("bitrate_ladder must be strictly ascending with >= 2 rungs")
    try:
        methods = [EncodingMethod(m).value for m in st.get("methods", ["full5x5", "sparse3x3"])]
    except ValueError as exc:
        raise ConfigError(f"study.methods: {exc}") from exc
    if not methods or len(set(methods)) != len(methods):
        raise ConfigError("study.methods must be non-empty and unique")
    observers = int(st.get("observers", 32))
    evals = int(st.get("evals_per_triplet", 16))
    if evals <= 0 or evals % 2:
        raise ConfigError(f"evals_per_triplet must be positive and even, got {evals}")
    if observers < evals:
        raise ConfigError(f"need at least {evals} observers for {evals} evals per triplet")
    names = list(codecs)
    cfg["study"] = {
        "bitrate_ladder": list(ladder),
        "methods": methods,
        "observers": observers,
        "evals_per_triplet": evals,
        "training_items": int(st.get("training_items", 2)),
        "flicker_ms": int(st.get("flicker_ms", 500)),
        "break_s": int(st.get("break_s", 60)),
        "pleno_codec": str(st.get("pleno_codec", names[0])),
        "vvc_codec": str(st.get("vvc_codec", names[1] if len(names) > 1 else names[0])),
    }

    mt = raw.get("metrics", {})
    compute = [str(m) for m in mt.get("compute", _METRIC_NAMES)]
    bad = [m for m in compute if m not in _METRIC_NAMES]
    if bad:
        raise ConfigError(f"unknown metrics {bad}; choose from {list(_METRIC_NAMES)}")
    selection = str(mt.get("selection_metric", "ms_ssim"))
    if selection not in compute:
        raise ConfigError(f"selection_metric {selection!r} is not in metrics.compute")
    scales = mt.get("ms_ssim_scales")
    cfg["metrics"] = {
        "compute": compute,
        "selection_metric": selection,
        "ms_ssim_scales": int(scales) if scales is not None else None,
    }

    an = raw.get("analyze", {})
    cfg["analyze"] = {
        "bootstrap": int(an.get("bootstrap", 500)),
        "level": float(an.get("level", 0.95)),
        "prior": float(an.get("prior", 0.1)),
        "attention_threshold": float(an.get("attention_threshold", 0.75)),
        "seed": int(an.get("seed", seed)),
    }
    return cfg


def config_hash(resolved: dict) -> str:
    """Hash of the resolved config minus the output location."""
    trimmed = json.loads(json.dumps(resolved))
    trimmed["run"].pop("out_dir", None)
    blob = json.dumps(trimmed, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _build_codecs(cfg: dict) -> dict:
    out = {}
    for name, entry in cfg["codecs"].items():
        if entry["kind"] == "standin":
            out[name] = StandInCodec(
                name=name, quality=entry["quality"], table_scale=entry["table_scale"]
            )
        else:
            out[name] = ExternalCodec(
                name=name,
                encode_cmd=entry["encode_cmd"],
                decode_cmd=entry["decode_cmd"],
                io_format=entry["io_format"],
            )
    return out


def _build_synth(cfg: dict):
    syn = cfg["synthesis"]
    if syn["kind"] == "blend":
        return BlendSynthesizer()
    return ExternalSynthesizer(command=syn["command"], io_format=syn["io_format"], name=syn["name"])


def _build_content(entry: dict) -> LightField:
    if entry["kind"] == "synthetic":
        return make_light_field(
            content_id=entry["id"],
            rows=entry["rows"],
            cols=entry["cols"],
            height=entry["height"],
            width=entry["width"],
            seed=entry["seed"],
            bit_depth=entry["bit_depth"],
            max_shift=entry["max_shift"],
        )
    return load_light_field(entry["path"], content_id=entry["id"])


# ---------------------------------------------------------------------------
# commands


@click.group()
def main():
    """Flicker-study toolbox: prepare studies, serve them, analyze results."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="TOML or JSON run config.")
@click.option("--out-dir", default=None, help="Override run.out_dir from the config.")
def prepare(config_path, out_dir):
    """Build a complete study directory: conditions, metrics, triplets, sessions, assets."""
    cfg = resolve_config(load_config(config_path))
    if out_dir:
        cfg["run"]["out_dir"] = str(out_dir)
    digest = config_hash(cfg)
    run_dir = Path(cfg["run"]["out_dir"]) / f"{cfg['run']['name']}-{digest}"
    run_dir.mkdir(parents=True, exist_ok=True)
    resolved = dict(cfg)
    resolved["config_hash"] = digest
    (run_dir / "config.resolved.json").write_text(
        json.dumps(resolved, indent=2, sort_keys=True) + "\n"
    )

    seed = cfg["run"]["seed"]
    ladder = cfg["study"]["bitrate_ladder"]
    timings: dict = {"stages_s": {}, "conditions_s": {}}

    def clock(stage_name, started):
        timings["stages_s"][stage_name] = round(time.perf_counter() - started, 6)

    t = time.perf_counter()
    with _stage("contents", run_dir):
        fields = [_build_content(entry) for entry in cfg["contents"]]
        codecs = _build_codecs(cfg)
        synth = _build_synth(cfg)
    clock("contents", t)

    t = time.perf_counter()
    per_content: dict[str, dict] = {}
    manifest_entries = []
    with _stage("conditions", run_dir / "conditions.json"):
        for lf in fields:
            decoded = {}
            manifest_entries.append(
                {
                    "content_id": lf.content_id,
                    "light_field_dir": "",
                    "condition": None,
                    "rows": lf.rows,
                    "cols": lf.cols,
                }
            )
            for name in cfg["codecs"]:
                for method in cfg["study"]["methods"]:
                    for bpp in ladder:
                        recon, cond = run_condition(lf, codecs[name], method, bpp, synth)
                        decoded[cond.label()] = (cond, recon)
                        timings["conditions_s"][f"{lf.content_id}/{cond.label()}"] = round(
                            cond.wall_clock_s, 6
                        )
                        manifest_entries.append(
                            {
                                "content_id": lf.content_id,
                                "light_field_dir": "",
                                "condition": cond,
                                "rows": lf.rows,
                                "cols": lf.cols,
                            }
                        )
            per_content[lf.content_id] = {"reference": lf, "decoded": decoded}
        write_condition_manifest(
            run_dir / "conditions.json",
            manifest_entries,
            extra={"synthesizer": synth.name, "seed": seed},
        )
    clock("conditions", t)

    t = time.perf_counter()
    metric_cfg = load_metric_config(ms_ssim_scales=cfg["metrics"]["ms_ssim_scales"])
    scores: dict[str, dict[str, dict]] = {}
    with _stage("metrics", run_dir / "metrics.json"):
        for cid, bundle in per_content.items():
            scores[cid] = {}
            for label, (cond, recon) in bundle["decoded"].items():
                scores[cid][label] = {
                    m: score_light_field(bundle["reference"], recon, m, metric_cfg)
                    for m in cfg["metrics"]["compute"]
                }
    clock("metrics", t)

    t = time.perf_counter()
    selected_views: dict[str, dict] = {}
    with _stage("view-selection", run_dir / "metrics.json"):
        sel_metric = cfg["metrics"]["selection_metric"]
        sel_codec = cfg["study"]["pleno_codec"]
        methods = cfg["study"]["methods"]
        sel_method = "sparse3x3" if "sparse3x3" in methods else methods[0]
        sel_label = f"{sel_codec}_{sel_method}_{ladder[-1]:g}"
        for cid in scores:
            if sel_label not in scores[cid]:
                raise StageError(
                    "view-selection", run_dir / "metrics.json", f"no condition {sel_label!r}"
                )
            field_score = scores[cid][sel_label][sel_metric]
            per_view = {coord: res.value for coord, res in field_score.per_view.items()}
            selected_views[cid] = select_test_views(per_view)
    clock("view-selection", t)

    t = time.perf_counter()
    stimuli: list[Stimulus] = []
    with _stage("assets", run_dir / "assets"):
        for cid, bundle in per_content.items():
            ref_lf = bundle["reference"]
            for vtype in sorted(selected_views[cid], key=lambda v: v.value):
                r, c = selected_views[cid][vtype]
                unit_dir = f"{cid}/{vtype.value}_r{r}c{c}"
                handle = f"{unit_dir}/REFERENCE.png"
                render_asset_png(ref_lf.view(r, c), run_dir / "assets" / handle)
                stimuli.append(Stimulus(cid, (r, c), vtype, None, handle))
                for label in sorted(bundle["decoded"]):
                    cond, recon = bundle["decoded"][label]
                    handle = f"{unit_dir}/{label}.png"
                    render_asset_png(recon.view(r, c), run_dir / "assets" / handle)
                    stimuli.append(Stimulus(cid, (r, c), vtype, cond, handle))
    clock("assets", t)

    t = time.perf_counter()
    with _stage("triplets", run_dir / "manifest.json"):
        ruleset = default_ruleset(
            tuple(ladder),
            pleno_codec=cfg["study"]["pleno_codec"],
            vvc_codec=cfg["study"]["vvc_codec"],
        )
        test_triplets = generate_triplets(stimuli, ruleset)
        checks = [t_ for t_ in test_triplets if t_.qtype is QuestionType.ATTENTION_CHECK]
        training = [
            Triplet(id=f"training.{i:02d}", reference=t_.reference, left=t_.left,
                    right=t_.right, qtype=t_.qtype)
            for i, t_ in enumerate(checks[: cfg["study"]["training_items"]])
        ]
    clock("triplets", t)

    t = time.perf_counter()
    with _stage("sessions", run_dir / "manifest.json"):
        sessions = schedule_sessions(
            test_triplets,
            observers=cfg["study"]["observers"],
            evals_per_triplet=cfg["study"]["evals_per_triplet"],
            seed=seed,
        )
        write_study_manifest(
            run_dir / "manifest.json",
            test_triplets + training,
            sessions,
            extra={
                "training": [t_.id for t_ in training],
                "flicker_ms": cfg["study"]["flicker_ms"],
                "break_s": cfg["study"]["break_s"],
                "seed": seed,
                "config_hash": digest,
                "ruleset": ruleset_to_json(ruleset),
            },
        )
    clock("sessions", t)

    t = time.perf_counter()
    with _stage("metric-report", run_dir / "metrics.json"):
        payload = {
            "schema": "lfstudy-metrics-v1",
            "metrics": cfg["metrics"]["compute"],
            "ms_ssim_scales": cfg["metrics"]["ms_ssim_scales"],
            "selection_metric": cfg["metrics"]["selection_metric"],
            "seed": seed,
            "contents": {},
        }
        for cid, bundle in per_content.items():
            conditions = {}
            for label, (cond, _) in bundle["decoded"].items():
                conditions[label] = {
                    "codec": cond.codec,
                    "method": cond.method.value,
                    "target_bpp": cond.target_bitrate_bpp,
                    "achieved_bpp": cond.achieved_bitrate_bpp,
                    "scores": {
                        m: {
                            "mean": s.mean,
                            "per_type": {vt.value: v for vt, v in s.per_type_mean.items()},
                            "per_view": {
                                f"{r},{c}": res.value
                                for (r, c), res in sorted(s.per_view.items())
                            },
                            "selected": {
                                vt.value: s.value(*coord)
                                for vt, coord in selected_views[cid].items()
                            },
                        }
                        for m, s in scores[cid][label].items()
                    },
                }
            payload["contents"][cid] = {
                "selected_views": {
                    vt.value: list(coord) for vt, coord in selected_views[cid].items()
                },
                "conditions": conditions,
            }
        (run_dir / "metrics.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    clock("metric-report", t)

    (run_dir / "timings.json").write_text(json.dumps(timings, indent=2, sort_keys=True) + "\n")
    click.echo(f"run directory: {run_dir}")
    click.echo(
        f"conditions: {sum(len(b['decoded']) for b in per_content.values())}  "
        f"triplets: {len(test_triplets)} (+{len(training)} training)  "
        f"sessions: {len(sessions)}"
    )


def _bench_from_artifacts(scales_payload, metrics_payload, groups=None, metric_names=None, seed=0):
    """Shared by analyze and bench: refit curves from saved artifacts."""
    wanted_metrics = list(metric_names) if metric_names else list(metrics_payload["metrics"])
    bad = [m for m in wanted_metrics if m not in metrics_payload["metrics"]]
    if bad:
        raise ConfigError(f"metrics {bad} absent from the metrics artifact")
    group_items = scales_payload["groups"]
    if groups:
        missing = [g for g in groups if g not in group_items]
        if missing:
            raise ConfigError(f"unknown groups {missing}; have {sorted(group_items)}")
        group_items = {g: group_items[g] for g in groups}

    benchmarks = []
    bitrates = {}
    for gkey, scale in sorted(group_items.items()):
        cid, vtype = scale["content_id"], scale["view_type"]
        conditions = metrics_payload["contents"][cid]["conditions"]
        subjective = {}
        for cond, q, lo, hi in zip(
            scale["conditions"], scale["score"], scale["ci_low"], scale["ci_high"]
        ):
            if cond == REFERENCE_LABEL:
                continue
            subjective[cond] = (q, lo, hi)
            if cond in conditions:
                bitrates[cond] = conditions[cond]["achieved_bpp"]
        for m in wanted_metrics:
            objective = {}
            for cond in subjective:
                rec = conditions.get(cond)
                if rec is None:
                    raise KeyError(f"metrics artifact has no condition {cond!r} for {cid}")
                objective[cond] = rec["scores"][m]["selected"][vtype]
            benchmarks.append(benchmark_group(gkey, m, objective, subjective, seed=seed))
    return benchmarks, bitrates


@main.command()
@click.option("--run-dir", "run_dir", required=True, type=click.Path())
@click.option("--responses", "responses_path", required=True, type=click.Path())
@click.option("--out", "out_name", default="analysis", help="Subdirectory for reports.")
def analyze(run_dir, responses_path, out_name):
    """Screen, scale, and benchmark an exported response set."""
    run_dir = Path(run_dir)
    cfg_path = run_dir / "config.resolved.json"
    if not cfg_path.exists():
        raise ConfigError(f"{cfg_path} not found; not a prepare run directory")
    an = json.loads(cfg_path.read_text())["analyze"]

    with _stage("load", run_dir / "manifest.json"):
        triplets, sessions, meta = read_study_manifest(run_dir / "manifest.json")
        training_ids = set(meta.get("training", []))
        test_triplets = [t for t in triplets if t.id not in training_ids]
        responses = [
            r for r in read_responses(responses_path) if r.triplet_id not in training_ids
        ]
    if not responses:
        raise StageError("load", responses_path, "empty response set")

    out_dir = run_dir / out_name
    out_dir.mkdir(parents=True, exist_ok=True)

    with _stage("screening", out_dir / "screening.json"):
        report = validate_responses(
            sessions, responses, test_triplets, threshold=an["attention_threshold"]
        )
        kept = [r for r in responses if report.passed(r.observer_id)]
        observers = {r.observer_id for r in kept}
        outliers = screen_outliers(kept, test_triplets, prior=an["prior"]) if len(observers) >= 3 else []
        kept = [r for r in kept if r.observer_id not in set(outliers)]
        (out_dir / "screening.json").write_text(
            json.dumps(
                {
                    "attention_threshold": an["attention_threshold"],
                    "attention_per_observer": dict(sorted(report.per_observer.items())),
                    "attention_flagged": list(report.flagged),
                    "outliers_excluded": list(outliers),
                    "responses_in": len(responses),
                    "responses_kept": len(kept),
                },
                indent=2,
                sort_keys=True,
            )
            + "\n"
        )
    if not kept:
        raise StageError("screening", out_dir / "screening.json", "all observers excluded")

    with _stage("scaling", out_dir / "scales.json"):
        groups = groups_present(test_triplets)
        scaled = {}
        for group in groups:
            in_group = {t.id for t in test_triplets if group_of(t) == group}
            group_responses = [r for r in kept if r.triplet_id in in_group]
            matrix = build_matrix(group_responses, test_triplets, group)
            raw = thurstone_case_v(matrix, prior=an["prior"])
            cis = bootstrap_ci(
                kept,
                test_triplets,
                group,
                b=an["bootstrap"],
                level=an["level"],
                seed=an["seed"],
                prior=an["prior"],
            )
            scale = finalize_scale(matrix.conditions, raw, cis, orientation="quality")
            scaled[f"{group[0]}|{group[1]}"] = {
                "content_id": group[0],
                "view_type": group[1],
                "raw": [float(v) for v in raw],
                "matrix": matrix.wins.tolist(),
                **scale.as_dict(),
            }
        scales_payload = {
            "schema": "lfstudy-scales-v1",
            "bootstrap": an["bootstrap"],
            "level": an["level"],
            "prior": an["prior"],
            "seed": an["seed"],
            "groups": scaled,
        }
        (out_dir / "scales.json").write_text(
            json.dumps(scales_payload, indent=2, sort_keys=True) + "\n"
        )

    with _stage("bench", out_dir / "bench"):
        metrics_payload = json.loads((run_dir / "metrics.json").read_text())
        benchmarks, bitrates = _bench_from_artifacts(
            scales_payload, metrics_payload, seed=an["seed"]
        )
        emit_report(benchmarks, out_dir / "bench", bitrates)

    click.echo(f"analysis written to {out_dir}")
    click.echo(
        f"groups: {len(scaled)}  observers kept: {len({r.observer_id for r in kept})}  "
        f"attention-flagged: {len(report.flagged)}  outliers: {len(outliers)}"
    )


@main.command("metrics")
@click.option("--reference", "reference_dir", required=True, type=click.Path())
@click.option("--test", "test_dir", required=True, type=click.Path())
@click.option("--metric", "metric_names", multiple=True, help="Repeatable; default all five.")
@click.option("--ms-ssim-scales", type=int, default=None, help="Truncate the SSIM pyramid.")
@click.option("--output", "-o", "output_path", type=click.Path(), default=None)
def metrics_command(reference_dir, test_dir, metric_names, ms_ssim_scales, output_path):
    """Score a decoded light field directory against its reference."""
    names = list(metric_names) or list(_METRIC_NAMES)
    bad = [m for m in names if m not in _METRIC_NAMES]
    if bad:
        raise ConfigError(f"unknown metrics {bad}; choose from {list(_METRIC_NAMES)}")
    with _stage("metrics", test_dir):
        metric_cfg = load_metric_config(ms_ssim_scales=ms_ssim_scales)
        ref = load_light_field(reference_dir)
        test = load_light_field(test_dir)
        payload = {}
        for m in names:
            s = score_light_field(ref, test, m, metric_cfg)
            payload[m] = {
                "mean": s.mean,
                "per_type": {vt.value: v for vt, v in s.per_type_mean.items()},
                "per_view": {f"{r},{c}": res.value for (r, c), res in sorted(s.per_view.items())},
            }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if output_path:
        Path(output_path).write_text(text + "\n")
        click.echo(f"wrote {output_path}")
    else:
        click.echo(text)


@main.command()
@click.option("--scales", "scales_path", required=True, type=click.Path())
@click.option("--metrics", "metrics_path", required=True, type=click.Path())
@click.option("--groups", default=None, help="Comma-separated group keys; default all.")
@click.option("--metric", "metric_names", multiple=True, help="Repeatable; default all computed.")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=0)
def bench(scales_path, metrics_path, groups, metric_names, out_dir, seed):
    """Refit logistic curves and correlation statistics from saved artifacts."""
    with _stage("bench", out_dir):
        scales_payload = json.loads(Path(scales_path).read_text())
        if scales_payload.get("schema") != "lfstudy-scales-v1":
            raise ConfigError(f"{scales_path} is not a scales artifact")
        metrics_payload = json.loads(Path(metrics_path).read_text())
        if metrics_payload.get("schema") != "lfstudy-metrics-v1":
            raise ConfigError(f"{metrics_path} is not a metrics artifact")
        wanted = [g.strip() for g in groups.split(",")] if groups else None
        benchmarks, bitrates = _bench_from_artifacts(
            scales_payload, metrics_payload, groups=wanted, metric_names=metric_names, seed=seed
        )
        emit_report(benchmarks, out_dir, bitrates)
    click.echo(f"bench report written to {out_dir}")


@main.command()
@click.option("--root", default=None, help=f"Data root (default ${DATA_ENV} or ./lfstudy-data).")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(root, host, port):
    """Run the study HTTP service."""
    import uvicorn

    uvicorn.run(create_app(root=root), host=host, port=port)


if __name__ == "__main__":
    main()
