"""Study execution backend.

A study lives in one directory: manifest.json (triplets, sessions, training
order, flicker timing), an assets/ tree of pre-rendered 8-bit PNG stimuli,
and events.jsonl, an append-only log of everything that happened. Every
event is flushed and fsynced before the caller sees an acknowledgement, so
a crash at any point loses nothing and duplicates nothing; replaying the log
reconstructs the exact observer state.

The HTTP layer is a thin FastAPI wrapper over StudyStore.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import time
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from .lightfield import View
from .study import (
    Choice,
    SessionPlan,
    StudyError,
    Triplet,
    parse_study_manifest,
)

DATA_ENV = "LFSTUDY_DATA"
DEFAULT_FLICKER_MS = 500
DEFAULT_BREAK_S = 60

PHASES = ("screening", "training", "testing", "break", "done")


class ServiceError(Exception):
    """Carries an HTTP-ish status so the API layer can map it directly."""

    def __init__(self, message: str, status: int = 400):
        super().__init__(message)
        self.status = status


def _not_found(msg: str) -> ServiceError:
    return ServiceError(msg, status=404)


def _conflict(msg: str) -> ServiceError:
    return ServiceError(msg, status=409)


def render_asset_png(view: View, path) -> None:
    """8-bit PNG rendering of a stimulus, rounding half to even."""
    codes = np.rint(view.data * 255.0).astype(np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), codes[:, :, ::-1]):
        raise ServiceError(f"could not write asset {path}")


def canonical_manifest_bytes(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()


def study_id_for(payload: dict) -> str:
    return hashlib.sha256(canonical_manifest_bytes(payload)).hexdigest()[:12]


@dataclass
class ObserverState:
    observer_id: str
    registered: bool = False
    consent: bool = False
    acuity_ok: bool = False
    color_vision_ok: bool = False
    phase: str = "screening"
    training_cursor: int = 0
    cursor: int = 0
    pending: str | None = None  # triplet id served but not yet answered
    break_issued: bool = False
    answered: list = field(default_factory=list)


class _Study:
    def __init__(self, study_id: str, directory: Path):
        self.study_id = study_id
        self.directory = directory
        self.events_path = directory / "events.jsonl"
        payload = json.loads((directory / "manifest.json").read_text())
        triplets, sessions, meta = parse_study_manifest(payload)
        self.triplets: dict[str, Triplet] = {t.id: t for t in triplets}
        self.sessions: dict[str, SessionPlan] = {s.observer_id: s for s in sessions}
        self.training_ids: list[str] = list(meta.get("training", []))
        self.flicker_ms: int = int(meta.get("flicker_ms", DEFAULT_FLICKER_MS))
        self.break_s: int = int(meta.get("break_s", DEFAULT_BREAK_S))
        self.observers: dict[str, ObserverState] = {
            oid: ObserverState(observer_id=oid) for oid in self.sessions
        }
        self.responses: list[dict] = []  # submission order, all phases

    # -- event application (shared by live calls and replay) ----------------

    def apply(self, event: dict) -> None:
        kind = event["type"]
        if kind == "observer_registered":
            obs = self._observer(event["observer_id"])
            obs.registered = True
            obs.consent = bool(event["consent"])
            obs.acuity_ok = bool(event["acuity_ok"])
            obs.color_vision_ok = bool(event["color_vision_ok"])
            if obs.consent and obs.acuity_ok and obs.color_vision_ok:
                obs.phase = "training" if self.training_ids else "testing"
        elif kind == "served":
            obs = self._observer(event["observer_id"])
            obs.pending = event["triplet_id"]
            if obs.phase == "break":
                obs.phase = "testing"
        elif kind == "break_issued":
            obs = self._observer(event["observer_id"])
            obs.break_issued = True
            obs.phase = "break"
        elif kind == "response":
            obs = self._observer(event["observer_id"])
            obs.pending = None
            obs.answered.append(event["triplet_id"])
            self.responses.append(event)
            if event["phase"] == "training":
                obs.training_cursor += 1
                if obs.training_cursor >= len(self.training_ids):
                    obs.phase = "testing"
            else:
                obs.cursor += 1
                if obs.cursor >= len(self._entries(obs.observer_id)):
                    obs.phase = "done"
        else:
            raise ServiceError(f"unknown event type {kind!r} in log")

    def _observer(self, oid: str) -> ObserverState:
        if oid not in self.observers:
            raise _not_found(f"unknown observer {oid!r}")
        return self.observers[oid]

    def _entries(self, oid: str):
        return self.sessions[oid].entries


class StudyStore:
    """Owns the data root; one subdirectory per study."""

    def __init__(self, root=None):
        root = root or os.environ.get(DATA_ENV, "./lfstudy-data")
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._studies: dict[str, _Study] = {}

    # -- lifecycle -----------------------------------------------------------

    def create_study(self, manifest: dict, assets_dir) -> str:
        if not manifest.get("triplets"):
            raise ServiceError("manifest has no triplets")
        if not manifest.get("sessions"):
            raise ServiceError("manifest has no sessions")
        assets_dir = Path(assets_dir)
        handles = set()
        for t in manifest["triplets"]:
            for side in ("reference", "left", "right"):
                handles.add(t[side]["image"])
        for h in sorted(handles):
            if not (assets_dir / h).is_file():
                raise ServiceError(f"asset {h!r} does not resolve under {assets_dir}")

        study_id = study_id_for(manifest)
        directory = self.root / study_id
        if directory.exists():
            self.open_study(study_id)  # idempotent create
            return study_id

        staging = self.root / f".{study_id}.tmp"
        if staging.exists():
            shutil.rmtree(staging)
        (staging / "assets").mkdir(parents=True)
        for h in sorted(handles):
            target = staging / "assets" / h
            target.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(assets_dir / h, target)
        (staging / "manifest.json").write_bytes(canonical_manifest_bytes(manifest))
        (staging / "events.jsonl").touch()
        os.replace(staging, directory)
        self.open_study(study_id)
        return study_id

    def open_study(self, study_id: str) -> _Study:
        if study_id in self._studies:
            return self._studies[study_id]
        directory = self.root / study_id
        if not (directory / "manifest.json").exists():
            raise _not_found(f"unknown study {study_id!r}")
        study = _Study(study_id, directory)
        # replay the log; an ack implies the full line plus newline was fsynced,
        # so a line that is torn or lacks its newline was never acknowledged
        raw = study.events_path.read_bytes()
        valid = 0
        for line in raw.splitlines(keepends=True):
            body = line.strip()
            if body:
                if not line.endswith(b"\n"):
                    break
                try:
                    event = json.loads(body)
                except json.JSONDecodeError:
                    break
                study.apply(event)
            valid += len(line)
        if valid < len(raw):
            # drop the torn tail so later appends cannot merge into garbage
            with open(study.events_path, "r+b") as fh:
                fh.truncate(valid)
        self._studies[study_id] = study
        return study

    def list_studies(self) -> list[str]:
        on_disk = {p.name for p in self.root.iterdir() if (p / "manifest.json").exists()}
        return sorted(on_disk | set(self._studies))

    # -- event plumbing --------------------------------------------------------

    def _append_event(self, study: _Study, event: dict) -> None:
        with open(study.events_path, "a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self._after_write_hook()

    @staticmethod
    def _after_write_hook() -> None:
        """Test seam for crash injection between durable write and apply/ack."""

    def _commit(self, study: _Study, event: dict) -> None:
        self._append_event(study, event)
        study.apply(event)

    # -- observer protocol ----------------------------------------------------

    def register_observer(
        self,
        study_id: str,
        observer_id: str,
        consent: bool,
        acuity_ok: bool,
        color_vision_ok: bool,
        age: int | None = None,
        sex: str | None = None,
    ) -> dict:
        study = self.open_study(study_id)
        obs = study._observer(observer_id)
        if obs.registered:
            raise _conflict(f"observer {observer_id!r} already registered")
        event = {
            "type": "observer_registered",
            "observer_id": observer_id,
            "consent": bool(consent),
            "acuity_ok": bool(acuity_ok),
            "color_vision_ok": bool(color_vision_ok),
            "age": age,
            "sex": sex,
            "ts": time.time(),
        }
        self._commit(study, event)
        return {"observer_id": observer_id, "phase": obs.phase}

    def _payload_for(self, study: _Study, obs: ObserverState, triplet_id: str, swapped: bool, phase: str) -> dict:
        t = study.triplets[triplet_id]
        left, right = (t.right, t.left) if swapped else (t.left, t.right)
        prefix = f"/assets/{study.study_id}/"
        total = len(study.training_ids) if phase == "training" else len(study._entries(obs.observer_id))
        index = obs.training_cursor if phase == "training" else obs.cursor
        return {
            "kind": "triplet",
            "triplet_id": triplet_id,
            "phase": phase,
            "index": index,
            "total": total,
            "reference": prefix + t.reference.image,
            "left": prefix + left.image,
            "right": prefix + right.image,
            "flicker_ms": study.flicker_ms,
            "swapped": swapped,
        }

    def _ensure_can_answer(self, obs: ObserverState) -> None:
        if not obs.registered or obs.phase == "screening":
            raise _conflict(
                f"observer {obs.observer_id!r} has not completed screening "
                "(consent and both vision checks are required)"
            )

    def next_item(self, study_id: str, observer_id: str) -> dict:
        study = self.open_study(study_id)
        obs = study._observer(observer_id)
        self._ensure_can_answer(obs)
        if obs.phase == "done":
            return {"kind": "done", "completion_code": self._completion_code(study_id, observer_id)}
        if obs.pending is not None:
            raise _conflict(
                f"previous response for triplet {obs.pending!r} has not been submitted"
            )

        if obs.phase == "training":
            tid = study.training_ids[obs.training_cursor]
            swapped = False
            phase = "training"
        else:
            entries = study._entries(observer_id)
            plan = study.sessions[observer_id]
            if (
                obs.cursor == plan.break_index
                and 0 < plan.break_index < len(entries)
                and not obs.break_issued
            ):
                self._commit(study, {"type": "break_issued", "observer_id": observer_id})
                return {"kind": "break", "min_duration_s": study.break_s}
            tid, swapped = entries[obs.cursor]
            phase = "testing"

        payload = self._payload_for(study, obs, tid, swapped, phase)
        self._commit(
            study,
            {
                "type": "served",
                "observer_id": observer_id,
                "triplet_id": tid,
                "swapped": swapped,
                "phase": phase,
            },
        )
        return payload

    def current_item(self, study_id: str, observer_id: str) -> dict:
        """Non-advancing view of where the observer stands (resume support)."""
        study = self.open_study(study_id)
        obs = study._observer(observer_id)
        status = {
            "observer_id": observer_id,
            "phase": obs.phase,
            "registered": obs.registered,
            "index": obs.cursor,
            "total": len(study._entries(observer_id)),
            "pending": None,
        }
        if obs.phase == "done":
            status["completion_code"] = self._completion_code(study_id, observer_id)
        if obs.pending is not None:
            phase = "training" if obs.phase == "training" else "testing"
            swapped = False
            if phase == "testing":
                entries = study._entries(observer_id)
                swapped = entries[obs.cursor][1]
            status["pending"] = self._payload_for(study, obs, obs.pending, swapped, phase)
        return status

    def submit_response(
        self,
        study_id: str,
        observer_id: str,
        triplet_id: str,
        choice: str,
        latency_ms: float = 0.0,
    ) -> dict:
        study = self.open_study(study_id)
        obs = study._observer(observer_id)
        self._ensure_can_answer(obs)
        try:
            choice = Choice(choice).value
        except ValueError:
            raise ServiceError(f"invalid choice token {choice!r}") from None
        if obs.pending is None:
            if obs.answered and obs.answered[-1] == triplet_id:
                raise _conflict(f"duplicate response for triplet {triplet_id!r}")
            raise _conflict(f"no triplet outstanding; {triplet_id!r} is stale or unknown")
        if triplet_id != obs.pending:
            raise _conflict(f"response for {triplet_id!r} but {obs.pending!r} is outstanding")

        if obs.phase == "training":
            phase, swapped = "training", False
        else:
            phase = "testing"
            swapped = study._entries(observer_id)[obs.cursor][1]
        event = {
            "type": "response",
            "observer_id": observer_id,
            "triplet_id": triplet_id,
            "choice": choice,
            "latency_ms": float(latency_ms),
            "presented_swapped": swapped,
            "phase": phase,
            "ts": time.time(),
        }
        self._commit(study, event)
        return {"status": "ok", "phase": obs.phase, "index": obs.cursor}

    def export_responses(self, study_id: str, include_training: bool = False) -> list[dict]:
        study = self.open_study(study_id)
        out = []
        for event in study.responses:
            if event["phase"] == "training" and not include_training:
                continue
            out.append(
                {
                    "observer_id": event["observer_id"],
                    "triplet_id": event["triplet_id"],
                    "choice": event["choice"],
                    "latency_ms": event["latency_ms"],
                    "presented_swapped": event["presented_swapped"],
                    "phase": event["phase"],
                }
            )
        return out

    def asset_path(self, study_id: str, handle: str) -> Path:
        study = self.open_study(study_id)
        base = (study.directory / "assets").resolve()
        target = (base / handle).resolve()
        if base not in target.parents and target != base:
            raise ServiceError(f"asset path {handle!r} escapes the study directory")
        if not target.is_file():
            raise _not_found(f"no such asset {handle!r}")
        return target

    @staticmethod
    def _completion_code(study_id: str, observer_id: str) -> str:
        return hashlib.sha256(f"{study_id}:{observer_id}".encode()).hexdigest()[:8]


# ---------------------------------------------------------------------------
# HTTP layer


def create_app(store: StudyStore | None = None, root=None):
    from fastapi import Body, FastAPI, HTTPException
    from fastapi.middleware.cors import CORSMiddleware
    from fastapi.responses import FileResponse, PlainTextResponse

    store = store or StudyStore(root)
    app = FastAPI(title="lfstudy service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.store = store

    def guard(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ServiceError as exc:
            raise HTTPException(status_code=exc.status, detail=str(exc)) from exc
        except StudyError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.post("/studies")
    def create_study(body: dict = Body(...)):
        manifest = body.get("manifest")
        if manifest is None and body.get("manifest_path"):
            manifest = json.loads(Path(body["manifest_path"]).read_text())
        if manifest is None:
            raise HTTPException(status_code=400, detail="manifest or manifest_path required")
        assets_dir = body.get("assets_dir")
        if not assets_dir:
            raise HTTPException(status_code=400, detail="assets_dir required")
        return {"study_id": guard(store.create_study, manifest, assets_dir)}

    @app.get("/studies/{study_id}")
    def study_summary(study_id: str):
        study = guard(store.open_study, study_id)
        return {
            "study_id": study_id,
            "triplets": len(study.triplets),
            "observers": {
                oid: {"phase": obs.phase, "index": obs.cursor, "total": len(study._entries(oid))}
                for oid, obs in sorted(study.observers.items())
            },
        }

    @app.post("/studies/{study_id}/observers/{observer_id}/register")
    def register(study_id: str, observer_id: str, body: dict = Body(...)):
        return guard(
            store.register_observer,
            study_id,
            observer_id,
            consent=body.get("consent", False),
            acuity_ok=body.get("acuity_ok", False),
            color_vision_ok=body.get("color_vision_ok", False),
            age=body.get("age"),
            sex=body.get("sex"),
        )

    @app.get("/studies/{study_id}/observers/{observer_id}/next")
    def next_item(study_id: str, observer_id: str):
        return guard(store.next_item, study_id, observer_id)

    @app.get("/studies/{study_id}/observers/{observer_id}/current")
    def current_item(study_id: str, observer_id: str):
        return guard(store.current_item, study_id, observer_id)

    @app.post("/studies/{study_id}/observers/{observer_id}/responses")
    def submit(study_id: str, observer_id: str, body: dict = Body(...)):
        return guard(
            store.submit_response,
            study_id,
            observer_id,
            triplet_id=body.get("triplet_id", ""),
            choice=body.get("choice", ""),
            latency_ms=body.get("latency_ms", 0.0),
        )

    @app.get("/studies/{study_id}/export")
    def export(study_id: str, include_training: bool = False):
        rows = guard(store.export_responses, study_id, include_training)
        text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)
        return PlainTextResponse(text, media_type="application/x-ndjson")

    @app.get("/assets/{study_id}/{handle:path}")
    def asset(study_id: str, handle: str):
        return FileResponse(guard(store.asset_path, study_id, handle))

    return app
