"""On-disk project store with per-project locking.

Each project lives in its own directory (tracking bundle, scripts,
exports) and survives restarts; compiled schedules are cached in memory
keyed by the script content digest, so edits naturally evict stale
entries. Mutations on one project are serialized by its lock; distinct
projects never contend.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..design_space import ClipAnnotation
from ..jsonio import digest, read_json, write_json
from ..pipeline import ProjectBundle, build_bundle
from ..render import composite_sequence
from ..scheduler import AugmentationScript, RenderSchedule, compile_schedule


class ProjectNotFound(KeyError):
    pass


class ScriptNotFound(KeyError):
    pass


@dataclass
class ProjectState:
    project_id: str
    bundle: ProjectBundle
    scripts: dict[str, AugmentationScript] = field(default_factory=dict)
    compiled: dict[tuple[str, str], RenderSchedule] = field(default_factory=dict)
    lock: threading.RLock = field(default_factory=threading.RLock)


class ProjectStore:
    def __init__(self, data_dir: str | Path):
        self.root = Path(data_dir)
        (self.root / "projects").mkdir(parents=True, exist_ok=True)
        self._states: dict[str, ProjectState] = {}
        self._registry_lock = threading.Lock()

    # -- paths ---------------------------------------------------------

    def _project_dir(self, pid: str) -> Path:
        return self.root / "projects" / pid

    def _script_path(self, pid: str, sid: str) -> Path:
        return self._project_dir(pid) / "scripts" / f"{sid}.json"

    # -- lifecycle -----------------------------------------------------

    def create_project(self, tracking_doc: dict, tactics_doc: Optional[dict] = None,
                       corpus_doc: Optional[dict] = None) -> ProjectState:
        corpus = None
        if corpus_doc is not None:
            corpus = [ClipAnnotation.from_dict(c) for c in corpus_doc["clips"]]
            for clip in corpus:
                clip.validate()
        bundle = build_bundle(tracking_doc, tactics_doc=tactics_doc, corpus=corpus)
        pid = uuid.uuid4().hex[:12]
        pdir = self._project_dir(pid)
        (pdir / "scripts").mkdir(parents=True)
        write_json(pdir / "tracking.json", tracking_doc)
        if tactics_doc is not None:
            write_json(pdir / "tactics.json", tactics_doc)
        if corpus_doc is not None:
            write_json(pdir / "corpus.json", corpus_doc)
        write_json(pdir / "project.json", {"project_id": pid})
        state = ProjectState(project_id=pid, bundle=bundle)
        with self._registry_lock:
            self._states[pid] = state
        return state

    def project_ids(self) -> list[str]:
        ids = {p.name for p in (self.root / "projects").iterdir() if p.is_dir()}
        with self._registry_lock:
            ids.update(self._states)
        return sorted(ids)

    def get(self, pid: str) -> ProjectState:
        with self._registry_lock:
            state = self._states.get(pid)
        if state is not None:
            return state
        pdir = self._project_dir(pid)
        if not (pdir / "project.json").exists():
            raise ProjectNotFound(pid)
        tracking_doc = read_json(pdir / "tracking.json")
        tactics_doc = read_json(pdir / "tactics.json") if (pdir / "tactics.json").exists() else None
        corpus_doc = read_json(pdir / "corpus.json") if (pdir / "corpus.json").exists() else None
        corpus = None
        if corpus_doc is not None:
            corpus = [ClipAnnotation.from_dict(c) for c in corpus_doc["clips"]]
        bundle = build_bundle(tracking_doc, tactics_doc=tactics_doc, corpus=corpus)
        state = ProjectState(project_id=pid, bundle=bundle)
        for spath in sorted((pdir / "scripts").glob("*.json")):
            state.scripts[spath.stem] = AugmentationScript.from_dict(read_json(spath))
        with self._registry_lock:
            return self._states.setdefault(pid, state)

    # -- scripts -------------------------------------------------------

    def new_script_id(self, state: ProjectState) -> str:
        with state.lock:
            n = 0
            while f"s{n:02d}" in state.scripts:
                n += 1
            return f"s{n:02d}"

    def get_script(self, pid: str, sid: str) -> AugmentationScript:
        state = self.get(pid)
        with state.lock:
            if sid not in state.scripts:
                raise ScriptNotFound(sid)
            return state.scripts[sid]

    def put_script(self, pid: str, sid: str, script: AugmentationScript) -> None:
        state = self.get(pid)
        script.validate()
        with state.lock:
            state.scripts[sid] = script
            # Drop stale compiled schedules for this script.
            for key in [k for k in state.compiled if k[0] == sid]:
                del state.compiled[key]
            write_json(self._script_path(pid, sid), script.to_dict())

    def script_digest(self, script: AugmentationScript) -> str:
        return digest(script.to_dict())

    # -- compilation & export ------------------------------------------

    def schedule_for(self, pid: str, sid: str) -> tuple[RenderSchedule, str]:
        """Compiled schedule (lazily built, digest-cached)."""
        state = self.get(pid)
        with state.lock:
            if sid not in state.scripts:
                raise ScriptNotFound(sid)
            script = state.scripts[sid]
            dig = self.script_digest(script)
            key = (sid, dig)
            if key not in state.compiled:
                state.compiled[key] = compile_schedule(script, state.bundle.dataset.video)
            return state.compiled[key], dig


    def export(self, pid: str, sid: str) -> dict:
        state = self.get(pid)
        with state.lock:
            schedule, dig = self.schedule_for(pid, sid)
            script = state.scripts[sid]
            out_dir = self._project_dir(pid) / "exports" / sid
            manifest = composite_sequence(schedule, state.bundle.pyramid, script, out_dir)
            return {
                "bundle_dir": str(out_dir),
                "manifest_path": str(out_dir / "manifest.json"),
                "total_frames": manifest["total_frames"],
                "digest": dig,
            }
