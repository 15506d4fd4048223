"""HTTP service exposing the authoring engine to the studio UI.

Per-project session state is server-side and survives restarts (see
`ProjectStore`). Responses are pure functions of project state: previews
and exports reuse the exact batch rendering path, so a preview frame is
byte-identical to the CLI-rendered frame for the same script.
"""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from ..design_space import DesignSpaceError, NarrativeOrder
from ..events import EventError, EventKind
from ..geometry import GeometryError
from ..jsonio import canonical_dumps
from ..pipeline import make_mappings, purpose_level
from ..pyramid import PyramidError, attributes_at, brush, suggest_insights
from ..recommend import RecommendError, default_order_for_level, recommend
from ..render import RenderError, realize_frame, render_frame
from ..scheduler import (
    AugmentationScript,
    ScheduleError,
    TimeForkSpec,
    UnsupportedOrderError,
    ZigZagSpec,
)
from ..tactics import TacticError
from ..tracking import TrackingError
from . import models
from .store import ProjectNotFound, ProjectStore, ScriptNotFound

VALIDATION_ERRORS = (TrackingError, EventError, TacticError, PyramidError,
                     ScheduleError, RenderError, RecommendError, DesignSpaceError,
                     GeometryError, ValueError)


def _glyph(event) -> models.EventGlyph:
    color = "ball" if event.kind in (EventKind.BOUNCE, EventKind.NET_HIT) else "player"
    return models.EventGlyph(
        event_id=event.event_id, kind=event.kind.value, subject=event.subject,
        span=[event.span[0], event.span[1]], hit_frame=event.hit_frame,
        color_class=color,
    )


def _turn_info(event) -> models.TurnInfo:
    return models.TurnInfo(event_id=event.event_id,
                           index=event.attributes.get("index", 0),
                           span=[event.span[0], event.span[1]])


def create_app(data_dir: str | Path = "./rallyvis-data",
               frontend_dir: Optional[str | Path] = None) -> FastAPI:
    app = FastAPI(
        title="rallyvis service",
        version="0.1.0",
        description="Authoring service for augmented table tennis videos.",
    )
    store = ProjectStore(data_dir)
    app.state.store = store

    @app.exception_handler(ProjectNotFound)
    async def _project_404(request: Request, exc: ProjectNotFound):
        return JSONResponse(status_code=404, content={"detail": f"unknown project: {exc.args[0]}"})

    @app.exception_handler(ScriptNotFound)
    async def _script_404(request: Request, exc: ScriptNotFound):
        return JSONResponse(status_code=404, content={"detail": f"unknown script: {exc.args[0]}"})

    @app.exception_handler(ValueError)
    async def _invalid(request: Request, exc: ValueError):
        # Covers every engine validation error (they subclass ValueError).
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(LookupError)
    async def _conflict(request: Request, exc: LookupError):
        if isinstance(exc, (ProjectNotFound, ScriptNotFound)):
            return JSONResponse(status_code=404, content={"detail": str(exc)})
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    def _summary(state) -> models.ProjectSummary:
        bundle = state.bundle
        meta = bundle.dataset.video
        return models.ProjectSummary(
            project_id=state.project_id,
            frame_count=meta.frame_count,
            fps=meta.fps,
            duration_s=meta.duration_s,
            canvas=[meta.width, meta.height],
            turn_count=len(bundle.pyramid.turns()),
            event_count=sum(1 for e in bundle.events if e.kind != EventKind.TURN),
            fact_count=len(bundle.facts),
            node_count=len(bundle.pyramid.nodes),
        )

    @app.post("/projects", status_code=201, response_model=models.ProjectSummary)
    def create_project(body: models.CreateProjectRequest) -> models.ProjectSummary:
        state = store.create_project(body.tracking, tactics_doc=body.tactics,
                                     corpus_doc=body.corpus)
        return _summary(state)

    @app.get("/projects")
    def list_projects() -> dict:
        return {"projects": store.project_ids()}

    @app.get("/projects/{pid}", response_model=models.ProjectSummary)
    def get_project(pid: str) -> models.ProjectSummary:
        return _summary(store.get(pid))

    @app.get("/projects/{pid}/timeline", response_model=models.TimelineResponse)
    def timeline(pid: str) -> models.TimelineResponse:
        state = store.get(pid)
        bundle = state.bundle
        events = sorted((e for e in bundle.events if e.kind != EventKind.TURN),
                        key=lambda e: (e.span[0], e.event_id))
        return models.TimelineResponse(
            project_id=pid,
            frame_count=bundle.dataset.video.frame_count,
            turns=[_turn_info(t) for t in bundle.pyramid.turns()],
            events=[_glyph(e) for e in events],
            suggested=suggest_insights(bundle.pyramid),
        )

    @app.get("/projects/{pid}/pyramid/brush", response_model=models.BrushResponse)
    def brush_pyramid(pid: str, start: int, end: int) -> models.BrushResponse:
        state = store.get(pid)
        sub = brush(state.bundle.pyramid, (start, end))
        kept_turns = sorted(
            (n.payload["event_id"] for n in sub.nodes.values() if n.payload.get("type") == "turn"))
        turn_events = [e for e in state.bundle.pyramid.turns() if e.event_id in kept_turns]
        kept_events = sorted(
            (n.payload["event_id"] for n in sub.nodes.values() if n.payload.get("type") == "event"))
        events = [e for e in state.bundle.events if e.event_id in set(kept_events)]
        return models.BrushResponse(
            start=start, end=end, node_count=len(sub.nodes),
            turns=[_turn_info(t) for t in turn_events],
            events=[_glyph(e) for e in sorted(events, key=lambda e: (e.span[0], e.event_id))],
        )

    @app.get("/projects/{pid}/attributes", response_model=models.AttributesResponse)
    def attributes(pid: str, subject: str, frame: int,
                   purpose: str = "education") -> models.AttributesResponse:
        state = store.get(pid)
        level = purpose_level(purpose)
        names = attributes_at(state.bundle.pyramid, subject, frame, level)
        return models.AttributesResponse(subject=subject, frame=frame,
                                         level=level.token, attributes=names)

    def _script_response(pid: str, sid: str,
                         recommendations: list | None = None) -> models.ScriptResponse:
        script = store.get_script(pid, sid)
        return models.ScriptResponse(
            project_id=pid, script_id=sid, script=script.to_dict(),
            schedule_digest=store.script_digest(script),
            recommendations=recommendations or [],
        )

    @app.post("/projects/{pid}/scripts", status_code=201, response_model=models.ScriptResponse)
    def create_script(pid: str, body: models.CreateScriptRequest) -> models.ScriptResponse:
        state = store.get(pid)
        order = NarrativeOrder.from_token(body.order)
        script = AugmentationScript(
            clip=(body.clip[0], body.clip[1]), order=order, mappings=[],
            zigzag=ZigZagSpec(**body.zigzag) if body.zigzag else None,
            timefork=TimeForkSpec(**body.timefork) if body.timefork else None,
        )
        sid = store.new_script_id(state)
        store.put_script(pid, sid, script)
        return _script_response(pid, sid)

    @app.get("/projects/{pid}/scripts/{sid}", response_model=models.ScriptResponse)
    def get_script(pid: str, sid: str) -> models.ScriptResponse:
        return _script_response(pid, sid)

    @app.put("/projects/{pid}/scripts/{sid}", response_model=models.ScriptResponse)
    def put_script(pid: str, sid: str, body: dict) -> models.ScriptResponse:
        """Import a complete script document (validated on ingest)."""
        store.get(pid)
        script = AugmentationScript.from_dict(body)
        store.put_script(pid, sid, script)
        return _script_response(pid, sid)

    @app.patch("/projects/{pid}/scripts/{sid}", response_model=models.ScriptResponse)
    def patch_script(pid: str, sid: str, body: models.ScriptPatch) -> models.ScriptResponse:
        script = store.get_script(pid, sid)
        if body.order is not None:
            script.order = NarrativeOrder.from_token(body.order)
        if body.clip is not None:
            script.clip = (body.clip[0], body.clip[1])
            # Retain only mappings still anchored inside the clip.
            script.mappings = [m for m in script.mappings
                               if script.clip[0] <= m.anchor <= script.clip[1]]
        if body.zigzag is not None:
            script.zigzag = ZigZagSpec(**body.zigzag)
        elif script.order != NarrativeOrder.ZIGZAG:
            script.zigzag = None
        if body.timefork is not None:
            script.timefork = TimeForkSpec(**body.timefork)
        elif script.order != NarrativeOrder.TIME_FORK:
            script.timefork = None
        store.put_script(pid, sid, script)
        return _script_response(pid, sid)

    @app.post("/projects/{pid}/selections", response_model=models.ScriptResponse)
    def add_selections(pid: str, body: models.SelectionRequest) -> models.ScriptResponse:
        state = store.get(pid)
        bundle = state.bundle
        level = purpose_level(body.purpose)
        with state.lock:
            if body.script_id is not None:
                script = store.get_script(pid, body.script_id)
                sid = body.script_id
            else:
                clip = tuple(body.clip) if body.clip else (0, bundle.dataset.video.frame_count - 1)
                order = (NarrativeOrder.from_token(body.order) if body.order
                         else default_order_for_level(bundle.stats, level))
                script = AugmentationScript(clip=clip, order=order, mappings=[])
                sid = store.new_script_id(state)
            if body.order is not None:
                script.order = NarrativeOrder.from_token(body.order)
            mappings = make_mappings(bundle, body.subject, body.frame, body.attributes,
                                     script.order, level, start_index=len(script.mappings))
            recommendations = [
                models.RecommendationInfo(
                    **recommend(bundle.stats, m.selection.attribute, script.order).to_dict())
                for m in mappings
            ]
            script.mappings.extend(mappings)
            store.put_script(pid, sid, script)
        return _script_response(pid, sid, recommendations)

    @app.patch("/projects/{pid}/scripts/{sid}/mappings/{mid}",
               response_model=models.ScriptResponse)
    def patch_mapping(pid: str, sid: str, mid: str, body: models.MappingPatch) -> models.ScriptResponse:
        script = store.get_script(pid, sid)
        mapping = script.mapping(mid)
        if body.style is not None:
            style = dict(mapping.style)
            style.update(body.style)
            from ..render import resolve_style
            probe = type(mapping)(mapping_id=mapping.mapping_id, selection=mapping.selection,
                                  visual=body.visual or mapping.visual, style=style,
                                  hold_frames=mapping.hold_frames)
            resolve_style(probe, 0)  # raises on invalid style values
            mapping.style = style
        if body.visual is not None:
            mapping.visual = body.visual
        if body.hold_frames is not None:
            if body.hold_frames < 0:
                raise ScheduleError("hold_frames must be >= 0")
            mapping.hold_frames = body.hold_frames
        if body.pass_index is not None:
            if body.pass_index not in (1, 2):
                raise ScheduleError("pass must be 1 or 2")
            mapping.pass_index = body.pass_index
        store.put_script(pid, sid, script)
        return _script_response(pid, sid)

    @app.get("/projects/{pid}/schedule/{sid}", response_model=models.ScheduleResponse)
    def get_schedule(pid: str, sid: str) -> models.ScheduleResponse:
        schedule, dig = store.schedule_for(pid, sid)
        return models.ScheduleResponse(
            script_id=sid, order=schedule.order.value,
            clip=[schedule.clip[0], schedule.clip[1]],
            total_frames=schedule.total_frames, digest=dig,
            frames=[models.ScheduleFrameInfo(i=i, kind=f.kind, src=f.src)
                    for i, f in enumerate(schedule.frames)],
        )

    @app.get("/projects/{pid}/preview/{sid}/{index}")
    def preview(pid: str, sid: str, index: int, request: Request) -> Response:
        state = store.get(pid)
        schedule, dig = store.schedule_for(pid, sid)
        if index < 0 or index >= schedule.total_frames:
            raise HTTPException(status_code=404,
                                detail=f"output index {index} out of range 0..{schedule.total_frames - 1}")
        script = store.get_script(pid, sid)
        overlay = realize_frame(schedule, state.bundle.pyramid, index, script=script)
        svg = render_frame(overlay).encode("utf-8")
        etag = '"' + hashlib.sha256(svg).hexdigest() + '"'
        if request.headers.get("if-none-match") == etag:
            return Response(status_code=304)
        return Response(
            content=svg, media_type="image/svg+xml",
            headers={
                "ETag": etag,
                "Cache-Control": "max-age=0, must-revalidate",
                "X-Source-Frame": str(schedule.frames[index].src),
                "X-Frame-Kind": schedule.frames[index].kind,
                "X-Schedule-Digest": dig,
            },
        )

    @app.post("/projects/{pid}/export/{sid}", response_model=models.ExportResponse)
    def export(pid: str, sid: str) -> models.ExportResponse:
        result = store.export(pid, sid)
        return models.ExportResponse(
            project_id=pid, script_id=sid,
            bundle_dir=result["bundle_dir"],
            manifest_path=result["manifest_path"],
            total_frames=result["total_frames"],
        )

    @app.get("/projects/{pid}/frames/{index}")
    def source_frame(pid: str, index: int) -> Response:
        state = store.get(pid)
        bundle = state.bundle
        if index < 0 or index >= bundle.dataset.video.frame_count:
            raise HTTPException(status_code=404, detail=f"frame {index} out of range")
        png = _synthetic_frame_png(bundle, index)
        return Response(content=png, media_type="image/png",
                        headers={"Cache-Control": "max-age=3600"})

    @app.get("/projects/{pid}/objects/{index}")
    def objects_at(pid: str, index: int) -> dict:
        """Hit-test targets for the studio: object bounding boxes at a frame."""
        state = store.get(pid)
        bundle = state.bundle
        if index < 0 or index >= bundle.dataset.video.frame_count:
            raise HTTPException(status_code=404, detail=f"frame {index} out of range")
        frame = bundle.dataset.frames[index]
        ball = None
        center = bundle.pyramid.track.centers[index]
        if center is not None:
            half = 22.0
            ball = {"center": [center[0], center[1]],
                    "bbox": [center[0] - half, center[1] - half, 2 * half, 2 * half]}
        return {
            "frame": index,
            "ball": ball,
            "players": [{"id": p.player_id, "bbox": list(p.bbox)} for p in frame.players],
            "table": {"quad": [list(c) for c in frame.table.quad],
                      "net_x": frame.table.net_x},
        }

    @app.get("/projects/{pid}/facts")
    def facts(pid: str) -> Response:
        state = store.get(pid)
        payload = {"facts": [f.to_dict() for f in state.bundle.facts]}
        return Response(content=canonical_dumps(payload), media_type="application/json")

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/studio", StaticFiles(directory=str(frontend_dir), html=True),
                  name="studio")

    return app


def _synthetic_frame_png(bundle, index: int) -> bytes:
    """Schematic source frame rendered from the detections (the service has
    tracking data, not decoded video)."""
    import io

    from PIL import Image, ImageDraw

    meta = bundle.dataset.video
    frame = bundle.dataset.frames[index]
    img = Image.new("RGB", (meta.width, meta.height), (38, 66, 54))
    draw = ImageDraw.Draw(img)
    draw.polygon([tuple(p) for p in frame.table.quad], fill=(20, 86, 160),
                 outline=(230, 230, 230))
    quad_ys = [p[1] for p in frame.table.quad]
    draw.line([(frame.table.net_x, min(quad_ys) - 26), (frame.table.net_x, max(quad_ys))],
              fill=(235, 235, 235), width=3)
    for player in frame.players:
        x, y, w, h = player.bbox
        color = (200, 60, 60) if player.player_id == "A" else (40, 40, 40)
        draw.rectangle([x, y, x + w, y + h], outline=color, width=4)
    if bundle.pyramid.track.centers[index] is not None:
        cx, cy = bundle.pyramid.track.centers[index]
        draw.ellipse([cx - 7, cy - 7, cx + 7, cy + 7], fill=(250, 250, 80))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()
