"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class CreateProjectRequest(BaseModel):
    tracking: dict = Field(..., description="Tracking bundle document")
    tactics: Optional[dict] = Field(None, description="External tactic facts document")
    corpus: Optional[dict] = Field(None, description="Corpus annotation override")


class ProjectSummary(BaseModel):
    project_id: str
    frame_count: int
    fps: float
    duration_s: float
    canvas: list[int]
    turn_count: int
    event_count: int
    fact_count: int
    node_count: int


class EventGlyph(BaseModel):
    event_id: str
    kind: str
    subject: str
    span: list[int]
    hit_frame: Optional[int] = None
    color_class: str  # "ball" | "player"


class TurnInfo(BaseModel):
    event_id: str
    index: int
    span: list[int]


class TimelineResponse(BaseModel):
    project_id: str
    frame_count: int
    turns: list[TurnInfo]
    events: list[EventGlyph]
    suggested: list[str]


class BrushResponse(BaseModel):
    start: int
    end: int
    node_count: int
    turns: list[TurnInfo]
    events: list[EventGlyph]


class AttributesResponse(BaseModel):
    subject: str
    frame: int
    level: str
    attributes: list[str]


class CreateScriptRequest(BaseModel):
    clip: list[int]
    order: str = "linear"
    zigzag: Optional[dict] = None
    timefork: Optional[dict] = None


class SelectionRequest(BaseModel):
    script_id: Optional[str] = None
    subject: str
    frame: int
    attributes: list[str]
    purpose: str = "education"
    order: Optional[str] = None
    clip: Optional[list[int]] = None


class RecommendationInfo(BaseModel):
    attribute: str
    visual: str
    source: str
    probability: Optional[float] = None


class ScriptResponse(BaseModel):
    project_id: str
    script_id: str
    script: dict
    schedule_digest: str
    recommendations: list[RecommendationInfo] = []


class ScriptPatch(BaseModel):
    order: Optional[str] = None
    clip: Optional[list[int]] = None
    zigzag: Optional[dict] = None
    timefork: Optional[dict] = None


class MappingPatch(BaseModel):
    style: Optional[dict] = None
    hold_frames: Optional[int] = None
    visual: Optional[str] = None
    pass_index: Optional[int] = Field(None, alias="pass")

    model_config = {"populate_by_name": True}


class ScheduleFrameInfo(BaseModel):
    i: int
    kind: str
    src: int


class ScheduleResponse(BaseModel):
    script_id: str
    order: str
    clip: list[int]
    total_frames: int
    digest: str
    frames: list[ScheduleFrameInfo]


class ExportResponse(BaseModel):
    project_id: str
    script_id: str
    bundle_dir: str
    manifest_path: str
    total_frames: int
