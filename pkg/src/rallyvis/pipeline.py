"""End-to-end assembly shared by the CLI and the HTTP service: tracking in,
events and tactic facts derived, pyramid built, recommendations applied,
schedules compiled, overlays rendered.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .design_space import (
    DEFAULT_REGISTRY,
    ClipAnnotation,
    DataLevel,
    NarrativeOrder,
    Registry,
)
from .events import DetectorParams, Event, detect_all
from .fixtures import make_corpus
from .pyramid import PURPOSE_LEVELS, Pyramid, attributes_at, build_pyramid
from .recommend import MappingStats, Recommendation, compile_stats, recommend
from .scheduler import (
    AugmentationScript,
    DataSelection,
    MappingSpec,
    RenderSchedule,
    compile_schedule,
    default_hold_frames,
)
from .tactics import (
    TacticFact,
    TacticRule,
    default_rules,
    derive_route_facts,
    import_tactics_doc,
    merge_facts,
    run_rules,
)
from .tracking import TrackingDataset, build_ball_track, parse_dataset


@dataclass
class ProjectBundle:
    """Everything derived from one tracking bundle."""

    dataset: TrackingDataset
    events: list[Event]
    facts: list[TacticFact]
    pyramid: Pyramid
    stats: MappingStats
    diagnostics: list = field(default_factory=list)
    import_report: Optional[dict] = None


def build_bundle(tracking_doc: dict,
                 tactics_doc: Optional[dict] = None,
                 corpus: Optional[list[ClipAnnotation]] = None,
                 params: DetectorParams = DetectorParams(),
                 ruleset: Optional[list[TacticRule]] = None,
                 registry: Registry = DEFAULT_REGISTRY) -> ProjectBundle:
    dataset = parse_dataset(tracking_doc)
    track = build_ball_track(dataset)
    events = detect_all(dataset, track, params)
    scaffold = build_pyramid(dataset, events, [], registry)
    rules = ruleset if ruleset is not None else default_rules()
    facts, diagnostics = run_rules(rules, scaffold)
    facts = facts + derive_route_facts(facts, scaffold)
    import_report = None
    if tactics_doc is not None:
        imported, report = import_tactics_doc(tactics_doc, scaffold)
        facts = merge_facts(facts, imported)
        import_report = {"imported": report.imported, "skipped": report.skipped}
    pyramid = build_pyramid(dataset, events, facts, registry)
    stats = compile_stats(corpus if corpus is not None else make_corpus())
    return ProjectBundle(dataset=dataset, events=events, facts=facts,
                         pyramid=pyramid, stats=stats, diagnostics=diagnostics,
                         import_report=import_report)


def purpose_level(purpose: str) -> DataLevel:
    if purpose in PURPOSE_LEVELS:
        return PURPOSE_LEVELS[purpose]
    return DataLevel.from_token(purpose)


def recommend_mappings(bundle: ProjectBundle, subject: str, frame: int,
                       attributes: list[str], order: NarrativeOrder,
                       level: DataLevel) -> list[Recommendation]:
    """Validate availability of each attribute at the frame and recommend a
    visual for it under the narrative order."""
    available = set(attributes_at(bundle.pyramid, subject, frame, level))
    out = []
    for attr in attributes:
        if attr not in available:
            raise LookupError(
                f"attribute {attr!r} not available for {subject!r} at frame {frame} "
                f"under level filter {level.token}"
            )
        out.append(recommend(bundle.stats, attr, order))
    return out


def selection_span(bundle: ProjectBundle, attribute: str, subject: str,
                   frame: int) -> tuple[int, int]:
    """Default source span for a selection: trajectory-like attributes span
    the surrounding turn; point-like data spans the anchor frame."""
    if attribute in ("ball_trajectory", "player_trajectory", "potential_routes"):
        for e in bundle.events:
            if e.kind.value == "turn" and e.span[0] <= frame <= e.span[1]:
                return e.span
        return (max(0, frame - 25), frame)
    return (frame, frame)


def make_mappings(bundle: ProjectBundle, subject: str, frame: int,
                  attributes: list[str], order: NarrativeOrder, level: DataLevel,
                  start_index: int = 0) -> list[MappingSpec]:
    recs = recommend_mappings(bundle, subject, frame, attributes, order, level)
    hold = default_hold_frames(bundle.dataset.video.fps)
    mappings = []
    for i, rec in enumerate(recs):
        mid = f"m{start_index + i:02d}"
        mappings.append(MappingSpec(
            mapping_id=mid,
            selection=DataSelection(
                selection_id=mid,
                attribute=rec.attribute,
                subject=subject,
                anchor_frame=frame,
                source_span=selection_span(bundle, rec.attribute, subject, frame),
            ),
            visual=rec.visual,
            hold_frames=hold,
        ))
    return mappings


def compile_script(bundle: ProjectBundle, script: AugmentationScript) -> RenderSchedule:
    return compile_schedule(script, bundle.dataset.video)
