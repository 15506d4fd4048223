"""Design-space vocabulary shared by every other module.

Closed, versioned registries for data attributes and visual kinds, the four
design dimensions (data category, data level, visual family, narrative
order), and the clip annotation record used by the corpus statistics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from pathlib import Path
from typing import Iterable

from .jsonio import canonical_dumps, read_json

REGISTRY_VERSION = 1


class DesignSpaceError(ValueError):
    pass


class DataCategory(str, Enum):
    TRACKING = "tracking"
    NON_TRACKING = "non_tracking"


class DataLevel(IntEnum):
    """Semantic level of a piece of data, ordered low to high."""

    IMAGE = 0
    OBJECT = 1
    EVENT = 2
    TACTIC = 3

    @property
    def token(self) -> str:
        return self.name.lower()

    @classmethod
    def from_token(cls, token: str) -> "DataLevel":
        try:
            return cls[token.upper()]
        except KeyError:
            raise DesignSpaceError(f"unknown data level: {token!r}") from None


class NarrativeOrder(str, Enum):
    """Temporal relation between data presentation and video chronology."""

    LINEAR = "linear"
    FLASH_FORWARD = "flash_forward"
    FLASH_BACK = "flash_back"
    TIME_FORK = "time_fork"
    ZIGZAG = "zigzag"
    GROUPED = "grouped"

    @classmethod
    def from_token(cls, token: str) -> "NarrativeOrder":
        try:
            return cls(token)
        except ValueError:
            raise DesignSpaceError(f"unknown narrative order: {token!r}") from None


#: Orders the scheduler can compile. Grouped (picture-in-picture) is part of
#: the vocabulary but is rejected with UnsupportedOrderError at compile time.
SCHEDULABLE_ORDERS = frozenset(
    {
        NarrativeOrder.LINEAR,
        NarrativeOrder.FLASH_FORWARD,
        NarrativeOrder.FLASH_BACK,
        NarrativeOrder.TIME_FORK,
        NarrativeOrder.ZIGZAG,
    }
)


class Subject(str, Enum):
    BALL = "ball"
    PLAYER = "player"
    TABLE = "table"
    RALLY = "rally"


class VisualFamily(str, Enum):
    GRAPHICAL_MARK = "graphical_mark"
    VIDEO_EFFECT = "video_effect"


@dataclass(frozen=True)
class DataAttributeKind:
    """One selectable data attribute (a row of the data registry)."""

    name: str
    level: DataLevel
    category: DataCategory
    subject: Subject

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "level": self.level.token,
            "category": self.category.value,
            "subject": self.subject.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DataAttributeKind":
        return cls(
            name=d["name"],
            level=DataLevel.from_token(d["level"]),
            category=DataCategory(d["category"]),
            subject=Subject(d["subject"]),
        )


@dataclass(frozen=True)
class VisualKind:
    name: str
    family: VisualFamily

    def to_dict(self) -> dict:
        return {"name": self.name, "family": self.family.value}

    @classmethod
    def from_dict(cls, d: dict) -> "VisualKind":
        return cls(name=d["name"], family=VisualFamily(d["family"]))


def _attr(name: str, level: DataLevel, subject: Subject,
          category: DataCategory = DataCategory.TRACKING) -> DataAttributeKind:
    return DataAttributeKind(name=name, level=level, category=category, subject=subject)


#: Default table tennis attribute registry. `player_name` is the only
#: non-tracking entry; everything else is captured from the footage.
DEFAULT_ATTRIBUTES: tuple[DataAttributeKind, ...] = (
    _attr("ball_position", DataLevel.OBJECT, Subject.BALL),
    _attr("ball_trajectory", DataLevel.OBJECT, Subject.BALL),
    _attr("ball_rotation_speed", DataLevel.OBJECT, Subject.BALL),
    _attr("ball_placement", DataLevel.OBJECT, Subject.BALL),
    _attr("player_position", DataLevel.OBJECT, Subject.PLAYER),
    _attr("player_trajectory", DataLevel.OBJECT, Subject.PLAYER),
    _attr("player_posture", DataLevel.OBJECT, Subject.PLAYER),
    _attr("stroke_technique", DataLevel.EVENT, Subject.PLAYER),
    _attr("potential_placements", DataLevel.TACTIC, Subject.BALL),
    _attr("potential_routes", DataLevel.TACTIC, Subject.BALL),
    _attr("stroke_effect", DataLevel.TACTIC, Subject.PLAYER),
    _attr("player_tactic", DataLevel.TACTIC, Subject.PLAYER),
    _attr("key_stroke", DataLevel.TACTIC, Subject.RALLY),
    _attr("player_name", DataLevel.OBJECT, Subject.PLAYER, DataCategory.NON_TRACKING),
)

MARK_NAMES = (
    "label", "dot", "polyline", "arrow", "region",
    "heatmap_region", "spotlight", "skeleton", "bounding_box",
)
EFFECT_NAMES = ("pause", "slow_motion", "repeat")

DEFAULT_VISUALS: tuple[VisualKind, ...] = tuple(
    VisualKind(n, VisualFamily.GRAPHICAL_MARK) for n in MARK_NAMES
) + tuple(VisualKind(n, VisualFamily.VIDEO_EFFECT) for n in EFFECT_NAMES)


class Registry:
    """Immutable lookup tables for attributes and visual kinds."""

    def __init__(self, attributes: Iterable[DataAttributeKind] = DEFAULT_ATTRIBUTES,
                 visuals: Iterable[VisualKind] = DEFAULT_VISUALS):
        self.attributes: dict[str, DataAttributeKind] = {}
        for a in attributes:
            if a.name in self.attributes:
                raise DesignSpaceError(f"duplicate attribute name: {a.name!r}")
            self.attributes[a.name] = a
        self.visuals: dict[str, VisualKind] = {}
        for v in visuals:
            if v.name in self.visuals:
                raise DesignSpaceError(f"duplicate visual name: {v.name!r}")
            self.visuals[v.name] = v

    def level_of(self, attribute_name: str) -> DataLevel:
        try:
            return self.attributes[attribute_name].level
        except KeyError:
            raise DesignSpaceError(f"unknown attribute: {attribute_name!r}") from None

    def attribute(self, name: str) -> DataAttributeKind:
        try:
            return self.attributes[name]
        except KeyError:
            raise DesignSpaceError(f"unknown attribute: {name!r}") from None

    def visual(self, name: str) -> VisualKind:
        try:
            return self.visuals[name]
        except KeyError:
            raise DesignSpaceError(f"unknown visual: {name!r}") from None

    @classmethod
    def from_file(cls, path: str | Path) -> "Registry":
        doc = read_json(path)
        if doc.get("schema_version") != REGISTRY_VERSION:
            raise DesignSpaceError(f"unsupported registry schema_version: {doc.get('schema_version')!r}")
        attrs = [DataAttributeKind.from_dict(a) for a in doc.get("attributes", [])]
        vis = [VisualKind.from_dict(v) for v in doc.get("visuals", [])]
        # A user file extends the built-in tables; built-in names keep their
        # canonical definitions.
        merged_attrs = {a.name: a for a in DEFAULT_ATTRIBUTES}
        merged_attrs.update({a.name: a for a in attrs if a.name not in merged_attrs})
        merged_vis = {v.name: v for v in DEFAULT_VISUALS}
        merged_vis.update({v.name: v for v in vis if v.name not in merged_vis})
        return cls(merged_attrs.values(), merged_vis.values())


DEFAULT_REGISTRY = Registry()

#: Canonical levels for well-known attribute names, used to flag level
#: mismatches in user-supplied registries.
_CANONICAL_LEVELS = {a.name: a.level for a in DEFAULT_ATTRIBUTES}


def validate_registry(attributes: Iterable[DataAttributeKind],
                      visuals: Iterable[VisualKind]) -> list[str]:
    """Validate registry tables; returns a list of violations (empty = ok)."""
    violations: list[str] = []
    seen: set[str] = set()
    for a in attributes:
        if a.name in seen:
            violations.append(f"duplicate name: {a.name}")
        seen.add(a.name)
        canonical = _CANONICAL_LEVELS.get(a.name)
        if canonical is not None and a.level != canonical:
            violations.append(
                f"level mismatch: {a.name} registered as {a.level.token}, "
                f"expected {canonical.token}"
            )
        if not isinstance(a.subject, Subject):
            violations.append(f"unknown subject for attribute: {a.name}")
    seen_v: set[str] = set()
    for v in visuals:
        if v.name in seen_v:
            violations.append(f"duplicate visual name: {v.name}")
        seen_v.add(v.name)
        if not isinstance(v.family, VisualFamily):
            violations.append(f"unknown family for visual: {v.name}")
    return violations


@dataclass
class ClipAnnotation:
    """One annotated corpus clip: its level, order, and visual mappings."""

    clip_id: str
    sport: str
    data_level: DataLevel
    narrative_order: NarrativeOrder
    mappings: list[tuple[str, str]] = field(default_factory=list)
    source: str = ""

    def validate(self, registry: Registry = DEFAULT_REGISTRY) -> None:
        if not self.mappings:
            raise DesignSpaceError(f"clip {self.clip_id}: mappings must be non-empty")
        max_level = DataLevel.IMAGE
        for attr, visual in self.mappings:
            kind = registry.attribute(attr)
            registry.visual(visual)
            max_level = max(max_level, kind.level)
        if self.data_level != max_level:
            raise DesignSpaceError(
                f"clip {self.clip_id}: data_level {self.data_level.token} does not "
                f"equal max mapped level {max_level.token}"
            )

    def to_dict(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "sport": self.sport,
            "data_level": self.data_level.token,
            "narrative_order": self.narrative_order.value,
            "mappings": [[a, v] for a, v in self.mappings],
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClipAnnotation":
        return cls(
            clip_id=d["clip_id"],
            sport=d["sport"],
            data_level=DataLevel.from_token(d["data_level"]),
            narrative_order=NarrativeOrder.from_token(d["narrative_order"]),
            mappings=[(a, v) for a, v in d["mappings"]],
            source=d.get("source", ""),
        )


CORPUS_VERSION = 1


def load_annotations(path: str | Path, registry: Registry = DEFAULT_REGISTRY) -> list[ClipAnnotation]:
    doc = read_json(path)
    if doc.get("schema_version") != CORPUS_VERSION:
        raise DesignSpaceError(f"unsupported corpus schema_version: {doc.get('schema_version')!r}")
    clips = [ClipAnnotation.from_dict(c) for c in doc["clips"]]
    for c in clips:
        c.validate(registry)
    return clips


def dump_annotations(clips: list[ClipAnnotation]) -> str:
    return canonical_dumps({"schema_version": CORPUS_VERSION, "clips": [c.to_dict() for c in clips]})
