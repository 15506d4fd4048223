"""Hierarchical data pyramid over a rally and its selection queries.

The tree runs rally -> turns -> events -> object attributes -> frames,
with tactic facts attached at the root. Node ids are content-derived so
rebuilding the same inputs yields the same tree. Frame leaves are shared
between object nodes (ids make sharing safe).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .design_space import (
    DEFAULT_REGISTRY,
    DataCategory,
    DataLevel,
    Registry,
    Subject,
)
from .events import Event, EventKind
from .geometry import TableGrid
from .jsonio import short_id
from .tactics import TacticFact, TacticKind
from .tracking import BallTrack, TrackingDataset, build_ball_track

#: Narrative purpose realized as a data-level filter.
PURPOSE_LEVELS = {
    "entertainment": DataLevel.OBJECT,
    "mixed": DataLevel.EVENT,
    "education": DataLevel.TACTIC,
}


class PyramidError(ValueError):
    pass


@dataclass
class PyramidNode:
    node_id: str
    level: DataLevel
    span: tuple[int, int]
    payload: dict
    children: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "level": self.level.token,
            "span": [self.span[0], self.span[1]],
            "payload": self.payload,
            "children": list(self.children),
        }


@dataclass
class Pyramid:
    root_id: str
    nodes: dict[str, PyramidNode]
    dataset: TrackingDataset
    track: BallTrack
    events: list[Event]
    facts: list[TacticFact]
    grid: TableGrid
    registry: Registry = field(default_factory=lambda: DEFAULT_REGISTRY)

    @property
    def root(self) -> PyramidNode:
        return self.nodes[self.root_id]

    def event(self, event_id: str) -> Optional[Event]:
        for e in self.events:
            if e.event_id == event_id:
                return e
        return None

    def turns(self) -> list[Event]:
        return [e for e in self.events if e.kind == EventKind.TURN]

    def to_dict(self) -> dict:
        return {
            "root_id": self.root_id,
            "nodes": {nid: n.to_dict() for nid, n in sorted(self.nodes.items())},
            "events": [e.to_dict() for e in self.events],
            "facts": [f.to_dict() for f in self.facts],
        }


def _node_id(*parts) -> str:
    return short_id("pyramid", *parts)


def _frame_node(nodes: dict[str, PyramidNode], index: int) -> str:
    nid = _node_id("frame", index)
    if nid not in nodes:
        nodes[nid] = PyramidNode(
            node_id=nid, level=DataLevel.IMAGE, span=(index, index),
            payload={"type": "frame", "frame": index},
        )
    return nid


def _object_attrs(registry: Registry, subject: Subject) -> list[str]:
    return sorted(
        a.name for a in registry.attributes.values()
        if a.subject == subject and a.level == DataLevel.OBJECT
    )


def _object_node(nodes: dict[str, PyramidNode], registry: Registry,
                 subject_token: str, span: tuple[int, int]) -> str:
    subject = Subject.PLAYER if subject_token in ("A", "B") else Subject(subject_token)
    nid = _node_id("object", subject_token, span[0], span[1])
    if nid not in nodes:
        node = PyramidNode(
            node_id=nid, level=DataLevel.OBJECT, span=span,
            payload={"type": "object", "subject": subject_token,
                     "attributes": _object_attrs(registry, subject)},
        )
        node.children = [_frame_node(nodes, i) for i in range(span[0], span[1] + 1)]
        nodes[nid] = node
    return nid


def build_pyramid(dataset: TrackingDataset, events: list[Event],
                  facts: list[TacticFact],
                  registry: Registry = DEFAULT_REGISTRY) -> Pyramid:
    """Assemble the pyramid bottom-up from validated inputs."""
    n = len(dataset.frames)
    last = n - 1
    for e in events:
        if e.span[0] < 0 or e.span[1] > last or e.span[0] > e.span[1]:
            raise PyramidError(f"event {e.event_id} span {e.span} outside clip [0, {last}]")
    event_ids = {e.event_id for e in events}
    for f in facts:
        if f.anchor_event not in event_ids:
            raise PyramidError(f"fact {f.fact_id} anchors unknown event {f.anchor_event!r}")

    track = build_ball_track(dataset)
    grid = TableGrid(dataset.frames[0].table.quad, dataset.frames[0].table.net_x)
    nodes: dict[str, PyramidNode] = {}
    root = PyramidNode(
        node_id=_node_id("rally", 0, last), level=DataLevel.TACTIC,
        span=(0, last), payload={"type": "rally"},
    )
    nodes[root.node_id] = root

    events_by_id = {e.event_id: e for e in events}
    turns = sorted((e for e in events if e.kind == EventKind.TURN), key=lambda e: e.span[0])
    others = sorted((e for e in events if e.kind != EventKind.TURN),
                    key=lambda e: (e.span[0], e.event_id))

    def event_node(e: Event, clip: tuple[int, int]) -> str:
        span = (max(e.span[0], clip[0]), min(e.span[1], clip[1]))
        nid = _node_id("event", e.event_id)
        node = PyramidNode(
            node_id=nid, level=DataLevel.EVENT, span=span,
            payload={"type": "event", "event_id": e.event_id, "kind": e.kind.value},
        )
        subjects = [e.subject] if e.subject in ("A", "B") else []
        subjects.append("ball")
        for s in subjects:
            node.children.append(_object_node(nodes, registry, s, span))
        nodes[nid] = node
        return nid

    placed: set[str] = set()
    for turn in turns:
        tid = _node_id("turn", turn.event_id)
        tnode = PyramidNode(
            node_id=tid, level=DataLevel.EVENT, span=turn.span,
            payload={"type": "turn", "event_id": turn.event_id,
                     "index": turn.attributes.get("index", 0)},
        )
        for e in others:
            if turn.span[0] <= e.span[0] <= turn.span[1]:
                tnode.children.append(event_node(e, turn.span))
                placed.add(e.event_id)
        nodes[tid] = tnode
        root.children.append(tid)

    for e in others:
        if e.event_id not in placed:
            root.children.append(event_node(e, (0, last)))

    for fact in sorted(facts, key=lambda f: (f.kind.value, f.anchor_event, f.fact_id)):
        anchor = events_by_id[fact.anchor_event]
        fid = _node_id("tactic", fact.fact_id)
        nodes[fid] = PyramidNode(
            node_id=fid, level=DataLevel.TACTIC, span=anchor.span,
            payload={"type": "tactic", "fact_id": fact.fact_id, "kind": fact.kind.value},
        )
        root.children.append(fid)

    if not turns and not others:
        # Degenerate rally: expose per-frame object coverage directly.
        for i in range(n):
            subjects = ["A", "B"]
            if track.centers[i] is not None:
                subjects.append("ball")
            for s in sorted(subjects):
                root.children.append(_object_node(nodes, registry, s, (i, i)))

    return Pyramid(root_id=root.node_id, nodes=nodes, dataset=dataset, track=track,
                   events=events, facts=facts, grid=grid, registry=registry)


def brush(pyramid: Pyramid, interval: tuple[int, int]) -> Pyramid:
    """Minimal subtree of nodes whose span intersects the interval."""
    a, b = interval
    last = len(pyramid.dataset.frames) - 1
    if a > b:
        raise PyramidError(f"empty brush interval: {interval}")
    if a < 0 or b > last:
        raise PyramidError(f"brush interval {interval} outside clip [0, {last}]")

    def intersects(span: tuple[int, int]) -> bool:
        return span[0] <= b and span[1] >= a

    kept: dict[str, PyramidNode] = {}

    def visit(nid: str) -> Optional[str]:
        node = pyramid.nodes[nid]
        if not intersects(node.span):
            return None
        if nid in kept:
            return nid
        copy = PyramidNode(node_id=node.node_id, level=node.level, span=node.span,
                           payload=node.payload, children=[])
        kept[nid] = copy
        copy.children = [c for c in (visit(ch) for ch in node.children) if c is not None]
        return nid

    visit(pyramid.root_id)
    return Pyramid(root_id=pyramid.root_id, nodes=kept, dataset=pyramid.dataset,
                   track=pyramid.track, events=pyramid.events, facts=pyramid.facts,
                   grid=pyramid.grid, registry=pyramid.registry)


def _rotation_value(pyramid: Pyramid, frame: int) -> Optional[float]:
    """Rotation speed resolves to the nearest detection at or before the
    frame that carries one, else the earliest after it.
    """
    frames = pyramid.dataset.frames
    for i in range(frame, -1, -1):
        ball = frames[i].ball
        if ball is not None and ball.rotation_rpm is not None:
            return ball.rotation_rpm
    for i in range(frame + 1, len(frames)):
        ball = frames[i].ball
        if ball is not None and ball.rotation_rpm is not None:
            return ball.rotation_rpm
    return None


def _strokes_containing(pyramid: Pyramid, frame: int, player: Optional[str] = None) -> list[Event]:
    out = []
    for e in pyramid.events:
        if e.kind != EventKind.STROKE:
            continue
        if player is not None and e.subject != player:
            continue
        if e.span[0] <= frame <= e.span[1]:
            out.append(e)
    return out


def _fact_at(pyramid: Pyramid, kind: TacticKind, frame: int) -> bool:
    events_by_id = {e.event_id: e for e in pyramid.events}
    for f in pyramid.facts:
        if f.kind != kind:
            continue
        anchor = events_by_id.get(f.anchor_event)
        if anchor is not None and anchor.span[0] <= frame <= anchor.span[1]:
            return True
    return False


def _available(pyramid: Pyramid, name: str, subject: str, frame: int) -> bool:
    track = pyramid.track
    if subject == "ball":
        ball_defined = track.centers[frame] is not None
        if name == "ball_rotation_speed":
            return ball_defined and _rotation_value(pyramid, frame) is not None
        if name in ("ball_position", "ball_trajectory", "ball_placement"):
            return ball_defined
        if name in ("potential_placements", "potential_routes"):
            if _fact_at(pyramid, TacticKind(name), frame):
                return True
            return any("reception" in s.attributes for s in _strokes_containing(pyramid, frame))
        return False
    if subject in ("A", "B"):
        if name in ("player_position", "player_trajectory", "player_name"):
            return True
        if name == "player_posture":
            det = pyramid.dataset.player(frame, subject)
            return any(k.confidence >= 0.3 for k in det.keypoints.values())
        if name == "stroke_technique":
            return any("technique" in s.attributes
                       for s in _strokes_containing(pyramid, frame, subject))
        if name in ("stroke_effect", "player_tactic"):
            if _fact_at(pyramid, TacticKind(name), frame):
                return True
            return bool(_strokes_containing(pyramid, frame, subject))
        return False
    if subject == "rally":
        if name == "key_stroke":
            return _fact_at(pyramid, TacticKind.KEY_STROKE, frame)
        return False
    return False


def attributes_at(pyramid: Pyramid, subject: str, frame: int,
                  level_filter: DataLevel) -> list[str]:
    """Registry attributes selectable for a subject at a frame, filtered to
    levels at or below the narrative-purpose level. Ordered by level
    descending, then name.
    """
    if frame < 0 or frame >= len(pyramid.dataset.frames):
        raise PyramidError(f"frame {frame} outside clip")
    if subject in ("A", "B"):
        want = Subject.PLAYER
    else:
        try:
            want = Subject(subject)
        except ValueError:
            raise PyramidError(f"unknown subject: {subject!r}") from None
    hits = []
    for attr in pyramid.registry.attributes.values():
        if attr.subject != want or attr.level > level_filter:
            continue
        if attr.category == DataCategory.TRACKING:
            if not _available(pyramid, attr.name, subject, frame):
                continue
        hits.append(attr)
    hits.sort(key=lambda a: (-a.level, a.name))
    return [a.name for a in hits]


def suggest_insights(pyramid: Pyramid,
                     hook: Optional[Callable[[Pyramid], list[str]]] = None) -> list[str]:
    """Event ids worth highlighting; the default picks the strokes in the
    last two turns. Pass a hook to override the heuristic.
    """
    if hook is not None:
        return hook(pyramid)
    turns = pyramid.turns()
    if not turns:
        return []
    window = turns[-2:]
    start = window[0].span[0]
    end = window[-1].span[1]
    return [e.event_id for e in pyramid.events
            if e.kind == EventKind.STROKE and start <= e.span[0] <= end]
