"""Event-level data derived from object-level tracks: strokes, bounces,
net hits, turn segmentation, and stroke-technique classification.

All detectors are deterministic geometric predicates. The exact rules:

* Stroke: per player, frames where the ball-to-racket-hand distance attains
  a windowed local minimum strictly below `delta_reach` open an event whose
  span is the surrounding run of below-threshold frames. The hit frame is
  the earliest frame in the span where the horizontal ball velocity
  reverses sign.
* Bounce: frames where the ball's screen y attains a windowed local maximum
  (earliest frame on plateaus) inside the table quad, having risen into and
  falling out of it.
* Net hit: the ball crosses the net column while its speed drops to at most
  `rho_net` times the pre-crossing speed within `net_window` frames.

Local extrema use a 5-frame window (two frames each side) with plateau
ties broken to the earliest frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .geometry import TableGrid, PlacementCell
from .jsonio import canonical_dumps
from .tracking import (
    BallTrack,
    TrackingDataset,
    DEFAULT_KEYPOINT_CONFIDENCE,
    player_keypoint,
    reach_point,
)

EVENTS_VERSION = 1

_HALF_WINDOW = 2  # 5-frame extremum window


class EventKind(str, Enum):
    STROKE = "stroke"
    BOUNCE = "bounce"
    NET_HIT = "net_hit"
    TURN = "turn"


class EventError(ValueError):
    pass


@dataclass
class Event:
    event_id: str
    kind: EventKind
    subject: str  # "A" | "B" | "ball" | "rally"
    span: tuple[int, int]
    hit_frame: Optional[int] = None
    attributes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "event_id": self.event_id,
            "kind": self.kind.value,
            "subject": self.subject,
            "span": [self.span[0], self.span[1]],
            "hit_frame": self.hit_frame,
            "attributes": self.attributes,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Event":
        return cls(
            event_id=d["event_id"],
            kind=EventKind(d["kind"]),
            subject=d["subject"],
            span=(int(d["span"][0]), int(d["span"][1])),
            hit_frame=(int(d["hit_frame"]) if d.get("hit_frame") is not None else None),
            attributes=dict(d.get("attributes", {})),
        )


@dataclass(frozen=True)
class DetectorParams:
    tau_kp: float = DEFAULT_KEYPOINT_CONFIDENCE
    delta_reach_frac: float = 0.12  # of frame width
    rho_net: float = 0.5
    net_window: int = 3
    enforce_alternation: bool = True

    def delta_reach(self, frame_width: int) -> float:
        return self.delta_reach_frac * frame_width


def _is_local_min(values: list[float], i: int) -> bool:
    """Windowed local minimum with plateau tie-break to the earliest frame."""
    if not math.isfinite(values[i]):
        return False
    lo = max(0, i - _HALF_WINDOW)
    hi = min(len(values) - 1, i + _HALF_WINDOW)
    for j in range(lo, hi + 1):
        if values[j] < values[i]:
            return False
        if j < i and values[j] == values[i]:
            return False
    return True


def detect_strokes(track: BallTrack, dataset: TrackingDataset,
                   params: DetectorParams = DetectorParams()) -> list[Event]:
    n = len(track)
    delta = params.delta_reach(dataset.video.width)
    vels = track.velocities
    events: list[Event] = []
    for pid in ("A", "B"):
        dist = [math.inf] * n
        for i in range(n):
            c = track.centers[i]
            anchor = reach_point(dataset, pid, i, params.tau_kp)
            if c is not None and anchor is not None:
                dist[i] = math.hypot(c[0] - anchor[0], c[1] - anchor[1])
        # Maximal runs of below-threshold frames; one event per run that
        # contains at least one local minimum.
        i = 0
        while i < n:
            if not dist[i] < delta:
                i += 1
                continue
            start = i
            while i < n and dist[i] < delta:
                i += 1
            end = i - 1
            if any(_is_local_min(dist, j) for j in range(start, end + 1)):
                hit = _find_hit_frame(vels, start, end)
                events.append(Event(
                    event_id=f"stroke-{pid}-{start:06d}",
                    kind=EventKind.STROKE,
                    subject=pid,
                    span=(start, end),
                    hit_frame=hit,
                ))
    events.sort(key=lambda e: (e.span[0], e.subject))
    if params.enforce_alternation:
        kept: list[Event] = []
        for e in events:
            if kept and kept[-1].subject == e.subject:
                continue
            kept.append(e)
        events = kept
    return events


def _find_hit_frame(vels: list[Optional[tuple[float, float]]],
                    start: int, end: int) -> Optional[int]:
    """Earliest frame in [start, end] where horizontal velocity reverses.

    A reversal at h means vx went from nonzero at h-1 to the opposite sign,
    either immediately or after an exact-zero plateau that resolves within
    the span.
    """
    for h in range(max(start, 1), end + 1):
        prev = vels[h - 1]
        cur = vels[h]
        if prev is None or cur is None or prev[0] == 0.0:
            continue
        if prev[0] * cur[0] < 0.0:
            return h
        if cur[0] == 0.0:
            for k in range(h + 1, end + 1):
                nxt = vels[k]
                if nxt is None or nxt[0] == 0.0:
                    continue
                if prev[0] * nxt[0] < 0.0:
                    return h
                break
    return None


def detect_bounces(track: BallTrack, grid: TableGrid) -> list[Event]:
    n = len(track)
    events: list[Event] = []
    for i in range(n):
        c = track.centers[i]
        if c is None or not grid.contains(c):
            continue
        if not _is_apex(track.centers, i):
            continue
        cell = grid.cell_of(c)
        events.append(Event(
            event_id=f"bounce-{i:06d}",
            kind=EventKind.BOUNCE,
            subject="ball",
            span=(i, i),
            attributes={"placement": cell.to_dict()},
        ))
    return events


def _is_apex(centers: list[Optional[tuple[float, float]]], i: int) -> bool:
    """Windowed maximum of screen y (earliest on plateaus) that the track
    rises into and falls out of.
    """
    y = centers[i][1]  # type: ignore[index]
    lo = max(0, i - _HALF_WINDOW)
    hi = min(len(centers) - 1, i + _HALF_WINDOW)
    rose = fell = False
    for j in range(lo, hi + 1):
        cj = centers[j]
        if cj is None:
            continue
        if cj[1] > y:
            return False
        if j < i and cj[1] == y:
            return False
        if j < i and cj[1] < y:
            rose = True
        if j > i and cj[1] < y:
            fell = True
    return rose and fell


def detect_net_hits(track: BallTrack, net_x: float,
                    params: DetectorParams = DetectorParams()) -> list[Event]:
    n = len(track)
    speeds = track.speeds
    events: list[Event] = []
    for j in range(n - 1):
        a, b = track.centers[j], track.centers[j + 1]
        if a is None or b is None:
            continue
        da, db = a[0] - net_x, b[0] - net_x
        crossing = da * db < 0.0 or (da != 0.0 and db == 0.0)
        if not crossing:
            continue
        before = speeds[j]
        if before is None or before <= 0.0:
            continue
        window_end = min(j + params.net_window, n - 1)
        after_candidates = [speeds[k] for k in range(j + 1, window_end + 1) if speeds[k] is not None]
        if not after_candidates:
            continue
        if min(after_candidates) <= params.rho_net * before:
            events.append(Event(
                event_id=f"nethit-{j:06d}",
                kind=EventKind.NET_HIT,
                subject="ball",
                span=(j, window_end),
                attributes={"speed_before": before, "speed_after": min(after_candidates)},
            ))
    return events


def segment_turns(strokes: list[Event], rally_end: int) -> list[Event]:
    """Partition [first hit, rally_end] into turns, one per stroke hit."""
    hits: list[int] = []
    for s in sorted(strokes, key=lambda e: e.span[0]):
        if s.hit_frame is None:
            continue
        if hits and s.hit_frame <= hits[-1]:
            continue
        hits.append(s.hit_frame)
    turns: list[Event] = []
    for i, h in enumerate(hits):
        end = hits[i + 1] - 1 if i + 1 < len(hits) else rally_end
        turns.append(Event(
            event_id=f"turn-{i:02d}",
            kind=EventKind.TURN,
            subject="rally",
            span=(h, end),
            attributes={"index": i},
        ))
    return turns


TECHNIQUE_LABELS = (
    "forehand_attack", "backhand_attack", "forehand_push", "backhand_push", "unknown",
)


def classify_stroke_technique(stroke: Event, dataset: TrackingDataset,
                              tau: float = DEFAULT_KEYPOINT_CONFIDENCE) -> str:
    """Rule-based technique label from the posture at the hit frame.

    Wrist above the racket shoulder means attack, otherwise push; the wrist
    on the racket-shoulder side of the torso means forehand, otherwise
    backhand. Occluded posture yields "unknown".
    """
    if stroke.hit_frame is None:
        return "unknown"
    frame = stroke.hit_frame
    pid = stroke.subject
    wrist = player_keypoint(dataset, pid, "right_wrist", frame, tau)
    shoulder = player_keypoint(dataset, pid, "right_shoulder", frame, tau)
    if wrist is None or shoulder is None:
        return "unknown"
    torso = _torso_center(dataset, pid, frame, tau)
    if torso is None:
        return "unknown"
    shoulder_offset = shoulder[0] - torso[0]
    wrist_offset = wrist[0] - torso[0]
    if shoulder_offset == 0.0:
        return "unknown"
    same_side = wrist_offset * shoulder_offset > 0.0
    above = wrist[1] < shoulder[1]
    if same_side:
        return "forehand_attack" if above else "forehand_push"
    return "backhand_attack" if above else "backhand_push"


def _torso_center(dataset: TrackingDataset, pid: str, frame: int, tau: float):
    lh = player_keypoint(dataset, pid, "left_hip", frame, tau)
    rh = player_keypoint(dataset, pid, "right_hip", frame, tau)
    if lh is not None and rh is not None:
        return ((lh[0] + rh[0]) / 2.0, (lh[1] + rh[1]) / 2.0)
    ls = player_keypoint(dataset, pid, "left_shoulder", frame, tau)
    rs = player_keypoint(dataset, pid, "right_shoulder", frame, tau)
    if ls is not None and rs is not None:
        return ((ls[0] + rs[0]) / 2.0, (ls[1] + rs[1]) / 2.0)
    return None


def detect_all(dataset: TrackingDataset, track: BallTrack,
               params: DetectorParams = DetectorParams()) -> list[Event]:
    """Run every detector, label stroke techniques, and merge by frame."""
    grid = TableGrid(dataset.frames[0].table.quad, dataset.frames[0].table.net_x)
    bounces = detect_bounces(track, grid)
    strokes = detect_strokes(track, dataset, params)
    for s in strokes:
        s.attributes["technique"] = classify_stroke_technique(s, dataset, params.tau_kp)
        if s.hit_frame is not None and track.speeds and track.speeds[s.hit_frame] is not None:
            s.attributes["speed_at_hit"] = track.speeds[s.hit_frame]
        if s.hit_frame is not None:
            # Reception = where the incoming ball bounced before this hit.
            incoming = [b for b in bounces if b.span[0] < s.hit_frame]
            if incoming:
                s.attributes["reception"] = incoming[-1].attributes["placement"]
    net_hits = detect_net_hits(track, dataset.frames[0].table.net_x, params)
    turns = segment_turns(strokes, len(dataset.frames) - 1)
    merged = strokes + bounces + net_hits + turns
    merged.sort(key=lambda e: (e.span[0], e.kind.value, e.subject))
    return merged


def dump_events(events: list[Event]) -> str:
    return canonical_dumps({"schema_version": EVENTS_VERSION,
                            "events": [e.to_dict() for e in events]})


def parse_events(doc: dict) -> list[Event]:
    if doc.get("schema_version") != EVENTS_VERSION:
        raise EventError(f"unsupported events schema_version: {doc.get('schema_version')!r}")
    return [Event.from_dict(e) for e in doc["events"]]
