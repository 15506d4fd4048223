"""Compiles augmentation scripts into double-track render schedules.

The video track (play / hold / reverse output frames) and the data track
(per-frame active overlay items with animation phases) are compiled
together:

* linear      -- pass-through; a pause is inserted only where two or more
                 mappings share an anchor frame.
* flash_forward -- play to the earliest anchor, hold there while every
                 mapping is revealed in topological order, then resume;
                 revealed mappings are flagged and never re-created.
* flash_back  -- mirror image: hold at the latest anchor and reveal the
                 past-source mappings there; they are destroyed when play
                 resumes.
* time_fork   -- hold at the anchor, show each hypothetical mapping and
                 destroy it within its own reveal window, then play the
                 actual mappings during resumed playback.
* zigzag      -- play to the anchor, reverse for `rewind_frames`, then play
                 forward again with the second-pass mappings.
* grouped     -- not schedulable; raises UnsupportedOrderError.

Presentation order is derived from a DAG over the mappings: chronological
edges within temporal groups plus virtual edges from the anchor node to
each flashed node, resolved by a topological sort with chronological
tie-break.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .design_space import NarrativeOrder
from .jsonio import canonical_dumps
from .tracking import VideoMeta

SCRIPT_VERSION = 1
SCHEDULE_VERSION = 1

#: Creation/Destruction opacity ramps span this many output frames.
RAMP_FRAMES = 10
DEFAULT_HOLD_SECONDS = 2.0

PHASE_CREATION = "creation"
PHASE_SUSTAIN = "sustain"
PHASE_DESTRUCTION = "destruction"

KIND_PLAY = "play"
KIND_HOLD = "hold"
KIND_REVERSE = "reverse"


class ScheduleError(ValueError):
    pass


class UnsupportedOrderError(ScheduleError):
    """Raised for narrative orders the compiler does not schedule."""


def default_hold_frames(fps: float) -> int:
    return round(DEFAULT_HOLD_SECONDS * fps)


@dataclass(frozen=True)
class DataSelection:
    selection_id: str
    attribute: str
    subject: str
    anchor_frame: int
    source_span: tuple[int, int]


@dataclass
class MappingSpec:
    mapping_id: str
    selection: DataSelection
    visual: str
    style: dict = field(default_factory=dict)
    hold_frames: int = 0
    pass_index: int = 1

    @property
    def anchor(self) -> int:
        return self.selection.anchor_frame


@dataclass
class ZigZagSpec:
    anchor: int
    rewind_frames: int


@dataclass
class TimeForkSpec:
    hypothetical: list[str]
    actual: list[str]


@dataclass
class AugmentationScript:
    clip: tuple[int, int]
    order: NarrativeOrder
    mappings: list[MappingSpec]
    zigzag: Optional[ZigZagSpec] = None
    timefork: Optional[TimeForkSpec] = None

    def mapping(self, mapping_id: str) -> MappingSpec:
        for m in self.mappings:
            if m.mapping_id == mapping_id:
                return m
        raise ScheduleError(f"unknown mapping id: {mapping_id!r}")

    def validate(self) -> None:
        t0, t1 = self.clip
        if t0 > t1:
            raise ScheduleError(f"empty clip: {self.clip}")
        seen: set[str] = set()
        for m in self.mappings:
            if m.mapping_id in seen:
                raise ScheduleError(f"duplicate mapping id: {m.mapping_id!r}")
            seen.add(m.mapping_id)
            if not t0 <= m.anchor <= t1:
                raise ScheduleError(
                    f"mapping {m.mapping_id}: anchor {m.anchor} outside clip {self.clip}"
                )
            if m.hold_frames < 0:
                raise ScheduleError(f"mapping {m.mapping_id}: negative hold_frames")
            if m.pass_index not in (1, 2):
                raise ScheduleError(f"mapping {m.mapping_id}: pass must be 1 or 2")
        if (self.zigzag is not None) != (self.order == NarrativeOrder.ZIGZAG):
            raise ScheduleError("zigzag settings present iff order is zigzag")
        if (self.timefork is not None) != (self.order == NarrativeOrder.TIME_FORK):
            raise ScheduleError("timefork settings present iff order is time_fork")
        if self.zigzag is not None:
            z = self.zigzag
            if not t0 <= z.anchor <= t1:
                raise ScheduleError(f"zigzag anchor {z.anchor} outside clip")
            if z.rewind_frames < 1:
                raise ScheduleError("zigzag rewind_frames must be >= 1")
            if z.anchor - z.rewind_frames < t0:
                raise ScheduleError("zigzag rewind exceeds clip start")
        if self.timefork is not None:
            tf = self.timefork
            listed = tf.hypothetical + tf.actual
            if sorted(listed) != sorted(seen) or len(listed) != len(seen):
                raise ScheduleError("timefork must partition the mapping ids")
            if not tf.hypothetical or not tf.actual:
                raise ScheduleError("timefork needs at least one hypothetical and one actual mapping")
            for mid in tf.hypothetical:
                if self.mapping(mid).hold_frames < 1:
                    raise ScheduleError(f"timefork hypothetical {mid} needs hold_frames >= 1")

    def to_dict(self) -> dict:
        doc: dict = {
            "schema_version": SCRIPT_VERSION,
            "clip": [self.clip[0], self.clip[1]],
            "order": self.order.value,
            "mappings": [
                {
                    "mapping_id": m.mapping_id,
                    "attribute": m.selection.attribute,
                    "subject": m.selection.subject,
                    "anchor_frame": m.selection.anchor_frame,
                    "source_span": [m.selection.source_span[0], m.selection.source_span[1]],
                    "visual": m.visual,
                    "style": m.style,
                    "hold_frames": m.hold_frames,
                    "pass": m.pass_index,
                }
                for m in self.mappings
            ],
        }
        if self.zigzag is not None:
            doc["zigzag"] = {"anchor": self.zigzag.anchor,
                             "rewind_frames": self.zigzag.rewind_frames}
        if self.timefork is not None:
            doc["timefork"] = {"hypothetical": list(self.timefork.hypothetical),
                               "actual": list(self.timefork.actual)}
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "AugmentationScript":
        if doc.get("schema_version") != SCRIPT_VERSION:
            raise ScheduleError(f"unsupported script schema_version: {doc.get('schema_version')!r}")
        mappings = []
        for i, m in enumerate(doc.get("mappings", [])):
            mid = m.get("mapping_id") or f"m{i:02d}"
            sel = DataSelection(
                selection_id=m.get("selection_id", mid),
                attribute=m["attribute"],
                subject=m["subject"],
                anchor_frame=int(m["anchor_frame"]),
                source_span=(int(m["source_span"][0]), int(m["source_span"][1])),
            )
            mappings.append(MappingSpec(
                mapping_id=mid, selection=sel, visual=m["visual"],
                style=dict(m.get("style", {})),
                hold_frames=int(m.get("hold_frames", 0)),
                pass_index=int(m.get("pass", 1)),
            ))
        zz = doc.get("zigzag")
        tf = doc.get("timefork")
        script = cls(
            clip=(int(doc["clip"][0]), int(doc["clip"][1])),
            order=NarrativeOrder.from_token(doc["order"]),
            mappings=mappings,
            zigzag=ZigZagSpec(int(zz["anchor"]), int(zz["rewind_frames"])) if zz else None,
            timefork=TimeForkSpec(list(tf["hypothetical"]), list(tf["actual"])) if tf else None,
        )
        script.validate()
        return script


@dataclass
class ScheduleEdge:
    target: str
    virtual: bool = False


@dataclass
class ScheduleNode:
    node_id: str
    mapping_id: str
    source_frame: int
    order_index: int
    edges: list[ScheduleEdge] = field(default_factory=list)
    presented_flag: bool = False


@dataclass
class ScheduleDag:
    nodes: dict[str, ScheduleNode]

    def virtual_edges(self) -> list[tuple[str, str]]:
        return [(n.node_id, e.target) for n in self.nodes.values()
                for e in n.edges if e.virtual]

    def topo_order(self) -> list[str]:
        """Kahn's algorithm with chronological tie-break (source frame,
        then script order)."""
        indegree = {nid: 0 for nid in self.nodes}
        for node in self.nodes.values():
            for e in node.edges:
                indegree[e.target] += 1
        ready = sorted(
            (nid for nid, d in indegree.items() if d == 0),
            key=lambda nid: (self.nodes[nid].source_frame, self.nodes[nid].order_index),
        )
        out: list[str] = []
        while ready:
            nid = ready.pop(0)
            out.append(nid)
            for e in self.nodes[nid].edges:
                indegree[e.target] -= 1
                if indegree[e.target] == 0:
                    ready.append(e.target)
            ready.sort(key=lambda nid: (self.nodes[nid].source_frame,
                                        self.nodes[nid].order_index))
        if len(out) != len(self.nodes):
            raise ScheduleError("cycle detected in schedule graph")
        return out


def _chain(nodes: list[ScheduleNode], virtual: bool = False) -> None:
    for a, b in zip(nodes, nodes[1:]):
        a.edges.append(ScheduleEdge(target=b.node_id, virtual=virtual))


def build_dag(script: AugmentationScript) -> ScheduleDag:
    script.validate()
    if script.order not in (NarrativeOrder.LINEAR, NarrativeOrder.FLASH_FORWARD,
                            NarrativeOrder.FLASH_BACK, NarrativeOrder.TIME_FORK,
                            NarrativeOrder.ZIGZAG):
        raise UnsupportedOrderError(f"unsupported order: {script.order.value}")
    nodes = {
        m.mapping_id: ScheduleNode(node_id=m.mapping_id, mapping_id=m.mapping_id,
                                   source_frame=m.anchor, order_index=i)
        for i, m in enumerate(script.mappings)
    }
    chrono = sorted(nodes.values(), key=lambda n: (n.source_frame, n.order_index))

    if script.order == NarrativeOrder.LINEAR:
        _chain(chrono)
    elif script.order == NarrativeOrder.FLASH_FORWARD:
        if chrono:
            anchor = chrono[0]
            at_anchor = [n for n in chrono if n.source_frame == anchor.source_frame]
            future = [n for n in chrono if n.source_frame > anchor.source_frame]
            _chain(at_anchor)
            for n in future:
                anchor.edges.append(ScheduleEdge(target=n.node_id, virtual=True))
                n.presented_flag = True
            _chain(future)
    elif script.order == NarrativeOrder.FLASH_BACK:
        if chrono:
            anchor = max(chrono, key=lambda n: (n.source_frame, n.order_index))
            past = [n for n in chrono if n.source_frame < anchor.source_frame]
            at_anchor = [n for n in chrono
                         if n.source_frame == anchor.source_frame and n is not anchor]
            for n in past:
                anchor.edges.append(ScheduleEdge(target=n.node_id, virtual=True))
                n.presented_flag = True
            _chain(past)
            _chain([anchor] + at_anchor)
    elif script.order == NarrativeOrder.TIME_FORK:
        tf = script.timefork
        assert tf is not None
        hypo = [nodes[mid] for mid in tf.hypothetical]
        actual = sorted((nodes[mid] for mid in tf.actual),
                        key=lambda n: (n.source_frame, n.order_index))
        _chain(hypo)
        _chain(actual)
        if hypo and actual:
            # Structural ordering edge (not a flash link): hypotheticals may
            # share the actuals' source frames, and virtual edges must only
            # connect nodes of different source frames.
            hypo[-1].edges.append(ScheduleEdge(target=actual[0].node_id))
    elif script.order == NarrativeOrder.ZIGZAG:
        pass1 = [n for n in chrono if script.mapping(n.mapping_id).pass_index == 1]
        pass2 = [n for n in chrono if script.mapping(n.mapping_id).pass_index == 2]
        _chain(pass1)
        _chain(pass2)
        if pass1 and pass2:
            pass1[-1].edges.append(ScheduleEdge(target=pass2[0].node_id))

    dag = ScheduleDag(nodes=nodes)
    dag.topo_order()  # defensive cycle check
    return dag


@dataclass
class OutputFrame:
    kind: str
    src: int
    items: list[tuple[str, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "src": self.src,
                "items": [[mid, phase] for mid, phase in self.items]}


@dataclass
class RenderSchedule:
    fps: float
    canvas: tuple[int, int]
    clip: tuple[int, int]
    order: NarrativeOrder
    frames: list[OutputFrame]

    @property
    def total_frames(self) -> int:
        return len(self.frames)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEDULE_VERSION,
            "fps": self.fps,
            "canvas": [self.canvas[0], self.canvas[1]],
            "clip": [self.clip[0], self.clip[1]],
            "order": self.order.value,
            "total_frames": self.total_frames,
            "frames": [f.to_dict() for f in self.frames],
        }

    def dumps(self) -> str:
        return canonical_dumps(self.to_dict())


def _clamped_span(m: MappingSpec, clip: tuple[int, int]) -> tuple[int, int]:
    s0, s1 = m.selection.source_span
    return (max(clip[0], min(s0, s1)), min(clip[1], max(s0, s1)))


def _phase_for(offset: int, length: int, ramp: int = RAMP_FRAMES) -> str:
    creation = min(ramp, length)
    destruction = min(ramp, length - creation)
    if offset < creation:
        return PHASE_CREATION
    if offset >= length - destruction:
        return PHASE_DESTRUCTION
    return PHASE_SUSTAIN


def _last_index_with_src_at_most(frames: list[OutputFrame], limit: int,
                                 start: int, end: int) -> int:
    best = -1
    for i in range(start, end + 1):
        if frames[i].src <= limit:
            best = i
    return best


def compile_schedule(script: AugmentationScript, video: VideoMeta,
                     ramp_frames: int = RAMP_FRAMES) -> RenderSchedule:
    """Pure compilation of a script into an ordered output-frame list."""
    script.validate()
    if script.order == NarrativeOrder.GROUPED:
        raise UnsupportedOrderError("unsupported order: grouped")
    t0, t1 = script.clip
    if t0 < 0 or t1 >= video.frame_count:
        raise ScheduleError(f"clip {script.clip} outside video (0..{video.frame_count - 1})")

    frames: list[OutputFrame] = []
    # active intervals per mapping in output-index space, inclusive
    intervals: dict[str, tuple[int, int]] = {}

    if script.order == NarrativeOrder.LINEAR:
        groups: dict[int, list[MappingSpec]] = {}
        for m in script.mappings:
            groups.setdefault(m.anchor, []).append(m)
        hold_starts: dict[int, int] = {}
        for f in range(t0, t1 + 1):
            frames.append(OutputFrame(kind=KIND_PLAY, src=f))
            group = groups.get(f, [])
            if len(group) >= 2:
                hold_starts[f] = len(frames)
                for m in group:
                    for _ in range(m.hold_frames):
                        frames.append(OutputFrame(kind=KIND_HOLD, src=f))
        total = len(frames)
        for m in script.mappings:
            s0, s1 = _clamped_span(m, script.clip)
            group = groups[m.anchor]
            if len(group) >= 2:
                start = hold_starts[m.anchor]
                for other in group:
                    if other is m:
                        break
                    start += other.hold_frames
            else:
                start = next(i for i, fr in enumerate(frames) if fr.src >= s0)
            end = _last_index_with_src_at_most(frames, s1, start, total - 1)
            if end >= start:
                intervals[m.mapping_id] = (start, end)

    elif script.order in (NarrativeOrder.FLASH_FORWARD, NarrativeOrder.FLASH_BACK):
        dag = build_dag(script)
        topo = dag.topo_order()
        if script.order == NarrativeOrder.FLASH_FORWARD:
            anchor_frame = min(m.anchor for m in script.mappings) if script.mappings else t0
        else:
            anchor_frame = max(m.anchor for m in script.mappings) if script.mappings else t0
        for f in range(t0, anchor_frame + 1):
            frames.append(OutputFrame(kind=KIND_PLAY, src=f))
        hold_start = len(frames)
        total_hold = sum(m.hold_frames for m in script.mappings)
        for _ in range(total_hold):
            frames.append(OutputFrame(kind=KIND_HOLD, src=anchor_frame))
        hold_end = hold_start + total_hold - 1
        for f in range(anchor_frame + 1, t1 + 1):
            frames.append(OutputFrame(kind=KIND_PLAY, src=f))
        reveal = hold_start
        for mid in topo:
            m = script.mapping(mid)
            start = reveal
            reveal += m.hold_frames
            if script.order == NarrativeOrder.FLASH_FORWARD:
                _, s1 = _clamped_span(m, script.clip)
                end = _last_index_with_src_at_most(frames, s1, start, len(frames) - 1)
            elif dag.nodes[mid].presented_flag:
                # Flashed-back data closes when playback resumes.
                end = hold_end
            else:
                _, s1 = _clamped_span(m, script.clip)
                end = max(hold_end,
                          _last_index_with_src_at_most(frames, s1, start, len(frames) - 1))
            if end >= start:
                intervals[m.mapping_id] = (start, end)

    elif script.order == NarrativeOrder.TIME_FORK:
        tf = script.timefork
        assert tf is not None
        hypo = [script.mapping(mid) for mid in tf.hypothetical]
        anchor_frame = min(m.anchor for m in hypo)
        for f in range(t0, anchor_frame + 1):
            frames.append(OutputFrame(kind=KIND_PLAY, src=f))
        reveal = len(frames)
        for m in hypo:
            intervals[m.mapping_id] = (reveal, reveal + m.hold_frames - 1)
            for _ in range(m.hold_frames):
                frames.append(OutputFrame(kind=KIND_HOLD, src=anchor_frame))
            reveal += m.hold_frames
        resume = len(frames)
        for f in range(anchor_frame + 1, t1 + 1):
            frames.append(OutputFrame(kind=KIND_PLAY, src=f))
        for mid in tf.actual:
            m = script.mapping(mid)
            s0, s1 = _clamped_span(m, script.clip)
            start = None
            for i in range(resume, len(frames)):
                if frames[i].src >= s0:
                    start = i
                    break
            if start is None:
                continue
            end = _last_index_with_src_at_most(frames, s1, start, len(frames) - 1)
            if end >= start:
                intervals[m.mapping_id] = (start, end)

    elif script.order == NarrativeOrder.ZIGZAG:
        zz = script.zigzag
        assert zz is not None
        rewind_to = zz.anchor - zz.rewind_frames
        seg1 = (0, zz.anchor - t0)
        for f in range(t0, zz.anchor + 1):
            frames.append(OutputFrame(kind=KIND_PLAY, src=f))
        for f in range(zz.anchor - 1, rewind_to - 1, -1):
            frames.append(OutputFrame(kind=KIND_REVERSE, src=f))
        seg3_start = len(frames)
        for f in range(rewind_to + 1, t1 + 1):
            frames.append(OutputFrame(kind=KIND_PLAY, src=f))
        seg3 = (seg3_start, len(frames) - 1)
        for m in script.mappings:
            s0, s1 = _clamped_span(m, script.clip)
            segments = [seg1, seg3] if m.pass_index == 1 else [seg3]
            for lo, hi in segments:
                if hi < lo:
                    continue
                start = None
                for i in range(lo, hi + 1):
                    if frames[i].src >= s0:
                        start = i
                        break
                if start is None or frames[start].src > s1:
                    continue
                end = _last_index_with_src_at_most(frames, s1, start, hi)
                if end >= start:
                    intervals[m.mapping_id] = (start, end)
                    break

    else:  # pragma: no cover - guarded above
        raise UnsupportedOrderError(f"unsupported order: {script.order.value}")

    for m in script.mappings:
        iv = intervals.get(m.mapping_id)
        if iv is None:
            continue
        a, b = iv
        length = b - a + 1
        for i in range(a, b + 1):
            frames[i].items.append((m.mapping_id, _phase_for(i - a, length, ramp_frames)))

    return RenderSchedule(fps=video.fps, canvas=(video.width, video.height),
                          clip=script.clip, order=script.order, frames=frames)


def apply_slow_motion(schedule: RenderSchedule, span: tuple[int, int],
                      rate: float) -> RenderSchedule:
    """Frame-hold slow motion: each play frame whose source lies in `span`
    is shown round(1/rate) times; duplicates keep the active items.
    """
    if not 0.0 < rate < 1.0:
        raise ScheduleError(f"slow motion rate must be in (0, 1), got {rate}")
    if span[0] > span[1]:
        raise ScheduleError(f"empty slow motion span: {span}")
    repeats = round(1.0 / rate)
    out: list[OutputFrame] = []
    for frame in schedule.frames:
        out.append(frame)
        if frame.kind == KIND_PLAY and span[0] <= frame.src <= span[1]:
            for _ in range(repeats - 1):
                out.append(OutputFrame(kind=KIND_HOLD, src=frame.src,
                                       items=list(frame.items)))
    return replace(schedule, frames=out)


def parse_schedule(doc: dict) -> RenderSchedule:
    if doc.get("schema_version") != SCHEDULE_VERSION:
        raise ScheduleError(f"unsupported schedule schema_version: {doc.get('schema_version')!r}")
    frames = [OutputFrame(kind=f["kind"], src=int(f["src"]),
                          items=[(mid, phase) for mid, phase in f["items"]])
              for f in doc["frames"]]
    return RenderSchedule(
        fps=float(doc["fps"]),
        canvas=(int(doc["canvas"][0]), int(doc["canvas"][1])),
        clip=(int(doc["clip"][0]), int(doc["clip"][1])),
        order=NarrativeOrder.from_token(doc["order"]),
        frames=frames,
    )


def check_virtual_links(script: AugmentationScript, dag: ScheduleDag, stats) -> list[str]:
    """Optional advisory check: warn when a virtual link targets an
    attribute with no corpus precedent under the script's order.
    """
    warnings = []
    for src, dst in dag.virtual_edges():
        attr = script.mapping(dst).selection.attribute
        seen = any(a == attr and o == script.order and c > 0
                   for (a, _, o), c in stats.counts.items())
        if not seen:
            warnings.append(
                f"virtual link {src}->{dst}: no corpus precedent for "
                f"{attr!r} under {script.order.value}"
            )
    return warnings
