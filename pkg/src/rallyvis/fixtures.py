"""Synthetic rally and corpus builders.

Used by the test suite and by `tools/build_fixtures.py` to produce the
committed fixture files. Everything here is pure arithmetic (no trig, no
randomness) so generated bytes are identical on every platform.

The default rally is 6 seconds at 50 fps (300 frames, 1920x1080): the ball
shuttles between the players' rackets with a table bounce on every
crossing, producing six alternating strokes and six turns.
"""

from __future__ import annotations

from .design_space import ClipAnnotation, DataLevel, NarrativeOrder
from .tracking import (
    BallDetection,
    FrameDetections,
    Keypoint,
    PlayerDetection,
    TableDetection,
    TrackingDataset,
    VideoMeta,
)

TABLE_QUAD = ((650.0, 620.0), (1270.0, 620.0), (1360.0, 700.0), (560.0, 700.0))
NET_X = 960.0

WRIST_A = (430.0, 560.0)
WRIST_B = (1490.0, 560.0)
BALL_AT_A = (435.0, 555.0)
BALL_AT_B = (1485.0, 555.0)
BOUNCE_ON_B = (1150.0, 682.0)
BOUNCE_ON_A = (770.0, 682.0)

DEFAULT_HITS = (25, 75, 125, 175, 225, 275)
DEFAULT_OCCLUSIONS = tuple(range(40, 44)) + tuple(range(90, 94))
ROTATION_FRAMES = tuple(range(223, 228))
ROTATION_RPM = 7000.0

_PLAYER_A_KEYPOINTS = {
    "nose": (310.0, 420.0), "left_eye": (303.0, 412.0), "right_eye": (317.0, 412.0),
    "left_ear": (298.0, 416.0), "right_ear": (322.0, 416.0),
    "left_shoulder": (260.0, 470.0), "right_shoulder": (340.0, 470.0),
    "left_elbow": (240.0, 530.0), "right_elbow": (395.0, 520.0),
    "left_wrist": (235.0, 585.0), "right_wrist": WRIST_A,
    "left_hip": (270.0, 590.0), "right_hip": (330.0, 590.0),
    "left_knee": (265.0, 660.0), "right_knee": (335.0, 660.0),
    "left_ankle": (260.0, 735.0), "right_ankle": (340.0, 735.0),
}
_PLAYER_B_KEYPOINTS = {
    "nose": (1610.0, 420.0), "left_eye": (1617.0, 412.0), "right_eye": (1603.0, 412.0),
    "left_ear": (1622.0, 416.0), "right_ear": (1598.0, 416.0),
    "left_shoulder": (1660.0, 470.0), "right_shoulder": (1580.0, 470.0),
    "left_elbow": (1680.0, 530.0), "right_elbow": (1525.0, 520.0),
    "left_wrist": (1685.0, 585.0), "right_wrist": WRIST_B,
    "left_hip": (1650.0, 590.0), "right_hip": (1590.0, 590.0),
    "left_knee": (1655.0, 660.0), "right_knee": (1585.0, 660.0),
    "left_ankle": (1660.0, 735.0), "right_ankle": (1580.0, 735.0),
}
BBOX_A = (220.0, 400.0, 225.0, 345.0)
BBOX_B = (1475.0, 400.0, 225.0, 345.0)

BOUNCE_FRAC = 0.64


def _segment_position(t: float, p0, pb, p1) -> tuple[float, float]:
    """Piecewise arc p0 -> bounce pb -> p1 over t in [0, 1): x piecewise
    linear, y quadratic with its apex exactly at the bounce knot."""
    if t < BOUNCE_FRAC:
        s = t / BOUNCE_FRAC
        x = p0[0] + (pb[0] - p0[0]) * s
        y = pb[1] - (pb[1] - p0[1]) * (1.0 - s) * (1.0 - s)
    else:
        u = (t - BOUNCE_FRAC) / (1.0 - BOUNCE_FRAC)
        x = pb[0] + (p1[0] - pb[0]) * u
        y = pb[1] - (pb[1] - p1[1]) * u * u
    return x, y


def _ball_position(frame: int, hits: tuple[int, ...], frame_count: int) -> tuple[float, float]:
    first, last = hits[0], hits[-1]
    if frame < first:
        # Serve flight toward player A.
        t = frame / first
        return _segment_position(t, (1250.0, 600.0), BOUNCE_ON_A, BALL_AT_A)
    if frame >= last:
        # Final return drifting off to the left.
        span = max(frame_count - 1 - last, 1)
        u = (frame - last) / span
        x = BALL_AT_B[0] - 385.0 * u
        y = BALL_AT_B[1] - 55.0 * u * u
        return x, y
    for i in range(len(hits) - 1):
        h0, h1 = hits[i], hits[i + 1]
        if h0 <= frame < h1:
            t = (frame - h0) / (h1 - h0)
            if i % 2 == 0:  # A struck: travel to B over B's half
                return _segment_position(t, BALL_AT_A, BOUNCE_ON_B, BALL_AT_B)
            return _segment_position(t, BALL_AT_B, BOUNCE_ON_A, BALL_AT_A)
    raise AssertionError("unreachable")


def _sway(frame: int, salt: int) -> float:
    # Deterministic integer pseudo-noise, +-1.5 px.
    return (((frame * 7919 + salt * 104729) % 11) - 5) * 0.3


def _player(frame: int, pid: str) -> PlayerDetection:
    base = _PLAYER_A_KEYPOINTS if pid == "A" else _PLAYER_B_KEYPOINTS
    bbox = BBOX_A if pid == "A" else BBOX_B
    salt = 1 if pid == "A" else 2
    dx = _sway(frame, salt)
    dy = _sway(frame, salt + 7)
    keypoints = {
        name: Keypoint(x + dx, y + dy, 0.92)
        for name, (x, y) in base.items()
    }
    # The racket hand stays pinned so stroke geometry is exact.
    wx, wy = WRIST_A if pid == "A" else WRIST_B
    keypoints["right_wrist"] = Keypoint(wx, wy, 0.92)
    return PlayerDetection(player_id=pid, bbox=bbox, keypoints=keypoints)


def make_rally(frame_count: int = 300, fps: float = 50.0,
               hits: tuple[int, ...] = DEFAULT_HITS,
               occlusions: tuple[int, ...] = DEFAULT_OCCLUSIONS,
               width: int = 1920, height: int = 1080) -> TrackingDataset:
    meta = VideoMeta(width=width, height=height, fps=fps, frame_count=frame_count)
    occluded = set(occlusions)
    table = TableDetection(quad=TABLE_QUAD, net_x=NET_X)
    frames = []
    for f in range(frame_count):
        ball = None
        if f not in occluded:
            cx, cy = _ball_position(f, hits, frame_count)
            rpm = ROTATION_RPM if f in ROTATION_FRAMES else None
            ball = BallDetection(center=(cx, cy), bbox=(cx - 8.0, cy - 8.0, 16.0, 16.0),
                                 rotation_rpm=rpm)
        frames.append(FrameDetections(
            frame_index=f,
            timestamp=f / fps,
            ball=ball,
            players=(_player(f, "A"), _player(f, "B")),
            table=table,
        ))
    return TrackingDataset(video=meta, frames=frames)


def make_corpus() -> list[ClipAnnotation]:
    """40 annotated clips: 21 linear (52.5%), 10 flash-forward, 3 each of
    flash-back and zigzag, 2 time-fork, 1 grouped."""
    templates = {
        "tactic_routes": (DataLevel.TACTIC, [
            ("potential_placements", "heatmap_region"),
            ("potential_routes", "polyline"),
            ("ball_rotation_speed", "label"),
        ]),
        "tactic_plan": (DataLevel.TACTIC, [
            ("player_tactic", "label"),
            ("player_trajectory", "polyline"),
        ]),
        "tactic_key": (DataLevel.TACTIC, [
            ("key_stroke", "spotlight"),
            ("ball_trajectory", "polyline"),
        ]),
        "tactic_effect": (DataLevel.TACTIC, [
            ("stroke_effect", "label"),
            ("ball_placement", "region"),
        ]),
        "event_technique": (DataLevel.EVENT, [
            ("stroke_technique", "label"),
            ("ball_placement", "region"),
        ]),
        "event_posture": (DataLevel.EVENT, [
            ("stroke_technique", "label"),
            ("player_posture", "skeleton"),
        ]),
        "object_basic": (DataLevel.OBJECT, [
            ("ball_trajectory", "polyline"),
            ("player_position", "bounding_box"),
        ]),
    }
    plan = [
        # (order, [template x count])
        (NarrativeOrder.LINEAR, ["tactic_routes"] * 5 + ["tactic_plan"] * 2
         + ["tactic_effect"] * 2 + ["event_technique"] * 6 + ["event_posture"] * 4
         + ["object_basic"] * 2),
        (NarrativeOrder.FLASH_FORWARD, ["tactic_routes"] * 4 + ["tactic_key"] * 2
         + ["tactic_plan"] * 1 + ["event_technique"] * 3),
        (NarrativeOrder.FLASH_BACK, ["tactic_plan"] * 2 + ["event_posture"] * 1),
        (NarrativeOrder.ZIGZAG, ["tactic_key"] * 2 + ["event_technique"] * 1),
        (NarrativeOrder.TIME_FORK, ["tactic_routes"] * 1 + ["event_technique"] * 1),
        (NarrativeOrder.GROUPED, ["event_posture"] * 1),
    ]
    clips = []
    counter = 0
    for order, names in plan:
        for name in names:
            level, mappings = templates[name]
            clips.append(ClipAnnotation(
                clip_id=f"clip-{counter:03d}",
                sport="table_tennis",
                data_level=level,
                narrative_order=order,
                mappings=list(mappings),
                source=f"corpus/{name}",
            ))
            counter += 1
    assert len(clips) == 40
    return clips
