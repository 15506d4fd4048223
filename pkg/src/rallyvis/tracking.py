"""Object-level tracking data: loading, validation, ball interpolation and
kinematics, and player keypoint access with occlusion fallback.

Coordinates are screen-space pixels with the origin at the top-left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .geometry import is_convex_quad, canonical_corners
from .jsonio import canonical_dumps, read_json

TRACKING_VERSION = 1

#: Standard 17-point pose layout. The neck is not a detected point; it is
#: derived as the shoulder midpoint and addressable under the name "neck".
KEYPOINT_NAMES = (
    "nose", "left_eye", "right_eye", "left_ear", "right_ear",
    "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
    "left_wrist", "right_wrist", "left_hip", "right_hip",
    "left_knee", "right_knee", "left_ankle", "right_ankle",
)

DERIVED_NECK = "neck"
PLAYER_IDS = ("A", "B")

#: Minimum keypoint confidence below which a point counts as occluded.
DEFAULT_KEYPOINT_CONFIDENCE = 0.3

Point = tuple[float, float]


class TrackingError(ValueError):
    pass


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    confidence: float


@dataclass(frozen=True)
class BallDetection:
    center: Point
    bbox: tuple[float, float, float, float]
    rotation_rpm: Optional[float] = None


@dataclass(frozen=True)
class PlayerDetection:
    player_id: str
    bbox: tuple[float, float, float, float]
    keypoints: dict[str, Keypoint]


@dataclass(frozen=True)
class TableDetection:
    quad: tuple[Point, Point, Point, Point]
    net_x: float


@dataclass(frozen=True)
class FrameDetections:
    frame_index: int
    timestamp: float
    ball: Optional[BallDetection]
    players: tuple[PlayerDetection, PlayerDetection]
    table: TableDetection


@dataclass(frozen=True)
class VideoMeta:
    width: int
    height: int
    fps: float
    frame_count: int

    @property
    def duration_s(self) -> float:
        return self.frame_count / self.fps


@dataclass
class TrackingDataset:
    video: VideoMeta
    frames: list[FrameDetections]

    def player(self, frame: int, player_id: str) -> PlayerDetection:
        for p in self.frames[frame].players:
            if p.player_id == player_id:
                return p
        raise TrackingError(f"unknown player id: {player_id!r}")


@dataclass
class BallTrack:
    """Per-frame ball centers after interpolation, with occlusion flags.

    `velocities`/`speeds` are filled by `derive_velocity`; entries are None
    outside the span covered by detections.
    """

    centers: list[Optional[Point]]
    occluded: list[bool]
    velocities: list[Optional[Point]] = field(default_factory=list)
    speeds: list[Optional[float]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.centers)


def _pair(value, what: str) -> Point:
    if (not isinstance(value, (list, tuple))) or len(value) != 2:
        raise TrackingError(f"malformed {what}: expected [x, y]")
    return float(value[0]), float(value[1])


def _bbox(value, what: str) -> tuple[float, float, float, float]:
    if (not isinstance(value, (list, tuple))) or len(value) != 4:
        raise TrackingError(f"malformed {what}: expected [x, y, w, h]")
    x, y, w, h = (float(v) for v in value)
    if w <= 0 or h <= 0:
        raise TrackingError(f"malformed {what}: width/height must be > 0")
    return x, y, w, h


def _parse_frame(doc: dict, meta: VideoMeta) -> FrameDetections:
    idx = int(doc["frame_index"])
    ball = None
    if doc.get("ball") is not None:
        b = doc["ball"]
        ball = BallDetection(
            center=_pair(b["center"], "ball center"),
            bbox=_bbox(b["bbox"], "ball bbox"),
            rotation_rpm=(float(b["rotation_rpm"]) if b.get("rotation_rpm") is not None else None),
        )
    players_doc = doc.get("players", [])
    if len(players_doc) != 2:
        raise TrackingError(f"frame {idx}: expected exactly 2 players")
    players = []
    for p in players_doc:
        pid = p["id"]
        if pid not in PLAYER_IDS:
            raise TrackingError(f"frame {idx}: unknown player id {pid!r}")
        kps: dict[str, Keypoint] = {}
        for name, raw in p.get("keypoints", {}).items():
            if name not in KEYPOINT_NAMES:
                raise TrackingError(f"frame {idx}: unknown keypoint {name!r}")
            x, y, conf = float(raw[0]), float(raw[1]), float(raw[2])
            if not (0.0 <= conf <= 1.0):
                raise TrackingError(f"frame {idx}: keypoint confidence out of [0,1]")
            in_bounds = 0.0 <= x <= meta.width and 0.0 <= y <= meta.height
            if not in_bounds and conf >= DEFAULT_KEYPOINT_CONFIDENCE:
                raise TrackingError(
                    f"frame {idx}: keypoint {name!r} outside frame bounds but not occluded"
                )
            kps[name] = Keypoint(x, y, conf)
        players.append(PlayerDetection(player_id=pid, bbox=_bbox(p["bbox"], "player bbox"), keypoints=kps))
    if players[0].player_id == players[1].player_id:
        raise TrackingError(f"frame {idx}: duplicate player id")
    players.sort(key=lambda p: p.player_id)
    t = doc["table"]
    quad = tuple(_pair(c, "table corner") for c in t["quad"])
    if len(quad) != 4 or not is_convex_quad(canonical_corners(quad)):
        raise TrackingError(f"frame {idx}: table quad is not convex")
    table = TableDetection(quad=quad, net_x=float(t["net_x"]))
    return FrameDetections(
        frame_index=idx,
        timestamp=float(doc["timestamp"]),
        ball=ball,
        players=(players[0], players[1]),
        table=table,
    )


def parse_dataset(doc: dict) -> TrackingDataset:
    if doc.get("schema_version") != TRACKING_VERSION:
        raise TrackingError(f"unsupported tracking schema_version: {doc.get('schema_version')!r}")
    v = doc["video"]
    meta = VideoMeta(width=int(v["width"]), height=int(v["height"]),
                     fps=float(v["fps"]), frame_count=int(v["frame_count"]))
    if meta.fps <= 0:
        raise TrackingError("fps must be > 0")
    frames_doc = doc.get("frames", [])
    if not frames_doc:
        raise TrackingError("empty dataset")
    frames = [_parse_frame(f, meta) for f in frames_doc]
    for i, f in enumerate(frames):
        if f.frame_index != i:
            raise TrackingError(f"non-contiguous frame_index: expected {i}, got {f.frame_index}")
    if len(frames) != meta.frame_count:
        raise TrackingError(
            f"frame_count mismatch: header says {meta.frame_count}, file has {len(frames)}"
        )
    return TrackingDataset(video=meta, frames=frames)


def load_dataset(path: str | Path) -> TrackingDataset:
    """Load and validate a tracking file (JSON, optionally gzipped)."""
    return parse_dataset(read_json(path))


def dataset_to_dict(ds: TrackingDataset) -> dict:
    frames = []
    for f in ds.frames:
        ball = None
        if f.ball is not None:
            ball = {"center": list(f.ball.center), "bbox": list(f.ball.bbox)}
            if f.ball.rotation_rpm is not None:
                ball["rotation_rpm"] = f.ball.rotation_rpm
        frames.append({
            "frame_index": f.frame_index,
            "timestamp": f.timestamp,
            "ball": ball,
            "players": [
                {
                    "id": p.player_id,
                    "bbox": list(p.bbox),
                    "keypoints": {n: [k.x, k.y, k.confidence] for n, k in sorted(p.keypoints.items())},
                }
                for p in f.players
            ],
            "table": {"quad": [list(c) for c in f.table.quad], "net_x": f.table.net_x},
        })
    return {
        "schema_version": TRACKING_VERSION,
        "video": {"width": ds.video.width, "height": ds.video.height,
                  "fps": ds.video.fps, "frame_count": ds.video.frame_count},
        "frames": frames,
    }


def dump_dataset(ds: TrackingDataset) -> str:
    return canonical_dumps(dataset_to_dict(ds))


def interpolate_ball(dataset: TrackingDataset) -> BallTrack:
    """Fill occluded ball positions by linear interpolation between the
    bracketing detections. Frames outside the first/last detection stay
    undefined; detected positions are passed through untouched.
    """
    n = len(dataset.frames)
    centers: list[Optional[Point]] = [None] * n
    occluded = [True] * n
    detected = []
    for i, f in enumerate(dataset.frames):
        if f.ball is not None:
            centers[i] = f.ball.center
            occluded[i] = False
            detected.append(i)
    if len(detected) < 2:
        raise TrackingError("ball track undefined: fewer than 2 ball detections")
    for a, b in zip(detected, detected[1:]):
        if b - a == 1:
            continue
        ax, ay = centers[a]  # type: ignore[misc]
        bx, by = centers[b]  # type: ignore[misc]
        span = b - a
        for j in range(a + 1, b):
            t = (j - a) / span
            centers[j] = (ax + (bx - ax) * t, ay + (by - ay) * t)
    return BallTrack(centers=centers, occluded=occluded)


def derive_velocity(track: BallTrack, fps: float) -> list[Optional[Point]]:
    """Per-frame velocity in px/s: central differences in the interior of
    the defined span, one-sided at its ends.
    """
    centers = track.centers
    defined = [i for i, c in enumerate(centers) if c is not None]
    if len(defined) < 2:
        raise TrackingError("cannot derive velocity: track spans fewer than 2 frames")
    first, last = defined[0], defined[-1]
    velocities: list[Optional[Point]] = [None] * len(centers)
    for i in range(first, last + 1):
        if i == first:
            a, b, dt = centers[i], centers[i + 1], 1.0
        elif i == last:
            a, b, dt = centers[i - 1], centers[i], 1.0
        else:
            a, b, dt = centers[i - 1], centers[i + 1], 2.0
        velocities[i] = ((b[0] - a[0]) * fps / dt, (b[1] - a[1]) * fps / dt)
    return velocities


def build_ball_track(dataset: TrackingDataset) -> BallTrack:
    """Interpolated ball track with velocity and speed attached."""
    track = interpolate_ball(dataset)
    velocities = derive_velocity(track, dataset.video.fps)
    speeds = [math.hypot(*v) if v is not None else None for v in velocities]
    return replace(track, velocities=velocities, speeds=speeds)


def player_keypoint(dataset: TrackingDataset, player_id: str, keypoint_name: str,
                    frame: int, tau: float = DEFAULT_KEYPOINT_CONFIDENCE) -> Optional[Point]:
    """Keypoint position at a frame, or None when occluded (confidence
    below tau). "neck" resolves to the shoulder midpoint; its confidence is
    the lower of the two shoulders.
    """
    if keypoint_name != DERIVED_NECK and keypoint_name not in KEYPOINT_NAMES:
        raise TrackingError(f"unknown keypoint: {keypoint_name!r}")
    player = dataset.player(frame, player_id)
    if keypoint_name == DERIVED_NECK:
        ls = player.keypoints.get("left_shoulder")
        rs = player.keypoints.get("right_shoulder")
        if ls is None or rs is None or min(ls.confidence, rs.confidence) < tau:
            return None
        return ((ls.x + rs.x) / 2.0, (ls.y + rs.y) / 2.0)
    kp = player.keypoints.get(keypoint_name)
    if kp is None or kp.confidence < tau:
        return None
    return (kp.x, kp.y)


def reach_point(dataset: TrackingDataset, player_id: str, frame: int,
                tau: float = DEFAULT_KEYPOINT_CONFIDENCE) -> Optional[Point]:
    """Racket-hand anchor used by stroke detection: the right wrist, with
    the neck as the occlusion fallback.
    """
    point = player_keypoint(dataset, player_id, "right_wrist", frame, tau)
    if point is None:
        point = player_keypoint(dataset, player_id, DERIVED_NECK, frame, tau)
    return point
