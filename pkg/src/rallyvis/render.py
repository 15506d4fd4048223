"""Deterministic overlay rendering.

A render schedule plus pyramid data realizes into per-output-frame overlay
documents (SVG with fixed attribute order and 6-decimal coordinates) and,
when a source image sequence is supplied, alpha-composited PNG frames.
Identical inputs produce byte-identical artifacts on every platform; the
golden tests depend on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional
from xml.sax.saxutils import escape

from .events import EventKind
from .jsonio import canonical_dumps, write_json
from .pyramid import Pyramid, _rotation_value
from .scheduler import (
    PHASE_CREATION,
    PHASE_DESTRUCTION,
    RenderSchedule,
)
from .tactics import TacticKind

MANIFEST_VERSION = 1

#: Fixed categorical palette for data marks (player marks use team colors).
PALETTE: tuple[tuple[int, int, int], ...] = (
    (31, 119, 180), (255, 127, 14), (44, 160, 44), (214, 39, 40),
    (148, 103, 189), (140, 86, 75), (227, 119, 194), (127, 127, 127),
)


def set_palette(colors) -> None:
    """Process-wide palette override (config `palette`)."""
    global PALETTE
    if not colors or any(len(c) != 3 for c in colors):
        raise ValueError("palette must be a non-empty list of [r,g,b] triples")
    PALETTE = tuple(tuple(int(v) for v in c) for c in colors)
PLAYER_COLORS = {"A": (220, 40, 40), "B": (20, 20, 20)}

HEATMAP_ALPHA_MIN = 0.15
HEATMAP_ALPHA_MAX = 0.80

DEFAULT_Z = {
    "spotlight": 5, "heatmap_region": 10, "region": 10, "bounding_box": 15,
    "polyline": 20, "arrow": 20, "skeleton": 25, "dot": 30, "label": 40,
}

SKELETON_BONES = (
    ("left_shoulder", "right_shoulder"), ("left_shoulder", "left_elbow"),
    ("left_elbow", "left_wrist"), ("right_shoulder", "right_elbow"),
    ("right_elbow", "right_wrist"), ("left_shoulder", "left_hip"),
    ("right_shoulder", "right_hip"), ("left_hip", "right_hip"),
    ("left_hip", "left_knee"), ("left_knee", "left_ankle"),
    ("right_hip", "right_knee"), ("right_knee", "right_ankle"),
    ("nose", "left_shoulder"), ("nose", "right_shoulder"),
)

ROUTE_SAMPLES = 24


class RenderError(ValueError):
    pass


class RenderDataError(RenderError):
    """The mapping's data is not resolvable at the requested frame."""


@dataclass
class OverlayItem:
    mapping_id: str
    visual: str
    geometry: dict
    style: dict
    z: int
    phase: str


@dataclass
class OverlayFrame:
    output_index: int
    source_frame: int
    canvas: tuple[int, int]
    items: list[OverlayItem] = field(default_factory=list)


def resolve_style(mapping, mapping_index: int) -> dict:
    """Mapping style with palette/team-color defaults filled in."""
    subject = mapping.selection.subject
    if subject in PLAYER_COLORS:
        color = PLAYER_COLORS[subject]
    else:
        color = PALETTE[mapping_index % len(PALETTE)]
    style = {
        "color": list(color),
        "opacity": 1.0,
        "stroke_width": 4.0,
        "font_size": 36,
        "z": DEFAULT_Z.get(mapping.visual, 20),
    }
    user = dict(mapping.style)
    if "color" in user:
        c = user.pop("color")
        if not (isinstance(c, (list, tuple)) and len(c) == 3):
            raise RenderError(f"style color must be [r,g,b], got {c!r}")
        style["color"] = [int(v) for v in c]
    for key in ("opacity", "stroke_width", "font_size", "z", "label"):
        if key in user:
            style[key] = user.pop(key)
    if float(style["stroke_width"]) <= 0:
        raise RenderError("stroke_width must be > 0")
    if not 0.0 <= float(style["opacity"]) <= 1.0:
        raise RenderError("opacity must be within [0, 1]")
    return style


def _phase_factor(schedule: RenderSchedule, mapping_id: str, out_index: int,
                  phase: str) -> float:
    """Opacity multiplier for creation/destruction ramps, derived from the
    position within the contiguous run of the same phase."""
    if phase not in (PHASE_CREATION, PHASE_DESTRUCTION):
        return 1.0

    def phase_at(i: int) -> Optional[str]:
        for mid, ph in schedule.frames[i].items:
            if mid == mapping_id:
                return ph
        return None

    start = out_index
    while start > 0 and phase_at(start - 1) == phase:
        start -= 1
    end = out_index
    while end + 1 < len(schedule.frames) and phase_at(end + 1) == phase:
        end += 1
    length = end - start + 1
    pos = out_index - start
    if phase == PHASE_CREATION:
        return (pos + 1) / length
    return (length - pos) / (length + 1)


def _bbox_anchor(bbox) -> tuple[float, float]:
    x, y, w, h = bbox
    return (x + w / 2.0, y + h)


def _find_fact(ctx: Pyramid, kind: TacticKind, anchor_frame: int):
    events_by_id = {e.event_id: e for e in ctx.events}
    hits = []
    for f in ctx.facts:
        if f.kind != kind:
            continue
        anchor = events_by_id.get(f.anchor_event)
        if anchor is not None and anchor.span[0] <= anchor_frame <= anchor.span[1]:
            hits.append((anchor.span[0], f.fact_id, f))
    if not hits:
        raise RenderDataError(f"no {kind.value} fact covers frame {anchor_frame}")
    hits.sort(key=lambda t: (t[0], t[1]))
    return hits[0][2]


def _stroke_for(ctx: Pyramid, subject: str, frame: int):
    for e in ctx.events:
        if e.kind == EventKind.STROKE and e.subject == subject \
                and e.span[0] <= frame <= e.span[1]:
            return e
    raise RenderDataError(f"no stroke of player {subject} covers frame {frame}")


def _heat_cells(ctx: Pyramid, cells: list[dict]) -> list[dict]:
    p_max = max(c["p"] for c in cells)
    out = []
    for c in cells:
        alpha = HEATMAP_ALPHA_MIN + (HEATMAP_ALPHA_MAX - HEATMAP_ALPHA_MIN) * (c["p"] / p_max)
        poly = ctx.grid.cell_polygon(c["half"], c["row"], c["col"])
        out.append({"points": [[p[0], p[1]] for p in poly], "alpha": alpha})
    return out


def _quadratic_arc(start, control, end, samples: int = ROUTE_SAMPLES) -> list[list[float]]:
    pts = []
    for i in range(samples + 1):
        t = i / samples
        u = 1.0 - t
        x = u * u * start[0] + 2 * u * t * control[0] + t * t * end[0]
        y = u * u * start[1] + 2 * u * t * control[1] + t * t * end[1]
        pts.append([x, y])
    return pts


def _format_value(value: float) -> str:
    if float(value) == int(value):
        return str(int(value))
    return f"{value:.1f}"


def realize_item(mapping, ctx: Pyramid, src_frame: int, mapping_index: int = 0,
                 phase: str = "sustain", phase_factor: float = 1.0) -> OverlayItem:
    """Attribute-specific geometry for one mapping at one source frame.

    Raises RenderDataError when the underlying data is absent (occluded
    ball, no covering stroke, missing fact).
    """
    attr = mapping.selection.attribute
    visual = mapping.visual
    subject = mapping.selection.subject
    style = resolve_style(mapping, mapping_index)
    style["opacity"] = float(style["opacity"]) * phase_factor
    geometry: dict

    def ball_center(frame: int):
        c = ctx.track.centers[frame]
        if c is None:
            raise RenderDataError(f"ball not resolvable at frame {frame}")
        return c

    if attr == "ball_position":
        geometry = {"kind": "dot", "point": list(ball_center(src_frame)), "radius": 10.0}
    elif attr == "ball_trajectory":
        s0, s1 = mapping.selection.source_span
        path = [[c[0], c[1]] for c in (ctx.track.centers[i] for i in range(s0, s1 + 1))
                if c is not None]
        if len(path) < 2:
            raise RenderDataError("trajectory span has fewer than 2 resolvable points")
        geometry = {"kind": "polyline", "paths": [path], "arrow": visual == "arrow"}
    elif attr == "ball_rotation_speed":
        value = _rotation_value(ctx, src_frame)
        if value is None:
            raise RenderDataError("no rotation speed recorded")
        cx, cy = ball_center(src_frame)
        geometry = {"kind": "text", "text": f"{_format_value(value)} rpm",
                    "anchor": [cx + 18.0, cy - 18.0]}
    elif attr == "ball_placement":
        cell = _latest_bounce_cell(ctx, src_frame, mapping.selection.anchor_frame)
        if visual == "dot":
            geometry = {"kind": "dot", "point": list(cell["point"]), "radius": 12.0}
        else:
            poly = ctx.grid.cell_polygon(cell["half"], cell["row"], cell["col"])
            geometry = {"kind": "polygon", "points": [[p[0], p[1]] for p in poly]}
    elif attr == "player_position":
        det = ctx.dataset.player(src_frame, subject)
        if visual == "dot":
            geometry = {"kind": "dot", "point": list(_bbox_anchor(det.bbox)), "radius": 9.0}
        elif visual == "spotlight":
            x, y, w, h = det.bbox
            geometry = {"kind": "ellipse", "center": [x + w / 2.0, y + h],
                        "rx": w * 0.9, "ry": w * 0.35}
        else:
            geometry = {"kind": "rect", "bbox": list(det.bbox)}
    elif attr == "player_trajectory":
        s0, s1 = mapping.selection.source_span
        path = [[*_bbox_anchor(ctx.dataset.player(i, subject).bbox)] for i in range(s0, s1 + 1)]
        geometry = {"kind": "polyline", "paths": [path], "arrow": visual == "arrow"}
    elif attr == "player_posture":
        det = ctx.dataset.player(src_frame, subject)
        points = {n: [k.x, k.y] for n, k in sorted(det.keypoints.items()) if k.confidence >= 0.3}
        if not points:
            raise RenderDataError(f"posture of player {subject} fully occluded at frame {src_frame}")
        bones = [[a, b] for a, b in SKELETON_BONES if a in points and b in points]
        geometry = {"kind": "skeleton", "points": points, "bones": bones}
    elif attr == "player_name":
        det = ctx.dataset.player(src_frame, subject)
        text = style.get("label", f"Player {subject}")
        geometry = {"kind": "text", "text": str(text),
                    "anchor": [det.bbox[0], det.bbox[1] - 12.0]}
    elif attr == "stroke_technique":
        stroke = _stroke_for(ctx, subject, mapping.selection.anchor_frame)
        technique = stroke.attributes.get("technique", "unknown")
        det = ctx.dataset.player(src_frame, subject)
        geometry = {"kind": "text", "text": technique.replace("_", " "),
                    "anchor": [det.bbox[0], det.bbox[1] - 12.0]}
    elif attr == "potential_placements":
        fact = _find_fact(ctx, TacticKind.POTENTIAL_PLACEMENTS, mapping.selection.anchor_frame)
        geometry = {"kind": "cells", "cells": _heat_cells(ctx, fact.payload["cells"])}
    elif attr == "potential_routes":
        fact = _find_fact(ctx, TacticKind.POTENTIAL_ROUTES, mapping.selection.anchor_frame)
        routes = fact.payload["routes"]
        p_max = max(r["p"] for r in routes)
        paths = []
        alphas = []
        for r in routes:
            paths.append(_quadratic_arc(r["start"], r["control"], r["end"]))
            alphas.append(HEATMAP_ALPHA_MIN
                          + (HEATMAP_ALPHA_MAX - HEATMAP_ALPHA_MIN) * (r["p"] / p_max))
        geometry = {"kind": "polyline", "paths": paths, "alphas": alphas, "arrow": False}
    elif attr in ("stroke_effect", "player_tactic"):
        fact = _find_fact(ctx, TacticKind(attr), mapping.selection.anchor_frame)
        holder = fact.payload.get("subject", subject)
        if holder in ("A", "B"):
            det = ctx.dataset.player(src_frame, holder)
            anchor = [det.bbox[0], det.bbox[1] - 12.0]
        else:
            anchor = [ctx.dataset.video.width / 2.0, 48.0]
        geometry = {"kind": "text", "text": str(fact.payload.get("value", "")),
                    "anchor": anchor}
    elif attr == "key_stroke":
        fact = _find_fact(ctx, TacticKind.KEY_STROKE, mapping.selection.anchor_frame)
        anchor_event = next(e for e in ctx.events if e.event_id == fact.anchor_event)
        if anchor_event.subject in ("A", "B"):
            det = ctx.dataset.player(src_frame, anchor_event.subject)
            x, y, w, h = det.bbox
            geometry = {"kind": "ellipse", "center": [x + w / 2.0, y + h],
                        "rx": w * 0.9, "ry": w * 0.35}
        else:
            geometry = {"kind": "dot", "point": list(ball_center(src_frame)), "radius": 16.0}
    else:
        raise RenderDataError(f"no realization for attribute {attr!r}")

    return OverlayItem(
        mapping_id=mapping.mapping_id, visual=visual, geometry=geometry,
        style=style, z=int(style["z"]), phase=phase,
    )


def _latest_bounce_cell(ctx: Pyramid, src_frame: int, anchor_frame: int) -> dict:
    best = None
    for e in ctx.events:
        if e.kind != EventKind.BOUNCE:
            continue
        if e.span[0] <= max(src_frame, anchor_frame):
            if best is None or e.span[0] > best.span[0]:
                best = e
    if best is None:
        raise RenderDataError("no bounce recorded at or before this frame")
    return best.attributes["placement"]


def realize_frame(schedule: RenderSchedule, ctx: Pyramid, out_index: int,
                  script=None) -> OverlayFrame:
    """Overlay document for one output frame of a schedule.

    Items whose data is unresolvable at the frame are omitted; item order
    is (z, mapping id) regardless of input mapping order.
    """
    if out_index < 0 or out_index >= schedule.total_frames:
        raise RenderError(f"output index {out_index} out of range 0..{schedule.total_frames - 1}")
    if script is None:
        raise RenderError("realize_frame needs the script for mapping definitions")
    frame = schedule.frames[out_index]
    index_of = {m.mapping_id: i for i, m in enumerate(script.mappings)}
    items: list[OverlayItem] = []
    for mapping_id, phase in frame.items:
        mapping = script.mapping(mapping_id)
        factor = _phase_factor(schedule, mapping_id, out_index, phase)
        try:
            items.append(realize_item(mapping, ctx, frame.src, index_of[mapping_id],
                                      phase, factor))
        except RenderDataError:
            continue
    items.sort(key=lambda it: (it.z, it.mapping_id))
    return OverlayFrame(output_index=out_index, source_frame=frame.src,
                        canvas=schedule.canvas, items=items)


# --- SVG serialization -----------------------------------------------------

def _f(value: float) -> str:
    v = float(value) + 0.0  # normalize -0.0
    return f"{v:.6f}"


def _color_hex(color) -> str:
    r, g, b = (max(0, min(255, int(c))) for c in color)
    return f"#{r:02x}{g:02x}{b:02x}"


def _points_attr(points) -> str:
    return " ".join(f"{_f(x)},{_f(y)}" for x, y in points)


def _item_svg(item: OverlayItem) -> list[str]:
    g = item.geometry
    color = _color_hex(item.style["color"])
    sw = _f(item.style["stroke_width"])
    parts: list[str] = []
    kind = g["kind"]
    if kind == "dot":
        x, y = g["point"]
        parts.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="{_f(g["radius"])}" fill="{color}"/>')
    elif kind == "polyline":
        alphas = g.get("alphas")
        for i, path in enumerate(g["paths"]):
            alpha = f' stroke-opacity="{_f(alphas[i])}"' if alphas else ""
            parts.append(
                f'<polyline points="{_points_attr(path)}" fill="none" '
                f'stroke="{color}" stroke-width="{sw}"{alpha}/>'
            )
            if g.get("arrow") and len(path) >= 2:
                parts.append(_arrow_head(path, color, item.style["stroke_width"]))
    elif kind == "rect":
        x, y, w, h = g["bbox"]
        parts.append(
            f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" '
            f'fill="none" stroke="{color}" stroke-width="{sw}"/>'
        )
    elif kind == "polygon":
        parts.append(
            f'<polygon points="{_points_attr(g["points"])}" fill="{color}" '
            f'fill-opacity="0.350000" stroke="{color}" stroke-width="{sw}"/>'
        )
    elif kind == "cells":
        for cell in g["cells"]:
            parts.append(
                f'<polygon points="{_points_attr(cell["points"])}" fill="{color}" '
                f'fill-opacity="{_f(cell["alpha"])}" stroke="{color}" stroke-width="1.000000"/>'
            )
    elif kind == "skeleton":
        points = g["points"]
        for a, b in g["bones"]:
            (x1, y1), (x2, y2) = points[a], points[b]
            parts.append(
                f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
                f'stroke="{color}" stroke-width="{sw}"/>'
            )
        for name in sorted(points):
            x, y = points[name]
            parts.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="4.000000" fill="{color}"/>')
    elif kind == "ellipse":
        cx, cy = g["center"]
        parts.append(
            f'<ellipse cx="{_f(cx)}" cy="{_f(cy)}" rx="{_f(g["rx"])}" ry="{_f(g["ry"])}" '
            f'fill="{color}" fill-opacity="0.250000" stroke="{color}" stroke-width="{sw}"/>'
        )
    elif kind == "text":
        x, y = g["anchor"]
        size = int(item.style["font_size"])
        parts.append(
            f'<text x="{_f(x)}" y="{_f(y)}" font-family="sans-serif" '
            f'font-size="{size}" fill="{color}">{escape(g["text"])}</text>'
        )
    else:
        raise RenderError(f"unknown geometry kind: {kind!r}")
    return parts


def _arrow_head(path, color: str, stroke_width: float) -> str:
    # Pure arithmetic (no trig) so output bytes are platform-independent.
    (x1, y1), (x2, y2) = path[-2], path[-1]
    length = math.hypot(x2 - x1, y2 - y1)
    if length == 0.0:
        return ""
    dx, dy = (x2 - x1) / length, (y2 - y1) / length
    size = max(10.0, stroke_width * 3.0)
    c, s = 0.9, 0.435  # ~25 degree half-angle
    left = (x2 - size * (dx * c - dy * s), y2 - size * (dy * c + dx * s))
    right = (x2 - size * (dx * c + dy * s), y2 - size * (dy * c - dx * s))
    return (
        f'<polygon points="{_points_attr([(x2, y2), left, right])}" fill="{color}"/>'
    )


def render_frame(overlay: OverlayFrame) -> str:
    """Byte-stable SVG document for an overlay frame."""
    w, h = overlay.canvas
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
    ]
    for item in overlay.items:
        lines.append(
            f'<g data-mapping="{escape(item.mapping_id)}" data-phase="{item.phase}" '
            f'opacity="{_f(item.style["opacity"])}">'
        )
        lines.extend(_item_svg(item))
        lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


# --- batch output ----------------------------------------------------------

def composite_sequence(schedule: RenderSchedule, ctx: Pyramid, script,
                       out_dir: str | Path,
                       frames_dir: Optional[str | Path] = None) -> dict:
    """Write per-output-frame SVGs plus a frame-map manifest; with a source
    image directory, also alpha-composite PNG frames.
    """
    out = Path(out_dir)
    overlays = out / "overlays"
    overlays.mkdir(parents=True, exist_ok=True)
    frames_out = None
    if frames_dir is not None:
        frames_out = out / "frames"
        frames_out.mkdir(parents=True, exist_ok=True)

    manifest_frames = []
    for i in range(schedule.total_frames):
        overlay = realize_frame(schedule, ctx, i, script=script)
        svg = render_frame(overlay)
        name = f"{i:06d}.svg"
        (overlays / name).write_text(svg, encoding="utf-8")
        frame = schedule.frames[i]
        manifest_frames.append({
            "i": i,
            "src": frame.src,
            "kind": frame.kind,
            "overlay": f"overlays/{name}",
            "items": [[mid, phase] for mid, phase in frame.items],
        })
        if frames_out is not None:
            _composite_png(overlay, Path(frames_dir), frames_out / f"{i:06d}.png")

    manifest = {
        "schema_version": MANIFEST_VERSION,
        "canvas": [schedule.canvas[0], schedule.canvas[1]],
        "fps": schedule.fps,
        "order": schedule.order.value,
        "clip": [schedule.clip[0], schedule.clip[1]],
        "total_frames": schedule.total_frames,
        "frames": manifest_frames,
    }
    write_json(out / "manifest.json", manifest)
    return manifest


def _composite_png(overlay: OverlayFrame, frames_dir: Path, out_path: Path) -> None:
    from PIL import Image

    src_path = frames_dir / f"{overlay.source_frame:06d}.png"
    if not src_path.exists():
        raise RenderError(f"missing source image: {src_path}")
    base = Image.open(src_path).convert("RGBA")
    if base.size != overlay.canvas:
        raise RenderError(
            f"source image {src_path.name} is {base.size[0]}x{base.size[1]}, "
            f"canvas is {overlay.canvas[0]}x{overlay.canvas[1]}"
        )
    layer = rasterize_overlay(overlay)
    Image.alpha_composite(base, layer).save(out_path)


def rasterize_overlay(overlay: OverlayFrame):
    """Raster RGBA layer of the overlay (PNG compositing path)."""
    from PIL import Image, ImageDraw

    layer = Image.new("RGBA", overlay.canvas, (0, 0, 0, 0))
    draw = ImageDraw.Draw(layer)
    for item in overlay.items:
        color = tuple(int(c) for c in item.style["color"])
        alpha = int(round(255 * float(item.style["opacity"])))
        rgba = color + (alpha,)
        sw = max(1, int(round(float(item.style["stroke_width"]))))
        g = item.geometry
        kind = g["kind"]
        if kind == "dot":
            x, y = g["point"]
            r = g["radius"]
            draw.ellipse([x - r, y - r, x + r, y + r], fill=rgba)
        elif kind == "polyline":
            for path in g["paths"]:
                draw.line([tuple(p) for p in path], fill=rgba, width=sw)
        elif kind == "rect":
            x, y, w, h = g["bbox"]
            draw.rectangle([x, y, x + w, y + h], outline=rgba, width=sw)
        elif kind == "polygon":
            draw.polygon([tuple(p) for p in g["points"]],
                         fill=color + (int(alpha * 0.35),), outline=rgba)
        elif kind == "cells":
            for cell in g["cells"]:
                a = int(round(alpha * cell["alpha"]))
                draw.polygon([tuple(p) for p in cell["points"]], fill=color + (a,))
        elif kind == "skeleton":
            pts = g["points"]
            for a, b in g["bones"]:
                draw.line([tuple(pts[a]), tuple(pts[b])], fill=rgba, width=sw)
            for name in sorted(pts):
                x, y = pts[name]
                draw.ellipse([x - 4, y - 4, x + 4, y + 4], fill=rgba)
        elif kind == "ellipse":
            cx, cy = g["center"]
            rx, ry = g["rx"], g["ry"]
            draw.ellipse([cx - rx, cy - ry, cx + rx, cy + ry],
                         fill=color + (int(alpha * 0.25),), outline=rgba, width=sw)
        elif kind == "text":
            x, y = g["anchor"]
            draw.text((x, y), g["text"], fill=rgba)
    return layer


def manifest_dumps(manifest: dict) -> str:
    return canonical_dumps(manifest)
