import json
from pathlib import Path

import pytest

from rallyvis.design_space import NarrativeOrder
from rallyvis.jsonio import read_json
from rallyvis.render import (
    OverlayFrame,
    OverlayItem,
    RenderDataError,
    RenderError,
    composite_sequence,
    rasterize_overlay,
    realize_frame,
    realize_item,
    render_frame,
    resolve_style,
)
from rallyvis.scheduler import AugmentationScript, DataSelection, MappingSpec, compile_schedule


def _mapping(attribute, subject, frame, span=None, visual=None, style=None):
    from rallyvis.recommend import DEFAULT_FALLBACK_TABLE
    return MappingSpec(
        mapping_id="m00",
        selection=DataSelection("m00", attribute, subject, frame, span or (frame, frame)),
        visual=visual or DEFAULT_FALLBACK_TABLE[attribute],
        style=style or {},
    )


def test_rotation_speed_label(rally_bundle, fixture_meta):
    anchor = fixture_meta["anchor"]
    item = realize_item(_mapping("ball_rotation_speed", "ball", anchor),
                        rally_bundle.pyramid, anchor)
    assert item.geometry["kind"] == "text"
    assert item.geometry["text"] == "7000 rpm"


def test_heatmap_uniform_distribution_equal_alpha(rally_bundle, fixture_meta):
    anchor = fixture_meta["anchor"]
    item = realize_item(_mapping("potential_placements", "ball", anchor),
                        rally_bundle.pyramid, anchor)
    assert item.geometry["kind"] == "cells"
    alphas = {round(c["alpha"], 12) for c in item.geometry["cells"]}
    assert len(alphas) == 1  # uniform probabilities -> equal alpha


def test_heatmap_alpha_monotone_in_probability(rally_bundle, fixture_meta):
    from rallyvis.render import _heat_cells
    cells = [
        {"half": "B", "row": 2, "col": 0, "p": 0.5, "center": [0, 0]},
        {"half": "B", "row": 2, "col": 1, "p": 0.3, "center": [0, 0]},
        {"half": "B", "row": 2, "col": 2, "p": 0.2, "center": [0, 0]},
    ]
    heat = _heat_cells(rally_bundle.pyramid, cells)
    assert heat[0]["alpha"] > heat[1]["alpha"] > heat[2]["alpha"]


def test_trajectory_polyline_matches_track_vertices(rally_bundle, fixture_meta):
    start = fixture_meta["anchor"]
    span = (start, start + 4)
    item = realize_item(_mapping("ball_trajectory", "ball", start, span=span),
                        rally_bundle.pyramid, start)
    path = item.geometry["paths"][0]
    track = rally_bundle.pyramid.track
    expected = [[c[0], c[1]] for c in (track.centers[i] for i in range(span[0], span[1] + 1))
                if c is not None]
    assert len(path) == 5
    for got, want in zip(path, expected):
        assert abs(got[0] - want[0]) <= 1e-6
        assert abs(got[1] - want[1]) <= 1e-6


def test_posture_skeleton_and_missing_data(rally_bundle, fixture_meta):
    item = realize_item(_mapping("player_posture", "A", 10), rally_bundle.pyramid, 10)
    assert item.geometry["kind"] == "skeleton"
    assert item.geometry["bones"]
    with pytest.raises(RenderDataError):
        realize_item(_mapping("potential_placements", "ball", 0), rally_bundle.pyramid, 0)


def test_styles_validated():
    m = _mapping("ball_position", "ball", 10, style={"opacity": 2.0})
    with pytest.raises(RenderError, match="opacity"):
        resolve_style(m, 0)
    m2 = _mapping("ball_position", "ball", 10, style={"stroke_width": -1})
    with pytest.raises(RenderError, match="stroke_width"):
        resolve_style(m2, 0)


def test_player_color_defaults():
    a = resolve_style(_mapping("player_position", "A", 10), 0)
    b = resolve_style(_mapping("player_position", "B", 10), 0)
    assert a["color"] == [220, 40, 40]   # team red
    assert b["color"] == [20, 20, 20]    # team black
    override = resolve_style(_mapping("player_position", "A", 10,
                                      style={"color": [1, 2, 3]}), 0)
    assert override["color"] == [1, 2, 3]


def test_svg_empty_frame_has_only_root():
    svg = render_frame(OverlayFrame(output_index=0, source_frame=0,
                                    canvas=(1920, 1080), items=[]))
    assert svg.startswith('<svg xmlns="http://www.w3.org/2000/svg" width="1920"')
    assert svg.count("<") == 2  # <svg> and </svg>


def test_svg_deterministic_bytes():
    item = OverlayItem(mapping_id="m00", visual="dot",
                       geometry={"kind": "dot", "point": [100.5, 50.0], "radius": 10.0},
                       style={"color": [10, 20, 30], "opacity": 0.5,
                              "stroke_width": 4.0, "font_size": 36},
                       z=30, phase="sustain")
    frame = OverlayFrame(output_index=0, source_frame=0, canvas=(640, 480), items=[item])
    assert render_frame(frame) == render_frame(frame)


def test_svg_coordinate_rounding_rule():
    item = OverlayItem(mapping_id="m00", visual="dot",
                       geometry={"kind": "dot", "point": [100.1234567, 50.0], "radius": 10.0},
                       style={"color": [0, 0, 0], "opacity": 1.0,
                              "stroke_width": 4.0, "font_size": 36},
                       z=30, phase="sustain")
    svg = render_frame(OverlayFrame(output_index=0, source_frame=0,
                                    canvas=(640, 480), items=[item]))
    assert 'cx="100.123457"' in svg
    assert 'cy="50.000000"' in svg


def test_item_order_invariant_under_permutation(rally_bundle, fixture_meta):
    anchor = fixture_meta["anchor"]

    def _script(order):
        mappings = [
            MappingSpec("m00", DataSelection("m00", "ball_rotation_speed", "ball",
                                             anchor, (anchor, anchor)), "label"),
            MappingSpec("m01", DataSelection("m01", "potential_placements", "ball",
                                             anchor, (anchor, anchor)), "heatmap_region"),
        ]
        if order:
            mappings.reverse()
        return AugmentationScript(clip=(anchor, anchor + 10),
                                  order=NarrativeOrder.LINEAR, mappings=mappings)

    video = rally_bundle.dataset.video
    frames = []
    for flip in (False, True):
        s = _script(flip)
        schedule = compile_schedule(s, video)
        overlay = realize_frame(schedule, rally_bundle.pyramid, 1, script=s)
        frames.append([(it.z, it.mapping_id) for it in overlay.items])
    assert frames[0] == frames[1]


def test_composite_sequence_counts_and_manifest(rally_bundle, tmp_path):
    meta = read_json(Path(__file__).parent / "fixtures" / "fixture_meta.json")
    script = AugmentationScript.from_dict(
        read_json(Path(__file__).parent / "fixtures" / "script_flash_forward.json"))
    schedule = compile_schedule(script, rally_bundle.dataset.video)
    manifest = composite_sequence(schedule, rally_bundle.pyramid, script, tmp_path)
    clip_len = meta["clip"][1] - meta["clip"][0] + 1
    assert manifest["total_frames"] == clip_len + 4 * 40
    svgs = sorted((tmp_path / "overlays").glob("*.svg"))
    assert len(svgs) == manifest["total_frames"]
    holds = [f for f in manifest["frames"] if f["kind"] == "hold"]
    assert len(holds) == 160
    assert (tmp_path / "manifest.json").exists()


def test_composite_with_frames_dir_and_dimension_mismatch(rally_bundle, tmp_path):
    from PIL import Image
    meta = rally_bundle.dataset.video
    script = AugmentationScript(
        clip=(0, 2), order=NarrativeOrder.LINEAR,
        mappings=[MappingSpec("m00", DataSelection("m00", "ball_position", "ball", 1, (1, 1)),
                              "dot")],
    )
    schedule = compile_schedule(script, meta)
    frames_dir = tmp_path / "src"
    frames_dir.mkdir()
    for i in range(3):
        Image.new("RGB", (meta.width, meta.height), (0, 0, 0)).save(
            frames_dir / f"{i:06d}.png")
    out = tmp_path / "out"
    composite_sequence(schedule, rally_bundle.pyramid, script, out, frames_dir=frames_dir)
    assert len(list((out / "frames").glob("*.png"))) == 3

    bad_dir = tmp_path / "bad"
    bad_dir.mkdir()
    for i in range(3):
        Image.new("RGB", (1280, 720), (0, 0, 0)).save(bad_dir / f"{i:06d}.png")
    with pytest.raises(RenderError, match="canvas"):
        composite_sequence(schedule, rally_bundle.pyramid, script, tmp_path / "out2",
                           frames_dir=bad_dir)

    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(RenderError, match="missing source image"):
        composite_sequence(schedule, rally_bundle.pyramid, script, tmp_path / "out3",
                           frames_dir=empty)


def test_rasterizer_produces_canvas_sized_layer(rally_bundle, fixture_meta):
    anchor = fixture_meta["anchor"]
    item = realize_item(_mapping("potential_placements", "ball", anchor),
                        rally_bundle.pyramid, anchor)
    layer = rasterize_overlay(OverlayFrame(output_index=0, source_frame=anchor,
                                           canvas=(1920, 1080), items=[item]))
    assert layer.size == (1920, 1080)
    assert layer.mode == "RGBA"


def test_player_spotlight_realization(rally_bundle):
    item = realize_item(_mapping("player_position", "A", 10, visual="spotlight"),
                        rally_bundle.pyramid, 10)
    assert item.geometry["kind"] == "ellipse"
