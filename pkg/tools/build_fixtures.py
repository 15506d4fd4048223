#!/usr/bin/env python3
"""Regenerate the committed test fixtures (tracking rally, corpus,
tactic import, and the three scripted clips). Deterministic: running it
twice produces identical bytes."""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from rallyvis.design_space import dump_annotations  # noqa: E402
from rallyvis.fixtures import make_corpus, make_rally  # noqa: E402
from rallyvis.jsonio import canonical_dumps  # noqa: E402
from rallyvis.pipeline import build_bundle  # noqa: E402
from rallyvis.tracking import dataset_to_dict, dump_dataset  # noqa: E402

FIXTURES = ROOT / "tests" / "fixtures"


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)

    dataset = make_rally()
    (FIXTURES / "rally300.json").write_text(dump_dataset(dataset), encoding="utf-8")

    (FIXTURES / "corpus40.json").write_text(dump_annotations(make_corpus()), encoding="utf-8")

    bundle = build_bundle(dataset_to_dict(dataset))
    strokes = [e for e in bundle.events if e.kind.value == "stroke"]
    turns = [e for e in bundle.events if e.kind.value == "turn"]

    # Key-stroke import anchored at the second-to-last stroke.
    key = strokes[-2]
    tactics = {
        "schema_version": 1,
        "facts": [
            {"kind": "key_stroke", "anchor_event": key.event_id,
             "payload": {"note": "decides the rally"}},
        ],
    }
    (FIXTURES / "tactics_import.json").write_text(canonical_dumps(tactics), encoding="utf-8")

    clip = [turns[-2].span[0], turns[-1].span[1]]
    anchor = strokes[-2].hit_frame
    future_hit = strokes[-1].hit_frame
    route_span = [turns[-2].span[0], turns[-2].span[1]]

    def mapping(mid, attribute, subject, frame, span, visual, hold=40, pass_index=1):
        return {
            "mapping_id": mid, "attribute": attribute, "subject": subject,
            "anchor_frame": frame, "source_span": span, "visual": visual,
            "style": {}, "hold_frames": hold, "pass": pass_index,
        }

    triple = [
        mapping("m00", "ball_rotation_speed", "ball", anchor, [anchor, anchor], "label"),
        mapping("m01", "potential_placements", "ball", anchor, [anchor, anchor], "heatmap_region"),
        mapping("m02", "potential_routes", "ball", anchor, route_span, "polyline"),
    ]

    linear = {"schema_version": 1, "clip": clip, "order": "linear", "mappings": triple}
    (FIXTURES / "script_linear.json").write_text(canonical_dumps(linear), encoding="utf-8")

    ff = {
        "schema_version": 1, "clip": clip, "order": "flash_forward",
        "mappings": triple + [
            mapping("m03", "stroke_technique", "B", future_hit,
                    [future_hit, future_hit], "label"),
        ],
    }
    (FIXTURES / "script_flash_forward.json").write_text(canonical_dumps(ff), encoding="utf-8")

    zigzag = {
        "schema_version": 1, "clip": clip, "order": "zigzag",
        "mappings": [
            mapping("m00", "potential_placements", "ball", anchor, [anchor, anchor],
                    "heatmap_region", hold=0),
            mapping("m01", "stroke_technique", "B", future_hit,
                    [future_hit, future_hit], "label", hold=0, pass_index=2),
            mapping("m02", "player_posture", "B", future_hit,
                    [future_hit, future_hit], "skeleton", hold=0, pass_index=2),
        ],
        "zigzag": {"anchor": future_hit, "rewind_frames": 30},
    }
    (FIXTURES / "script_zigzag.json").write_text(canonical_dumps(zigzag), encoding="utf-8")

    meta = {
        "clip": clip, "anchor": anchor, "future_hit": future_hit,
        "turn_count": len(turns),
        "stroke_ids": [s.event_id for s in strokes],
        "key_stroke_anchor": key.event_id,
    }
    (FIXTURES / "fixture_meta.json").write_text(canonical_dumps(meta), encoding="utf-8")
    print(json.dumps(meta, indent=2))


if __name__ == "__main__":
    main()
