"""Acceptance suite: one test per criterion, exact tolerances pinned.

Run `pytest tests/test_acceptance.py -v`; a one-line PASS/FAIL summary per
criterion is printed at the end of the session (see conftest).
"""

import hashlib
import random
import time
from collections import Counter
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from rallyvis.design_space import NarrativeOrder
from rallyvis.events import DetectorParams, Event, EventKind, detect_bounces, detect_strokes, segment_turns
from rallyvis.geometry import END_LINE_ROW, TableGrid
from rallyvis.jsonio import read_json
from rallyvis.pipeline import build_bundle
from rallyvis.recommend import (
    DEFAULT_FALLBACK_TABLE,
    MappingStats,
    conditional_probability,
    compile_stats,
    order_ratios,
    recommend,
)
from rallyvis.render import composite_sequence
from rallyvis.scheduler import (
    KIND_PLAY,
    KIND_REVERSE,
    PHASE_CREATION,
    AugmentationScript,
    DataSelection,
    MappingSpec,
    ZigZagSpec,
    build_dag,
    compile_schedule,
)
from rallyvis.service.app import create_app
from rallyvis.tactics import infer_potential_placements
from rallyvis.tracking import VideoMeta, build_ball_track

from conftest import GOLDENS, fixture_path
from oracles import oracle_bounce_frames, oracle_strokes, synthesized_rally

VIDEO = VideoMeta(width=1920, height=1080, fps=50.0, frame_count=300)
SCRIPT_NAMES = ("linear", "flash_forward", "zigzag")


def _mapping(mid, frame, hold, span=None, pass_index=1):
    return MappingSpec(
        mapping_id=mid,
        selection=DataSelection(mid, "ball_position", "ball", frame,
                                span or (frame, frame)),
        visual="dot", hold_frames=hold, pass_index=pass_index,
    )


def test_scheduler_duration_identities():
    started = time.monotonic()

    ff = AugmentationScript(
        clip=(0, 99), order=NarrativeOrder.FLASH_FORWARD,
        mappings=[_mapping("m0", 10, 40), _mapping("m1", 30, 40), _mapping("m2", 60, 40)],
    )
    assert compile_schedule(ff, VIDEO).total_frames == 220

    zz = AugmentationScript(
        clip=(0, 99), order=NarrativeOrder.ZIGZAG,
        mappings=[_mapping("m0", 10, 0)], zigzag=ZigZagSpec(60, 20),
    )
    zz_schedule = compile_schedule(zz, VIDEO)
    assert zz_schedule.total_frames == 140
    kinds = Counter(f.kind for f in zz_schedule.frames)
    assert kinds[KIND_PLAY] == 120 and kinds[KIND_REVERSE] == 20

    linear = AugmentationScript(
        clip=(0, 99), order=NarrativeOrder.LINEAR,
        mappings=[_mapping("m0", 10, 40), _mapping("m1", 30, 40)],
    )
    linear_schedule = compile_schedule(linear, VIDEO)
    assert linear_schedule.total_frames == 100
    assert [f.src for f in linear_schedule.frames] == list(range(100))

    assert time.monotonic() - started < 1.0


def test_topological_soundness_randomized():
    rng = random.Random(2024)
    violations = 0
    for _ in range(1000):
        order = rng.choice([NarrativeOrder.FLASH_FORWARD, NarrativeOrder.FLASH_BACK])
        clip_len = rng.randint(40, 200)
        t0 = rng.randint(0, 299 - clip_len)
        clip = (t0, t0 + clip_len - 1)
        n_maps = rng.randint(1, 8)
        frames = sorted(rng.sample(range(clip[0], clip[1] + 1),
                                   min(n_maps, clip_len)))
        mappings = [_mapping(f"m{i}", f, rng.randint(2, 50),
                             span=(f, min(clip[1], f + rng.randint(0, 30))))
                    for i, f in enumerate(frames)]
        script = AugmentationScript(clip=clip, order=order, mappings=mappings)
        dag = build_dag(script)
        schedule = compile_schedule(script, VIDEO)

        creation_start = {}
        creation_runs = Counter()
        previous_active = set()
        for i, frame in enumerate(schedule.frames):
            active = {m for m, _ in frame.items}
            for mid, phase in frame.items:
                if phase == PHASE_CREATION and mid not in creation_start:
                    creation_start[mid] = i
            for mid in active - previous_active:
                creation_runs[mid] += 1
            previous_active = active
        for src, dst in dag.virtual_edges():
            if src in creation_start and dst in creation_start:
                if not creation_start[src] < creation_start[dst]:
                    violations += 1
        for mid, runs in creation_runs.items():
            if runs != 1:
                violations += 1
    assert violations == 0


def test_recommender_oracle_equivalence():
    attrs = sorted(DEFAULT_FALLBACK_TABLE)
    visuals = ["arrow", "dot", "heatmap_region", "label", "polyline",
               "region", "skeleton", "spotlight"]
    rng = random.Random(77)
    orders = list(NarrativeOrder)
    mismatches = 0
    for _ in range(500):
        counts = {}
        for _ in range(rng.randint(0, 30)):
            key = (rng.choice(attrs), rng.choice(visuals), rng.choice(orders))
            counts[key] = counts.get(key, 0) + rng.randint(1, 15)
        stats = MappingStats()
        stats.counts = counts
        attr, order = rng.choice(attrs), rng.choice(orders)

        candidates = {v: c for (d, v, o), c in counts.items()
                      if d == attr and o == order and c > 0}
        rec = recommend(stats, attr, order)
        if candidates:
            best_count = max(candidates.values())
            expected = min(v for v, c in candidates.items() if c == best_count)
            if rec.visual != expected or rec.source != "corpus":
                mismatches += 1
        elif rec.source != "fallback" or rec.visual != DEFAULT_FALLBACK_TABLE[attr]:
            mismatches += 1

        # Conditional probabilities sum to 1 over the order's support.
        for o in orders:
            if any(oo == o for (_, _, oo) in counts):
                total = sum(conditional_probability(stats, d, v, o)
                            for d in attrs for v in visuals)
                if abs(total - 1.0) > 1e-12:
                    mismatches += 1

        # Argmax invariance under uniform count scaling.
        scaled = MappingStats()
        scaled.counts = {k: 13 * c for k, c in counts.items()}
        if recommend(scaled, attr, order).visual != rec.visual:
            mismatches += 1
    assert mismatches == 0


def test_corpus_stats_arithmetic():
    from rallyvis.design_space import load_annotations
    clips = load_annotations(fixture_path("corpus40.json"))
    assert len(clips) == 40
    stats = compile_stats(clips)
    assert stats.order_totals[NarrativeOrder.LINEAR] == 21
    ratio = order_ratios(stats)["linear"]
    assert abs(100.0 * ratio - 52.5) < 0.1  # percentage points


def test_event_detection_oracle_equivalence():
    params = DetectorParams()
    for seed in range(200):
        ds = synthesized_rally(seed)
        track = build_ball_track(ds)
        strokes = detect_strokes(track, ds, params)
        got = [(s.subject, s.span[0], s.span[1], s.hit_frame) for s in strokes]
        assert got == oracle_strokes(track, ds, params), f"seed {seed}"

        quad = ds.frames[0].table.quad
        grid = TableGrid(quad, ds.frames[0].table.net_x)
        bounces = detect_bounces(track, grid)
        assert [b.span[0] for b in bounces] == oracle_bounce_frames(track, quad), f"seed {seed}"
        for b in bounces:
            cell = b.attributes["placement"]
            containing = [
                (h, r, c) for h in ("A", "B") for r in range(3) for c in range(3)
                if _point_in(cell["point"], grid.cell_polygon(h, r, c))
            ]
            assert (cell["half"], cell["row"], cell["col"]) in containing, f"seed {seed}"

        turns = segment_turns(strokes, len(ds.frames) - 1)
        spans = [t.span for t in turns]
        for (a0, a1), (b0, b1) in zip(spans, spans[1:]):
            assert a1 + 1 == b0, f"seed {seed}: gap/overlap in turns"
        if spans:
            hits = [s.hit_frame for s in strokes if s.hit_frame is not None]
            assert spans[0][0] == min(hits)
            assert spans[-1][1] == len(ds.frames) - 1


def _point_in(point, polygon):
    px, py = point
    sign = 0
    for k in range(len(polygon)):
        ax, ay = polygon[k]
        bx, by = polygon[(k + 1) % len(polygon)]
        cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        if abs(cross) < 1e-9:
            continue
        side = 1 if cross > 0 else -1
        if sign == 0:
            sign = side
        elif side != sign:
            return False
    return True


def test_tactic_endline_rule():
    grid = TableGrid(((650.0, 620.0), (1270.0, 620.0), (1360.0, 700.0), (560.0, 700.0)),
                     960.0)
    rng = random.Random(11)
    for trial in range(100):
        half = rng.choice(["A", "B"])
        col = rng.randint(0, 2)
        point = grid.cell_center(half, END_LINE_ROW, col)
        stroke = Event(
            event_id=f"stroke-{half}-{trial:06d}", kind=EventKind.STROKE,
            subject=half, span=(10, 30), hit_frame=20,
            attributes={"reception": {"half": half, "row": END_LINE_ROW,
                                      "col": col, "point": list(point)}},
        )
        fact = infer_potential_placements(stroke, grid)
        cells = fact.payload["cells"]
        opponent = "B" if half == "A" else "A"
        assert {(c["half"], c["row"]) for c in cells} == {(opponent, END_LINE_ROW)}
        assert sorted(c["col"] for c in cells) == [0, 1, 2]
        total = sum(c["p"] for c in cells)
        assert abs(total - 1.0) <= 1e-9
        assert all(c["p"] >= 0 for c in cells)


@pytest.fixture(scope="module")
def golden_bundle():
    return build_bundle(read_json(fixture_path("rally300.json")))


def _render_all(bundle, out_root: Path) -> dict[str, Path]:
    outs = {}
    for name in SCRIPT_NAMES:
        script = AugmentationScript.from_dict(read_json(fixture_path(f"script_{name}.json")))
        schedule = compile_schedule(script, bundle.dataset.video)
        out = out_root / name
        composite_sequence(schedule, bundle.pyramid, script, out)
        outs[name] = out
    return outs


def test_determinism_goldens(golden_bundle, tmp_path):
    run1 = _render_all(golden_bundle, tmp_path / "run1")
    run2 = _render_all(golden_bundle, tmp_path / "run2")
    for name in SCRIPT_NAMES:
        files1 = sorted(p.relative_to(run1[name]).as_posix()
                        for p in run1[name].rglob("*") if p.is_file())
        files2 = sorted(p.relative_to(run2[name]).as_posix()
                        for p in run2[name].rglob("*") if p.is_file())
        assert files1 == files2
        for rel in files1:
            assert (run1[name] / rel).read_bytes() == (run2[name] / rel).read_bytes(), \
                f"{name}/{rel} differs between runs"
        # Committed goldens pin cross-platform stability.
        checksums = read_json(GOLDENS / name / "checksums.json")
        assert set(checksums) == set(files1)
        for rel, digest in checksums.items():
            got = hashlib.sha256((run1[name] / rel).read_bytes()).hexdigest()
            assert got == digest, f"{name}/{rel} diverges from committed golden"
        golden_manifest = (GOLDENS / name / "manifest.json").read_bytes()
        assert (run1[name] / "manifest.json").read_bytes() == golden_manifest
        for sample in sorted((GOLDENS / name / "samples").glob("*.svg")):
            produced = run1[name] / "overlays" / sample.name
            assert produced.read_bytes() == sample.read_bytes(), \
                f"{name}/{sample.name} diverges from committed golden sample"


def test_service_cli_parity(golden_bundle, tmp_path, rally_doc):
    batch = _render_all(golden_bundle, tmp_path / "batch")
    app = create_app(data_dir=tmp_path / "svc")
    with TestClient(app) as client:
        pid = client.post("/projects", json={"tracking": rally_doc}).json()["project_id"]
        for name in SCRIPT_NAMES:
            script_doc = read_json(fixture_path(f"script_{name}.json"))
            r = client.put(f"/projects/{pid}/scripts/{name}", json=script_doc)
            assert r.status_code == 200, r.text
            manifest = read_json(batch[name] / "manifest.json")
            for frame in manifest["frames"]:
                idx = frame["i"]
                preview = client.get(f"/projects/{pid}/preview/{name}/{idx}")
                assert preview.status_code == 200
                batch_bytes = (batch[name] / "overlays" / f"{idx:06d}.svg").read_bytes()
                assert preview.content == batch_bytes, \
                    f"{name} frame {idx}: preview differs from batch render"
