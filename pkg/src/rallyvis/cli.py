"""Batch command-line interface: a thin layer over the engine.

Every subcommand delegates to the core package; `serve` starts the HTTP
service. Exit codes: 0 success, 1 validation/usage error, 2 internal
error. `--json` switches stdout to machine-readable JSON.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .design_space import (
    DesignSpaceError,
    NarrativeOrder,
    load_annotations,
)
from .events import DetectorParams, EventError, dump_events
from .geometry import GeometryError
from .jsonio import canonical_dumps, digest, read_json, write_json
from .pipeline import build_bundle, purpose_level
from .pyramid import PyramidError, attributes_at, brush
from .recommend import RecommendError, compile_stats, recommend, stats_report
from .render import RenderError, composite_sequence
from .scheduler import (
    RAMP_FRAMES,
    AugmentationScript,
    ScheduleError,
    compile_schedule,
)
from .tactics import TacticError, dump_facts, load_rules
from .tracking import TrackingError, load_dataset

USER_ERRORS = (TrackingError, EventError, TacticError, PyramidError, ScheduleError,
               RenderError, RecommendError, DesignSpaceError, GeometryError,
               ValueError, FileNotFoundError, LookupError)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if p.suffix == ".toml":
        try:
            import tomllib  # py311+
        except ModuleNotFoundError:
            import tomli as tomllib  # type: ignore[no-redef]
        return tomllib.loads(p.read_text(encoding="utf-8"))
    return read_json(p)


def _detector_params(args, config: dict) -> DetectorParams:
    cfg = dict(config.get("detector", {}))
    for key in ("tau_kp", "delta_reach_frac", "rho_net", "net_window"):
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if getattr(args, "no_alternation", False):
        cfg["enforce_alternation"] = False
    return DetectorParams(**cfg)


def _emit(args, payload: dict, human: str | None = None) -> None:
    if getattr(args, "json", False):
        sys.stdout.write(canonical_dumps(payload))
    else:
        sys.stdout.write((human if human is not None else canonical_dumps(payload)) + "\n")


def _bundle_from_args(args, config: dict):
    tracking = read_json(args.tracking)
    tactics = read_json(args.tactics) if getattr(args, "tactics", None) else None
    corpus = None
    if getattr(args, "corpus", None):
        corpus = load_annotations(args.corpus)
    ruleset = load_rules(args.rules) if getattr(args, "rules", None) else None
    return build_bundle(tracking, tactics_doc=tactics, corpus=corpus,
                        params=_detector_params(args, config), ruleset=ruleset)


def cmd_ingest_validate(args, config) -> int:
    ds = load_dataset(args.file)
    payload = {
        "ok": True,
        "frame_count": ds.video.frame_count,
        "fps": ds.video.fps,
        "duration_s": ds.video.duration_s,
        "canvas": [ds.video.width, ds.video.height],
    }
    _emit(args, payload,
          f"ok: {ds.video.frame_count} frames @ {ds.video.fps:g} fps "
          f"({ds.video.duration_s:g} s, {ds.video.width}x{ds.video.height})")
    return 0


def cmd_events_detect(args, config) -> int:
    bundle = _bundle_from_args(args, config)
    doc = json.loads(dump_events(bundle.events))
    if args.out:
        write_json(args.out, doc)
    counts: dict[str, int] = {}
    for e in bundle.events:
        counts[e.kind.value] = counts.get(e.kind.value, 0) + 1
    _emit(args, {"counts": counts, "events": doc["events"]},
          ", ".join(f"{k}: {v}" for k, v in sorted(counts.items())))
    return 0


def cmd_pyramid_build(args, config) -> int:
    bundle = _bundle_from_args(args, config)
    doc = bundle.pyramid.to_dict()
    if args.out:
        write_json(args.out, doc)
    payload = {
        "root_id": doc["root_id"],
        "node_count": len(doc["nodes"]),
        "turn_count": len(bundle.pyramid.turns()),
        "fact_count": len(bundle.facts),
    }
    _emit(args, payload,
          f"pyramid: {payload['node_count']} nodes, {payload['turn_count']} turns, "
          f"{payload['fact_count']} tactic facts")
    return 0


def cmd_pyramid_query(args, config) -> int:
    bundle = _bundle_from_args(args, config)
    if args.subject is not None:
        if args.frame is None:
            raise ValueError("--frame is required with --subject")
        level = purpose_level(args.level or "education")
        names = attributes_at(bundle.pyramid, args.subject, args.frame, level)
        _emit(args, {"subject": args.subject, "frame": args.frame,
                     "level": level.token, "attributes": names},
              ", ".join(names) if names else "(none)")
        return 0
    if args.start is None or args.end is None:
        raise ValueError("pyramid query needs --start/--end or --subject/--frame")
    sub = brush(bundle.pyramid, (args.start, args.end))
    turns = [n.payload for n in sub.nodes.values() if n.payload.get("type") == "turn"]
    _emit(args, {"node_count": len(sub.nodes), "turns": sorted(t["event_id"] for t in turns)},
          f"{len(sub.nodes)} nodes, turns: {sorted(t['event_id'] for t in turns)}")
    return 0


def cmd_tactics_run(args, config) -> int:
    bundle = _bundle_from_args(args, config)
    doc = json.loads(dump_facts(bundle.facts))
    if args.out:
        write_json(args.out, doc)
    payload = {
        "fact_count": len(bundle.facts),
        "diagnostics": [{"rule_id": d.rule_id, "event_id": d.event_id, "message": d.message}
                        for d in bundle.diagnostics],
        "facts": doc["facts"],
    }
    _emit(args, payload,
          f"{len(bundle.facts)} facts, {len(bundle.diagnostics)} diagnostics")
    return 0


def cmd_tactics_import(args, config) -> int:
    setattr(args, "tactics", args.facts)
    bundle = _bundle_from_args(args, config)
    report = bundle.import_report or {"imported": 0, "skipped": []}
    payload = {"imported": report["imported"], "skipped": report["skipped"],
               "fact_count": len(bundle.facts)}
    _emit(args, payload,
          f"imported {report['imported']}, skipped {len(report['skipped'])}, "
          f"total facts {len(bundle.facts)}")
    return 0


def cmd_corpus_stats(args, config) -> int:
    clips = load_annotations(args.corpus)
    report = stats_report(compile_stats(clips))
    lines = [f"clips: {report['clip_count']}"]
    for order, ratio in report["order_ratios"].items():
        lines.append(f"  {order}: {100.0 * ratio:.1f}% ({report['order_totals'][order]})")
    _emit(args, report, "\n".join(lines))
    return 0


def cmd_recommend(args, config) -> int:
    clips = load_annotations(args.corpus) if args.corpus else None
    from .fixtures import make_corpus
    stats = compile_stats(clips if clips is not None else make_corpus())
    order = NarrativeOrder.from_token(args.order)
    rec = recommend(stats, args.data, order)
    _emit(args, rec.to_dict(),
          f"{args.data} + {order.value} -> {rec.visual} "
          f"({rec.source}{'' if rec.probability is None else f', p={rec.probability:.4f}'})")
    return 0


def cmd_schedule_compile(args, config) -> int:
    ds = load_dataset(args.tracking)
    script = AugmentationScript.from_dict(read_json(args.script))
    ramp = args.ramp_frames if args.ramp_frames is not None else config.get("ramp_frames", RAMP_FRAMES)
    schedule = compile_schedule(script, ds.video, ramp_frames=ramp)
    doc = schedule.to_dict()
    if args.out:
        write_json(args.out, doc)
    warnings: list[str] = []
    if args.corpus:
        from .scheduler import build_dag, check_virtual_links
        stats = compile_stats(load_annotations(args.corpus))
        warnings = check_virtual_links(script, build_dag(script), stats)
        for w in warnings:
            sys.stderr.write(f"warning: {w}\n")
    payload = {"total_frames": schedule.total_frames, "order": schedule.order.value,
               "digest": digest(doc), "warnings": warnings}
    _emit(args, payload,
          f"{schedule.order.value}: {schedule.total_frames} output frames "
          f"(digest {payload['digest'][:12]})")
    return 0


def cmd_render(args, config) -> int:
    if config.get("palette"):
        from .render import set_palette
        set_palette(config["palette"])
    bundle = _bundle_from_args(args, config)
    script = AugmentationScript.from_dict(read_json(args.script))
    ramp = args.ramp_frames if args.ramp_frames is not None else config.get("ramp_frames", RAMP_FRAMES)
    schedule = compile_schedule(script, bundle.dataset.video, ramp_frames=ramp)
    manifest = composite_sequence(schedule, bundle.pyramid, script, args.out,
                                  frames_dir=args.frames_dir)
    payload = {"out_dir": str(args.out), "total_frames": manifest["total_frames"],
               "manifest": str(Path(args.out) / "manifest.json")}
    _emit(args, payload,
          f"wrote {manifest['total_frames']} overlay frames to {args.out}")
    return 0


def cmd_serve(args, config) -> int:
    import uvicorn

    from .service.app import create_app

    if config.get("palette"):
        from .render import set_palette
        set_palette(config["palette"])
    app = create_app(data_dir=args.data_dir, frontend_dir=args.frontend)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rallyvis",
        description="Author augmented table tennis videos from tracking data.",
    )
    parser.add_argument("--config", help="config file (JSON or TOML)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, tracking=True):
        p.add_argument("--json", action="store_true", help="machine-readable output")
        if tracking:
            p.add_argument("--tracking", required=True, help="tracking data file")
            p.add_argument("--tactics", help="tactic import file")
            p.add_argument("--rules", help="rule pack file")
            p.add_argument("--corpus", help="corpus annotation file")
            p.add_argument("--tau-kp", dest="tau_kp", type=float)
            p.add_argument("--delta-reach-frac", dest="delta_reach_frac", type=float)
            p.add_argument("--rho-net", dest="rho_net", type=float)
            p.add_argument("--net-window", dest="net_window", type=int)
            p.add_argument("--no-alternation", action="store_true")

    ingest = sub.add_parser("ingest", help="tracking file operations").add_subparsers(
        dest="subcommand", required=True)
    v = ingest.add_parser("validate", help="validate a tracking file")
    v.add_argument("file")
    v.add_argument("--json", action="store_true")
    v.set_defaults(func=cmd_ingest_validate)

    ev = sub.add_parser("events", help="event detection").add_subparsers(
        dest="subcommand", required=True)
    d = ev.add_parser("detect", help="detect strokes, bounces, net hits, turns")
    common(d)
    d.add_argument("--out", help="write events JSON here")
    d.set_defaults(func=cmd_events_detect)

    py = sub.add_parser("pyramid", help="data pyramid").add_subparsers(
        dest="subcommand", required=True)
    b = py.add_parser("build", help="build the pyramid")
    common(b)
    b.add_argument("--out", help="write pyramid JSON here")
    b.set_defaults(func=cmd_pyramid_build)
    q = py.add_parser("query", help="brush an interval or list attributes")
    common(q)
    q.add_argument("--start", type=int)
    q.add_argument("--end", type=int)
    q.add_argument("--subject")
    q.add_argument("--frame", type=int)
    q.add_argument("--level", help="purpose or level name")
    q.set_defaults(func=cmd_pyramid_query)

    ta = sub.add_parser("tactics", help="tactic facts").add_subparsers(
        dest="subcommand", required=True)
    r = ta.add_parser("run", help="run the rule engine")
    common(r)
    r.add_argument("--out")
    r.set_defaults(func=cmd_tactics_run)
    im = ta.add_parser("import", help="import external tactic facts")
    common(im)
    im.add_argument("--facts", required=True)
    im.set_defaults(func=cmd_tactics_import)

    co = sub.add_parser("corpus", help="corpus statistics").add_subparsers(
        dest="subcommand", required=True)
    st = co.add_parser("stats", help="per-order clip ratios")
    st.add_argument("corpus")
    st.add_argument("--json", action="store_true")
    st.set_defaults(func=cmd_corpus_stats)

    rec = sub.add_parser("recommend", help="recommend a visual for a data attribute")
    rec.add_argument("--data", required=True)
    rec.add_argument("--order", required=True)
    rec.add_argument("--corpus")
    rec.add_argument("--json", action="store_true")
    rec.set_defaults(func=cmd_recommend)

    sc = sub.add_parser("schedule", help="schedule compilation").add_subparsers(
        dest="subcommand", required=True)
    c = sc.add_parser("compile", help="compile a script into a render schedule")
    c.add_argument("--script", required=True)
    c.add_argument("--tracking", required=True)
    c.add_argument("--out")
    c.add_argument("--ramp-frames", dest="ramp_frames", type=int)
    c.add_argument("--corpus", help="warn on virtual links without corpus precedent")
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_schedule_compile)

    rd = sub.add_parser("render", help="render overlays + manifest for a script")
    common(rd)
    rd.add_argument("--script", required=True)
    rd.add_argument("--out", required=True)
    rd.add_argument("--frames-dir", dest="frames_dir",
                    help="source PNG directory for composited frames")
    rd.add_argument("--ramp-frames", dest="ramp_frames", type=int)
    rd.set_defaults(func=cmd_render)

    sv = sub.add_parser("serve", help="start the HTTP service")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8008)
    sv.add_argument("--data-dir", dest="data_dir", default="./rallyvis-data")
    sv.add_argument("--frontend", help="serve the studio UI from this directory at /studio")
    sv.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        config = _load_config(args.config)
        return args.func(args, config)
    except USER_ERRORS as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort boundary
        sys.stderr.write(f"internal error: {exc!r}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
