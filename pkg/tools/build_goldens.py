#!/usr/bin/env python3
"""Regenerate the committed golden outputs for the three scripted fixture
clips: per-file SHA-256 checksums of the full artifact set, plus complete
copies of the manifest and a handful of sample overlay frames."""

from __future__ import annotations

import hashlib
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from rallyvis.jsonio import read_json, write_json  # noqa: E402
from rallyvis.pipeline import build_bundle  # noqa: E402
from rallyvis.render import composite_sequence  # noqa: E402
from rallyvis.scheduler import AugmentationScript, compile_schedule  # noqa: E402

FIXTURES = ROOT / "tests" / "fixtures"
GOLDENS = ROOT / "tests" / "goldens"
SCRIPTS = ("linear", "flash_forward", "zigzag")


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def main() -> None:
    bundle = build_bundle(read_json(FIXTURES / "rally300.json"))
    for name in SCRIPTS:
        script = AugmentationScript.from_dict(read_json(FIXTURES / f"script_{name}.json"))
        schedule = compile_schedule(script, bundle.dataset.video)
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / name
            composite_sequence(schedule, bundle.pyramid, script, out)
            gdir = GOLDENS / name
            if gdir.exists():
                shutil.rmtree(gdir)
            (gdir / "samples").mkdir(parents=True)
            files = sorted(p.relative_to(out).as_posix()
                           for p in out.rglob("*") if p.is_file())
            checksums = {rel: sha256(out / rel) for rel in files}
            write_json(gdir / "checksums.json", checksums)
            shutil.copy(out / "manifest.json", gdir / "manifest.json")
            total = schedule.total_frames
            samples = sorted({0, total // 4, total // 2, (3 * total) // 4, total - 1})
            for i in samples:
                shutil.copy(out / "overlays" / f"{i:06d}.svg",
                            gdir / "samples" / f"{i:06d}.svg")
            print(f"{name}: {total} frames, {len(checksums)} files, "
                  f"samples {samples}")


if __name__ == "__main__":
    main()
