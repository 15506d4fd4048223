"""Canonical JSON helpers.

Every file format and wire payload in this project is serialized through
`canonical_dumps` so that identical values always produce identical bytes
(round-trip and golden-file tests rely on this).
"""

from __future__ import annotations

import gzip
import hashlib
import json
from pathlib import Path
from typing import Any


def canonical_dumps(data: Any) -> str:
    """Serialize to compact JSON with sorted keys and a trailing newline."""
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=True) + "\n"


def write_json(path: str | Path, data: Any) -> None:
    Path(path).write_text(canonical_dumps(data), encoding="utf-8")


def read_json(path: str | Path) -> Any:
    """Read a JSON document; `.gz` paths are transparently decompressed."""
    p = Path(path)
    if p.suffix == ".gz":
        with gzip.open(p, "rt", encoding="utf-8") as fh:
            return json.load(fh)
    return json.loads(p.read_text(encoding="utf-8"))


def digest(data: Any) -> str:
    """Stable content digest of a JSON-serializable value."""
    return hashlib.sha256(canonical_dumps(data).encode("utf-8")).hexdigest()


def short_id(*parts: Any) -> str:
    """Deterministic 12-hex id derived from the given parts."""
    raw = "\x1f".join(str(p) for p in parts)
    return hashlib.sha1(raw.encode("utf-8")).hexdigest()[:12]
