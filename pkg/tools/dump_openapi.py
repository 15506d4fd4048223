#!/usr/bin/env python3
"""Write the service's OpenAPI description to docs/openapi.json."""

import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from rallyvis.jsonio import write_json  # noqa: E402
from rallyvis.service.app import create_app  # noqa: E402


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        app = create_app(data_dir=tmp)
        write_json(ROOT / "docs" / "openapi.json", app.openapi())
    print("wrote docs/openapi.json")


if __name__ == "__main__":
    main()
