"""Shipped design files, generator files and transcribed reference tables."""

from __future__ import annotations

import json
from pathlib import Path

FIXTURE_DIR = Path(__file__).resolve().parent


def resolve(name) -> Path:
    """A path as given if it exists, else the named file in the fixture directory."""
    p = Path(name)
    if p.exists():
        return p
    for candidate in (FIXTURE_DIR / p.name, FIXTURE_DIR / (p.name + ".json")):
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"fixture not found: {name}")


def load_json(name):
    return json.loads(resolve(name).read_text())
