"""Bundled data files: seed prompts for sentiment classification, a
reference run record for report formatting, and a ready-to-run toy
workspace (config, seeds, datasets) that exercises the whole pipeline with
zero network access.
"""

from __future__ import annotations

import shutil
from importlib import resources
from pathlib import Path

TOY_FILES = ("config.yaml", "seeds.jsonl", "train.jsonl", "test.jsonl", "all.jsonl")


def fixture_path(name: str) -> Path:
    """Absolute path of a bundled fixture file."""
    return Path(str(resources.files(__package__).joinpath(name)))


def copy_toy_workspace(dest: str | Path) -> Path:
    """Copy the toy workspace into ``dest``; returns the config path."""
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    for name in TOY_FILES:
        shutil.copy(fixture_path(f"toy/{name}"), dest / name)
    return dest / "config.yaml"
