"""Access to the bundled sample datasets (small, synthetic, census/bank-like)."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

_SAMPLES = ("adults", "bank")


def _data_file(filename: str) -> Path:
    path = Path(str(resources.files("fuzzanon") / "data" / filename))
    if not path.is_file():
        raise FileNotFoundError(f"bundled data file missing: {filename}")
    return path


def sample_path(name: str) -> Path:
    """Path of a bundled sample CSV ("adults" or "bank")."""
    if name not in _SAMPLES:
        raise ValueError(f"unknown sample {name!r}; choose from {_SAMPLES}")
    return _data_file(f"{name}_sample.csv")


def sample_schema_path(name: str) -> Path:
    """Path of the schema JSON matching a bundled sample."""
    if name not in _SAMPLES:
        raise ValueError(f"unknown sample {name!r}; choose from {_SAMPLES}")
    return _data_file(f"{name}.schema.json")
