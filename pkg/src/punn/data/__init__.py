"""Shipped FCIDUMP fixtures and their provenance sidecars."""
import json
from importlib import resources
from pathlib import Path

from punn.integrals import IntegralSet, read_fcidump

__all__ = ["FIXTURES", "fixture_path", "load_fixture", "load_sidecar"]

FIXTURES = ("h4_chain_1.0", "h6_chain_1.0", "h8_cube_2.5")


def fixture_path(name: str) -> Path:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    return Path(str(resources.files(__name__) / f"{name}.fcidump"))


def load_fixture(name: str) -> IntegralSet:
    return read_fcidump(fixture_path(name))


def load_sidecar(name: str) -> dict:
    return json.loads(fixture_path(name).with_suffix(".json").read_text())
