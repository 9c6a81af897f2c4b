"""Pytest fixtures and re-exports of shared test scaffolding."""

from __future__ import annotations

from pathlib import Path

import pytest

from .generators import (
    CLASSES,
    ConfigFactory,
    TrsFactory,
    assert_embedding,
    grow_tree,
    random_guard,
    random_label,
    random_system,
    random_tree,
)

__all__ = [
    "CLASSES",
    "ConfigFactory",
    "TrsFactory",
    "assert_embedding",
    "grow_tree",
    "random_guard",
    "random_label",
    "random_system",
    "random_tree",
]

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    """Bundled example systems and pages."""
    return FIXTURES


@pytest.fixture
def trs_file(tmp_path: Path) -> TrsFactory:
    """Factory fixture writing rewrite-system text to a ``.trs`` file."""

    def _make(text: str, name: str = "system.trs") -> Path:
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return p

    return _make


@pytest.fixture
def cli_cfg(tmp_path: Path) -> ConfigFactory:
    """Factory fixture for writing a CLI config YAML file.

    Call with ``top_level=True`` for the unnested ("not under 'analysis'")
    shape used to exercise config normalization.
    """

    def _make(*, top_level: bool = False, **values: object) -> Path:
        values = {"threads": 1, **values}
        lines = [f"{key}: {_yaml_scalar(value)}" for key, value in values.items()]
        p = tmp_path / "cfg.yaml"
        if top_level:
            p.write_text("\n".join(lines) + "\n")
        else:
            p.write_text("analysis:\n" + "".join(f"  {line}\n" for line in lines))
        return p

    return _make


def _yaml_scalar(value: object) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)
