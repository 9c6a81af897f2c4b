from importlib.metadata import PackageNotFoundError
from pathlib import Path

import pytest
from click.testing import CliRunner

import treeprune
import treeprune.cli as cli
from treeprune import __version__


@pytest.mark.parametrize("flag", ["-v", "--version"])
def test_cli_version_flags(flag: str) -> None:
    r = CliRunner().invoke(cli.cli, [flag])
    assert r.exit_code == 0
    assert __version__ in r.output


@pytest.mark.parametrize("command, option", [("check", "--dump-spds"), ("analyze", "--assume-html-variables")])
def test_command_help(command: str, option: str) -> None:
    r = CliRunner().invoke(cli.cli, [command, "-h"])
    assert r.exit_code == 0
    assert "--k" in r.output
    assert option in r.output


def test_runtime_version_without_metadata_or_pyproject(monkeypatch: pytest.MonkeyPatch) -> None:
    def _missing(name: str) -> None:
        raise PackageNotFoundError(name)

    def _unreadable(self: Path, encoding: str | None = None, errors: str | None = None) -> str:
        raise FileNotFoundError(self)

    monkeypatch.setattr(treeprune, "_dist_version", _missing)
    monkeypatch.setattr(Path, "read_text", _unreadable)
    with pytest.raises(RuntimeError, match="Cannot determine treeprune version"):
        treeprune._runtime_version()
