"""treeprune - prove CSS selectors redundant in jQuery-driven HTML5 pages.

Pages are abstracted as monotonic tree-rewriting systems; a selector is
redundant when no tree reachable under the rules matches its guard.

Example:
    >>> from treeprune import AnalysisOptions, analyze_system, load_system
    >>>
    >>> system = load_system("fixtures/tennis.trs")
    >>> analysis = analyze_system(system, AnalysisOptions())
    >>> [(v.query, v.status) for v in analysis.verdicts]
    [('q_success', 'reachable')]
"""

from importlib.metadata import PackageNotFoundError
from importlib.metadata import version as _dist_version

from . import const, exceptions
from .bdd import BddManager
from .guards import Guard, format_guard, parse_guard
from .rewrite import (
    AddChild,
    AddClass,
    EnumerationCaps,
    RemoveClass,
    RemoveNode,
    RewriteRule,
    RewriteSystem,
    apply_rule,
    enumerate_post_star,
    fixpoint_tree_k,
    matched_set,
)
from .saturation import AnalysisOptions, Verdict, analyze_system, check_redundancy
from .simplify import SimpleRule, SimpleSystem, to_simple
from .spds import SPds, build_spds, class_addable, extract_pds_witness, pre_star
from .system_format import format_system, load_system, parse_system
from .trees import AssumptionFunction, Tree, find_embedding, match_guard, match_guard_assume, parse_tree
from .witness import WitnessTrace, pds_to_tree_witness


def _runtime_version() -> str:
    """Installed distribution version, else the one in an uninstalled checkout's pyproject."""
    try:
        return _dist_version("treeprune")
    except PackageNotFoundError:
        import tomllib
        from pathlib import Path

        pyproject = Path(__file__).resolve().parents[2] / "pyproject.toml"
        try:
            version = tomllib.loads(pyproject.read_text(encoding="utf-8"))["project"]["version"]
        except (OSError, tomllib.TOMLDecodeError, KeyError) as exc:
            raise RuntimeError(
                f"Cannot determine treeprune version: package metadata is unavailable and "
                f"{pyproject} could not be read. Install the package (pip install treeprune "
                f"or pip install -e .) or run from a complete source checkout."
            ) from exc
        if not isinstance(version, str):
            raise RuntimeError(f"{pyproject} does not define a string project.version") from None
        return version


__version__ = _runtime_version()

__all__ = [
    # Pipeline
    "AnalysisOptions",
    "Verdict",
    "analyze_system",
    "check_redundancy",
    # Model
    "Guard",
    "Tree",
    "AssumptionFunction",
    "RewriteRule",
    "RewriteSystem",
    "AddChild",
    "AddClass",
    "RemoveClass",
    "RemoveNode",
    "parse_guard",
    "format_guard",
    "parse_tree",
    "match_guard",
    "match_guard_assume",
    "find_embedding",
    "apply_rule",
    "matched_set",
    # Oracles
    "EnumerationCaps",
    "enumerate_post_star",
    "fixpoint_tree_k",
    # Text format
    "load_system",
    "parse_system",
    "format_system",
    # Engine
    "SimpleRule",
    "SimpleSystem",
    "to_simple",
    "BddManager",
    "SPds",
    "build_spds",
    "pre_star",
    "class_addable",
    "extract_pds_witness",
    "WitnessTrace",
    "pds_to_tree_witness",
    # Submodules
    "const",
    "exceptions",
    # Version
    "__version__",
]
