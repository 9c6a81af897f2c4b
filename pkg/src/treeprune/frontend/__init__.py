"""HTML5/CSS/jQuery pages as rewrite systems.

A page contributes its DOM as the initial tree, its stylesheet selectors as
queries, and the rules extracted from its scripts.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from ..const.html import HTML_TAGS
from ..exceptions import FrontendError
from ..guards import classes_of
from ..rewrite import AddChild, RewriteRule, RewriteSystem, op_classes
from ..trees import Tree
from .css import SelectorEntry, parse_stylesheet, selector_to_guard, translate_selector
from .html import (
    DomDocument,
    DomElement,
    FreshNames,
    SourceText,
    fragment_to_rules,
    html_to_tree,
    load_html,
    parse_html,
)
from .jquery import JQueryStack, extract_rules_from_scripts

_LOGGER = logging.getLogger(__name__)


@dataclass
class Page:
    """Everything the analysis needs from one HTML page."""

    source: str
    tree: Tree
    selectors: list[SelectorEntry]
    rules: list[RewriteRule]
    warnings: list[str] = field(default_factory=list)
    tags: frozenset[str] = frozenset()

    @property
    def supported(self) -> list[SelectorEntry]:
        return [e for e in self.selectors if e.supported]

    def queries(self) -> list[tuple[str, SelectorEntry]]:
        """Query name per supported selector entry, ``q1`` onward in stylesheet order."""
        return [(f"q{i}", e) for i, e in enumerate(self.supported, start=1)]


def _read_css(path: str | Path) -> SourceText:
    path = Path(path)
    try:
        return SourceText(path.name, path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError) as e:
        raise FrontendError(f"Cannot read {path}: {e}") from e


def page_from_document(
    doc: DomDocument,
    extra_css: Sequence[SourceText] = (),
    assume_html_variables: bool = False,
) -> Page:
    """Translate a parsed document."""
    warnings = list(doc.warnings)
    selectors: list[SelectorEntry] = []
    for sheet in [*doc.styles, *extra_css]:
        entries, notes = parse_stylesheet(sheet.text, sheet.source)
        selectors.extend(entries)
        warnings.extend(notes)
    for e in selectors:
        if e.stripped:
            warnings.append(f"{e.source}: {e.text!r}: stripped {' '.join(e.stripped)}")
        warnings.extend(f"{e.source}: {e.text!r}: {note}" for note in e.notes)
    rules, script_notes = extract_rules_from_scripts(
        doc, assume_html_variables=assume_html_variables, names=FreshNames()
    )
    warnings.extend(script_notes)
    tags = set(doc.tags())
    for r in rules:
        if isinstance(r.op, AddChild):
            tags |= {c for c in r.op.classes if c in HTML_TAGS}
    tree = html_to_tree(doc)
    _LOGGER.info(
        f"{doc.source}: {len(tree)} nodes, {len(selectors)} selectors, {len(rules)} rules, {len(warnings)} warnings"
    )
    return Page(doc.source, tree, selectors, rules, warnings, frozenset(tags))


def build_page(
    path: str | Path,
    extra_css: Iterable[str | Path] = (),
    assume_html_variables: bool = False,
) -> Page:
    """Load a page with its linked resources and translate it.

    Raises:
        FrontendError: If the page or an extra stylesheet cannot be read
    """
    doc = load_html(path)
    return page_from_document(doc, [_read_css(p) for p in extra_css], assume_html_variables)


def _ordered_classes(page: Page) -> tuple[str, ...]:
    seen: dict[str, None] = {}
    for _, label in page.tree.items():
        seen.update(dict.fromkeys(sorted(label)))
    for r in page.rules:
        seen.update(dict.fromkeys(sorted(classes_of(r.guard) | op_classes(r.op))))
    for e in page.supported:
        if e.guard is not None:
            seen.update(dict.fromkeys(sorted(classes_of(e.guard))))
    return tuple(seen)


def page_system(page: Page) -> RewriteSystem:
    """Rewrite system of ``page``; one query per supported selector."""
    queries = tuple((name, e.guard) for name, e in page.queries() if e.guard is not None)
    return RewriteSystem(_ordered_classes(page), tuple(page.rules), page.tree, queries, page.tags)


__all__ = [
    "DomDocument",
    "DomElement",
    "FreshNames",
    "JQueryStack",
    "Page",
    "SelectorEntry",
    "SourceText",
    "build_page",
    "extract_rules_from_scripts",
    "fragment_to_rules",
    "html_to_tree",
    "load_html",
    "page_from_document",
    "page_system",
    "parse_html",
    "parse_stylesheet",
    "selector_to_guard",
    "translate_selector",
]
