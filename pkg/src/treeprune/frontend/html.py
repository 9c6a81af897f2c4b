"""HTML documents as labeled trees.

Every element becomes a node labeled with its tag name, ``#id`` and one
``.class`` per class attribute token. Text, comments and other attributes
are dropped, and so are ``script`` and ``template`` subtrees.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any
from urllib.parse import urlsplit

import html5lib

from ..const.defaults import FRAGMENT_PREFIX
from ..const.html import DROPPED_ELEMENTS
from ..exceptions import FrontendError
from ..guards import Atom, Guard
from ..rewrite import AddChild, AddClass, RewriteRule
from ..trees import NodePath, Tree

_LOGGER = logging.getLogger(__name__)

_SCRIPT_TYPES = frozenset({"", "text/javascript", "application/javascript", "module"})


@dataclass(frozen=True)
class DomElement:
    tag: str
    id: str | None = None
    classes: tuple[str, ...] = ()
    children: tuple[DomElement, ...] = ()

    @property
    def label(self) -> frozenset[str]:
        names = {self.tag, *(f".{c}" for c in self.classes)}
        if self.id:
            names.add(f"#{self.id}")
        return frozenset(names)


@dataclass(frozen=True)
class SourceText:
    """Script or stylesheet text with the place it came from."""

    source: str
    text: str


@dataclass
class DomDocument:
    """Parsed page: the element tree plus its scripts and stylesheets in document order."""

    root: DomElement
    source: str = "<string>"
    scripts: list[SourceText] = field(default_factory=list)
    styles: list[SourceText] = field(default_factory=list)
    script_refs: list[str] = field(default_factory=list)
    style_refs: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def elements(self) -> list[DomElement]:
        out: list[DomElement] = []
        stack = [self.root]
        while stack:
            el = stack.pop()
            out.append(el)
            stack.extend(reversed(el.children))
        return out

    def tags(self) -> frozenset[str]:
        return frozenset(el.tag for el in self.elements())

    def classes(self) -> frozenset[str]:
        return frozenset(c for el in self.elements() for c in el.label)


def _is_element(node: Any) -> bool:
    return isinstance(node.tag, str)


def _convert(node: Any, doc: DomDocument | None) -> DomElement | None:
    tag = node.tag.lower()
    if tag in DROPPED_ELEMENTS:
        if tag == "script" and doc is not None:
            kind = (node.get("type") or "").strip().lower()
            src = node.get("src")
            if src:
                doc.script_refs.append(src)
            elif kind in _SCRIPT_TYPES:
                doc.scripts.append(SourceText(f"{doc.source}:script[{len(doc.scripts) + 1}]", node.text or ""))
        return None
    if doc is not None:
        if tag == "style":
            doc.styles.append(SourceText(f"{doc.source}:style[{len(doc.styles) + 1}]", node.text or ""))
        elif tag == "link" and "stylesheet" in (node.get("rel") or "").lower().split() and node.get("href"):
            doc.style_refs.append(node.get("href"))
    children = tuple(c for c in (_convert(ch, doc) for ch in node if _is_element(ch)) if c is not None)
    ident = (node.get("id") or "").strip() or None
    classes = tuple(dict.fromkeys((node.get("class") or "").split()))
    return DomElement(tag, ident, classes, children)


def parse_html(text: str, source: str = "<string>") -> DomDocument:
    """Parse a page tolerantly.

    Raises:
        FrontendError: If the parser gives up on the input
    """
    try:
        root = html5lib.parse(text, treebuilder="etree", namespaceHTMLElements=False)
    except Exception as e:
        raise FrontendError(f"Cannot parse {source}: {e}") from e
    doc = DomDocument(DomElement("html"), source)
    converted = _convert(root, doc)
    if converted is None:
        raise FrontendError(f"{source}: document has no root element")
    doc.root = converted
    _LOGGER.debug(
        f"Parsed {source}: {len(doc.elements())} elements, {len(doc.scripts)} inline scripts, "
        f"{len(doc.styles)} style blocks"
    )
    return doc


def _local_ref(base: Path, ref: str) -> Path | None:
    parts = urlsplit(ref)
    if parts.scheme or parts.netloc:
        return None
    return base / parts.path


def load_html(path: str | Path) -> DomDocument:
    """Read a page and the same-directory scripts and stylesheets it links.

    Remote references are skipped; missing local ones produce warnings.

    Raises:
        FrontendError: If the page itself cannot be read
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise FrontendError(f"Cannot read {path}: {e}") from e
    doc = parse_html(text, path.name)
    for refs, target in ((doc.style_refs, doc.styles), (doc.script_refs, doc.scripts)):
        for ref in refs:
            local = _local_ref(path.parent, ref)
            if local is None:
                _LOGGER.debug(f"Skipping remote resource {ref}")
                continue
            try:
                target.append(SourceText(local.name, local.read_text(encoding="utf-8")))
            except (OSError, UnicodeDecodeError) as e:
                msg = f"{path.name}: cannot read linked resource {ref}: {e}"
                _LOGGER.warning(msg)
                doc.warnings.append(msg)
    return doc


def html_to_tree(doc: DomDocument) -> Tree:
    """One node per element, children in document order."""
    labels: dict[NodePath, frozenset[str]] = {}

    def visit(el: DomElement, path: NodePath) -> None:
        labels[path] = el.label
        for i, child in enumerate(el.children):
            visit(child, (*path, i))

    visit(doc.root, ())
    return Tree(labels)


# --- inserted fragments -------------------------------------------------------


class FreshNames:
    """Rule names and marker classes, unique within one page."""

    def __init__(self, prefix: str = "js") -> None:
        self.prefix = prefix
        self._rules = itertools.count(1)
        self._markers = itertools.count(1)

    def rule(self) -> str:
        return f"{self.prefix}{next(self._rules)}"

    def marker(self) -> str:
        return f"{FRAGMENT_PREFIX}{next(self._markers)}"


def parse_fragment(fragment: str) -> list[DomElement]:
    """Top-level elements of an HTML fragment."""
    try:
        root = html5lib.parseFragment(fragment, treebuilder="etree", namespaceHTMLElements=False)
    except Exception as e:
        raise FrontendError(f"Cannot parse HTML fragment: {e}") from e
    return [el for el in (_convert(ch, None) for ch in root if _is_element(ch)) if el is not None]


def fragment_to_rules(fragment: str, base: Guard, names: FreshNames | None = None) -> list[RewriteRule]:
    """Rules inserting ``fragment`` below nodes matching ``base``.

    Each top-level element is added under ``base``; elements with children
    carry a fresh marker class so that their own children can be added under
    them.
    """
    names = names or FreshNames()
    rules: list[RewriteRule] = []

    def add(el: DomElement, guard: Guard) -> None:
        label = el.label
        marker = None
        if el.children:
            marker = names.marker()
            label = label | {marker}
        rules.append(RewriteRule(names.rule(), guard, AddChild(label)))
        if marker is not None:
            for child in el.children:
                add(child, Atom(marker))

    for el in parse_fragment(fragment):
        add(el, base)
    return rules


def coarse_fragment_rules(base: Guard, classes: frozenset[str], names: FreshNames | None = None) -> list[RewriteRule]:
    """Rules able to build any subtree over ``classes`` below ``base``.

    Inserted nodes carry a marker class; further rules add every class to
    marked nodes, so their labels range over all subsets of ``classes``.
    """
    names = names or FreshNames()
    marker = names.marker()
    rules: list[RewriteRule] = []
    for guard in (base, Atom(marker)):
        for c in sorted(classes):
            rules.append(RewriteRule(names.rule(), guard, AddChild(frozenset({c, marker}))))
    for c in sorted(classes):
        rules.append(RewriteRule(names.rule(), Atom(marker), AddClass(frozenset({c}))))
    return rules
