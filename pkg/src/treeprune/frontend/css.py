"""CSS selectors as guards.

Compound selectors become conjunctions, ``x y`` becomes ``(and y (up+ x))``
and ``x > y`` becomes ``(and y (up x))``. The sibling combinators ``+`` and
``~`` are over-approximated by ``(up (down x))``. Pseudo-classes and
pseudo-elements are stripped, except ``:not`` of a compound selector.
Attribute and namespace selectors are unsupported.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import tinycss2

from ..const.html import HTML_TAGS
from ..guards import TRUE, And, Atom, Direction, Guard, Modal, Not, Top, conj, up_plus

_LOGGER = logging.getLogger(__name__)

# At-rules whose blocks hold ordinary style rules
_NESTING_AT_RULES = frozenset({"media", "supports", "document", "-moz-document", "layer", "container"})


class UnsupportedSelectorError(ValueError):
    pass


@dataclass(frozen=True)
class SelectorTranslation:
    guard: Guard | None
    stripped: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()
    reason: str | None = None


@dataclass(frozen=True)
class SelectorEntry:
    """One selector of a stylesheet and its translation; ``guard`` is None when unsupported."""

    source: str
    text: str
    guard: Guard | None
    stripped: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()
    reason: str | None = None

    @property
    def supported(self) -> bool:
        return self.guard is not None

    @property
    def key(self) -> tuple[str, str]:
        return self.source, self.text


def _significant(tokens: list[Any]) -> list[Any]:
    return [t for t in tokens if t.type != "comment"]


def _split_commas(tokens: list[Any]) -> list[list[Any]]:
    groups: list[list[Any]] = [[]]
    for tok in tokens:
        if tok.type == "literal" and tok.value == ",":
            groups.append([])
        else:
            groups[-1].append(tok)
    return groups


class _SelectorParser:
    def __init__(self, tokens: list[Any]) -> None:
        self.tokens = _significant(tokens)
        self.pos = 0
        self.stripped: list[str] = []
        self.notes: list[str] = []

    def _peek(self) -> Any | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _skip_ws(self) -> bool:
        seen = False
        while (tok := self._peek()) is not None and tok.type == "whitespace":
            self.pos += 1
            seen = True
        return seen

    def compound(self) -> Guard | None:
        """Parse one compound selector; None if nothing was consumed."""
        parts: list[Guard] = []
        consumed = False
        while (tok := self._peek()) is not None:
            if tok.type == "ident":
                if parts or consumed:
                    raise UnsupportedSelectorError(f"unexpected name {tok.value!r}")
                tag = tok.value.lower()
                if tag not in HTML_TAGS and "-" not in tag:
                    self.notes.append(f"unknown element name {tag!r}")
                parts.append(Atom(tag))
            elif tok.type == "hash":
                parts.append(Atom(f"#{tok.value}"))
            elif tok.type == "literal" and tok.value == "*":
                pass
            elif tok.type == "literal" and tok.value == ".":
                self.pos += 1
                name = self._peek()
                if name is None or name.type != "ident":
                    raise UnsupportedSelectorError("'.' must be followed by a class name")
                parts.append(Atom(f".{name.value}"))
            elif tok.type == "literal" and tok.value == ":":
                parts.extend(self._pseudo())
                consumed = True
                continue
            elif tok.type == "[] block":
                raise UnsupportedSelectorError("attribute selectors are not supported")
            elif tok.type == "literal" and tok.value == "|":
                raise UnsupportedSelectorError("namespace selectors are not supported")
            else:
                break
            consumed = True
            self.pos += 1
        if not consumed:
            return None
        return conj(*parts) if parts else TRUE

    def _pseudo(self) -> list[Guard]:
        self.pos += 1
        element = False
        tok = self._peek()
        if tok is not None and tok.type == "literal" and tok.value == ":":
            element = True
            self.pos += 1
            tok = self._peek()
        if tok is None:
            raise UnsupportedSelectorError("dangling ':'")
        self.pos += 1
        prefix = "::" if element else ":"
        if tok.type == "ident":
            self.stripped.append(f"{prefix}{tok.value}")
            return []
        if tok.type == "function":
            if not element and tok.lower_name == "not":
                inner = _SelectorParser(tok.arguments)
                inner._skip_ws()
                body = inner.compound()
                inner._skip_ws()
                if body is None or inner._peek() is not None or inner.stripped:
                    raise UnsupportedSelectorError(":not() is only supported on compound selectors")
                self.notes.extend(inner.notes)
                return [Not(body)]
            self.stripped.append(f"{prefix}{tok.name}({tinycss2.serialize(tok.arguments)})")
            return []
        raise UnsupportedSelectorError(f"unexpected token after '{prefix}'")

    def selector(self) -> Guard:
        self._skip_ws()
        first = self.compound()
        if first is None:
            raise UnsupportedSelectorError("empty selector")
        result = first
        while True:
            ws = self._skip_ws()
            tok = self._peek()
            if tok is None:
                return result
            if tok.type == "literal" and tok.value in (">", "+", "~"):
                comb = tok.value
                self.pos += 1
                self._skip_ws()
            elif ws:
                comb = " "
            else:
                raise UnsupportedSelectorError(f"unexpected {tinycss2.serialize([tok])!r}")
            right = self.compound()
            if right is None:
                raise UnsupportedSelectorError(f"combinator {comb.strip() or 'descendant'} has no right side")
            if comb == " ":
                rel: Guard = up_plus(result)
            elif comb == ">":
                rel = Modal(Direction.UP, result)
            else:
                self.notes.append(f"sibling combinator '{comb}' approximated by (up (down ..))")
                rel = Modal(Direction.UP, Modal(Direction.DOWN, result))
            result = rel if isinstance(right, Top) else And(right, rel)


def translate_selector_tokens(tokens: list[Any]) -> SelectorTranslation:
    parser = _SelectorParser(tokens)
    try:
        guard = parser.selector()
    except UnsupportedSelectorError as e:
        return SelectorTranslation(None, tuple(parser.stripped), tuple(parser.notes), str(e))
    return SelectorTranslation(guard, tuple(parser.stripped), tuple(parser.notes))


def translate_selector(text: str) -> SelectorTranslation:
    """Translate a single selector (no commas)."""
    tokens = tinycss2.parse_component_value_list(text)
    if any(t.type == "literal" and t.value == "," for t in tokens):
        return SelectorTranslation(None, reason="selector lists must be split first")
    if any(t.type == "error" for t in tokens):
        return SelectorTranslation(None, reason="selector does not tokenize")
    return translate_selector_tokens(tokens)


def selector_to_guard(text: str) -> Guard | None:
    """Guard for a selector, or None if it is unsupported."""
    return translate_selector(text).guard


def selector_list_guards(text: str) -> list[Guard | None]:
    """One entry per comma-separated selector."""
    tokens = tinycss2.parse_component_value_list(text)
    return [translate_selector_tokens(group).guard for group in _split_commas(tokens)]


def _entries_from_rules(rules: list[Any], source: str, out: list[SelectorEntry], warnings: list[str]) -> None:
    for rule in rules:
        if rule.type == "qualified-rule":
            for group in _split_commas(rule.prelude):
                raw = tinycss2.serialize(group).strip()
                tr = translate_selector_tokens(group)
                where = f"{source}:{rule.source_line}"
                out.append(SelectorEntry(where, raw, tr.guard, tr.stripped, tr.notes, tr.reason))
                if tr.guard is None:
                    warnings.append(f"{where}: unsupported selector {raw!r}: {tr.reason}")
        elif rule.type == "at-rule":
            if rule.lower_at_keyword in _NESTING_AT_RULES and rule.content is not None:
                nested = tinycss2.parse_rule_list(rule.content, skip_comments=True, skip_whitespace=True)
                _entries_from_rules(nested, source, out, warnings)
            else:
                _LOGGER.debug(f"{source}:{rule.source_line}: skipping @{rule.at_keyword}")
        elif rule.type == "error":
            warnings.append(f"{source}:{rule.source_line}: {rule.message}")


def parse_stylesheet(text: str, source: str = "<style>") -> tuple[list[SelectorEntry], list[str]]:
    """Selector entries of a stylesheet, in order, with parse warnings."""
    rules = tinycss2.parse_stylesheet(text, skip_comments=True, skip_whitespace=True)
    entries: list[SelectorEntry] = []
    warnings: list[str] = []
    _entries_from_rules(rules, source, entries, warnings)
    for w in warnings:
        _LOGGER.warning(w)
    return entries, warnings
