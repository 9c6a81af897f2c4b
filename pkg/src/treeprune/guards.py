"""Guard language: AST, s-expression parser and canonical printer.

Guards select tree nodes. The concrete syntax is an s-expression grammar::

    true | <class> | (and g g ...) | (or g g ...) | (not g)
    (up g) | (up* g) | (up+ g) | (down g) | (down* g) | (down+ g)
    (left g) | (right g)

``(up+ g)`` and ``(down+ g)`` are sugar for ``(up* (up g))`` and
``(down* (down g))``. n-ary ``and``/``or`` fold to the left, so the AST is
binary. ``left``/``right`` only exist as input to the sibling approximation.
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from enum import StrEnum

from .exceptions import GuardSyntaxError, UnknownClassError

CLASS_TOKEN_RE = re.compile(r"[A-Za-z_.#:-][A-Za-z0-9_.#:-]*\Z")


class Direction(StrEnum):
    """Modal directions."""

    UP = "up"
    UP_STAR = "up*"
    DOWN = "down"
    DOWN_STAR = "down*"
    LEFT = "left"
    RIGHT = "right"

    @property
    def is_closure(self) -> bool:
        return self in (Direction.UP_STAR, Direction.DOWN_STAR)

    @property
    def step(self) -> Direction:
        """Single-step direction underlying a closure direction."""
        if self is Direction.UP_STAR:
            return Direction.UP
        if self is Direction.DOWN_STAR:
            return Direction.DOWN
        return self


@dataclass(frozen=True)
class Top:
    """Matches every node."""

    def __str__(self) -> str:
        return format_guard(self)


@dataclass(frozen=True)
class Atom:
    name: str

    def __str__(self) -> str:
        return format_guard(self)


@dataclass(frozen=True)
class And:
    left: Guard
    right: Guard

    def __str__(self) -> str:
        return format_guard(self)


@dataclass(frozen=True)
class Or:
    left: Guard
    right: Guard

    def __str__(self) -> str:
        return format_guard(self)


@dataclass(frozen=True)
class Not:
    body: Guard

    def __str__(self) -> str:
        return format_guard(self)


@dataclass(frozen=True)
class Modal:
    direction: Direction
    body: Guard

    def __str__(self) -> str:
        return format_guard(self)


Guard = Top | Atom | And | Or | Not | Modal

TRUE = Top()


def conj(*guards: Guard) -> Guard:
    """Left-folded conjunction; the empty conjunction is ``true``."""
    if not guards:
        return TRUE
    result = guards[0]
    for g in guards[1:]:
        result = And(result, g)
    return result


def disj(*guards: Guard) -> Guard:
    """Left-folded disjunction of at least one guard."""
    if not guards:
        raise ValueError("empty disjunction")
    result = guards[0]
    for g in guards[1:]:
        result = Or(result, g)
    return result


def atoms_conj(classes: Iterable[str]) -> Guard:
    """Conjunction of atoms in sorted order."""
    return conj(*(Atom(c) for c in sorted(classes)))


def up_plus(g: Guard) -> Guard:
    return Modal(Direction.UP_STAR, Modal(Direction.UP, g))


def down_plus(g: Guard) -> Guard:
    return Modal(Direction.DOWN_STAR, Modal(Direction.DOWN, g))


# --- inspection -------------------------------------------------------------


def subformulas(g: Guard) -> Iterator[Guard]:
    """Yield every subformula of ``g`` in post-order (children first)."""
    match g:
        case And(left, right) | Or(left, right):
            yield from subformulas(left)
            yield from subformulas(right)
        case Not(body) | Modal(_, body):
            yield from subformulas(body)
        case _:
            pass
    yield g


def classes_of(g: Guard) -> frozenset[str]:
    """Classes mentioned by ``g``."""
    return frozenset(s.name for s in subformulas(g) if isinstance(s, Atom))


def is_positive(g: Guard) -> bool:
    return not any(isinstance(s, Not) for s in subformulas(g))


def uses_siblings(g: Guard) -> bool:
    return any(
        isinstance(s, Modal) and s.direction in (Direction.LEFT, Direction.RIGHT) for s in subformulas(g)
    )


def conjunct_classes(g: Guard) -> frozenset[str] | None:
    """Classes of a conjunction of atoms, or None if ``g`` has another shape."""
    match g:
        case Top():
            return frozenset()
        case Atom(name):
            return frozenset({name})
        case And(left, right):
            lhs = conjunct_classes(left)
            rhs = conjunct_classes(right)
            if lhs is None or rhs is None:
                return None
            return lhs | rhs
        case _:
            return None


def simple_shape(g: Guard) -> tuple[Direction | None, frozenset[str]] | None:
    """Decompose a simple guard into (direction, classes).

    Simple guards are a conjunction of atoms (direction None) or a single
    ``up``/``down`` modality over one. Returns None for any other shape.
    """
    if isinstance(g, Modal):
        if g.direction not in (Direction.UP, Direction.DOWN):
            return None
        inner = conjunct_classes(g.body)
        return None if inner is None else (g.direction, inner)
    flat = conjunct_classes(g)
    return None if flat is None else (None, flat)


def is_simple(g: Guard) -> bool:
    return simple_shape(g) is not None


def guard_size(g: Guard) -> int:
    """Number of AST nodes."""
    return sum(1 for _ in subformulas(g))


# --- printing ---------------------------------------------------------------


def format_class(name: str) -> str:
    """Print a class token, quoting names outside the bare token grammar."""
    if CLASS_TOKEN_RE.match(name) and name not in _KEYWORDS:
        return name
    escaped = name.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def _flatten(g: Guard, kind: type[And] | type[Or]) -> list[Guard]:
    parts: list[Guard] = []
    while isinstance(g, kind):
        parts.append(g.right)
        g = g.left
    parts.append(g)
    parts.reverse()
    return parts


def format_guard(g: Guard) -> str:
    """Canonical s-expression for ``g``; parsing it back yields an equal AST."""
    match g:
        case Top():
            return "true"
        case Atom(name):
            return format_class(name)
        case And():
            return "(and " + " ".join(format_guard(p) for p in _flatten(g, And)) + ")"
        case Or():
            return "(or " + " ".join(format_guard(p) for p in _flatten(g, Or)) + ")"
        case Not(body):
            return f"(not {format_guard(body)})"
        case Modal(direction, body):
            return f"({direction.value} {format_guard(body)})"
    raise TypeError(f"not a guard: {g!r}")


# --- tokenizing and parsing -------------------------------------------------

_KEYWORDS = frozenset({"true", "and", "or", "not", "up", "up*", "up+", "down", "down*", "down+", "left", "right"})
_PUNCT = "(){},"


@dataclass(frozen=True)
class Token:
    kind: str  # one of "(", ")", "{", "}", ",", "word", "string"
    value: str
    pos: int


def tokenize(text: str) -> list[Token]:
    """Split s-expression text into tokens."""
    tokens: list[Token] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in _PUNCT:
            tokens.append(Token(ch, ch, i))
            i += 1
        elif ch == '"':
            start = i
            i += 1
            buf: list[str] = []
            while i < n and text[i] != '"':
                if text[i] == "\\" and i + 1 < n:
                    i += 1
                buf.append(text[i])
                i += 1
            if i >= n:
                raise GuardSyntaxError("unterminated string", start)
            i += 1
            tokens.append(Token("string", "".join(buf), start))
        else:
            start = i
            while i < n and not text[i].isspace() and text[i] not in _PUNCT and text[i] != '"':
                i += 1
            tokens.append(Token("word", text[start:i], start))
    return tokens


def class_name(tok: Token, classes: frozenset[str] | None = None) -> str:
    """Validate a token used as a class name."""
    if tok.kind == "string":
        name = tok.value
    elif tok.kind == "word" and CLASS_TOKEN_RE.match(tok.value) and tok.value not in _KEYWORDS:
        name = tok.value
    else:
        raise GuardSyntaxError(f"expected class name, got {tok.value!r}", tok.pos)
    if classes is not None and name not in classes:
        raise UnknownClassError(f"unknown class {name!r}")
    return name


class _GuardParser:
    def __init__(self, tokens: list[Token], classes: frozenset[str] | None) -> None:
        self.tokens = tokens
        self.pos = 0
        self.classes = classes

    def _peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _next(self, what: str) -> Token:
        tok = self._peek()
        if tok is None:
            end = self.tokens[-1].pos + len(self.tokens[-1].value) if self.tokens else 0
            raise GuardSyntaxError(f"unexpected end of input, expected {what}", end)
        self.pos += 1
        return tok

    def parse(self) -> Guard:
        tok = self._next("guard")
        if tok.kind == "word" and tok.value == "true":
            return TRUE
        if tok.kind in ("word", "string"):
            return Atom(class_name(tok, self.classes))
        if tok.kind != "(":
            raise GuardSyntaxError(f"unexpected {tok.value!r}", tok.pos)
        head = self._next("operator")
        if head.kind != "word" or head.value not in _KEYWORDS - {"true"}:
            raise GuardSyntaxError(f"unknown operator {head.value!r}", head.pos)
        args: list[Guard] = []
        while True:
            nxt = self._peek()
            if nxt is None:
                raise GuardSyntaxError("missing ')'", tok.pos)
            if nxt.kind == ")":
                self.pos += 1
                break
            args.append(self.parse())
        return self._build(head, args)

    def _build(self, head: Token, args: list[Guard]) -> Guard:
        op = head.value
        if op == "and":
            return conj(*args)
        if op == "or":
            if not args:
                raise GuardSyntaxError("'or' needs at least one operand", head.pos)
            return disj(*args)
        if len(args) != 1:
            raise GuardSyntaxError(f"'{op}' takes exactly one operand", head.pos)
        body = args[0]
        if op == "not":
            return Not(body)
        if op == "up+":
            return up_plus(body)
        if op == "down+":
            return down_plus(body)
        return Modal(Direction(op), body)


def parse_guard(text: str, classes: Iterable[str] | None = None) -> Guard:
    """Parse a guard s-expression.

    Args:
        text: Guard text
        classes: Closed class universe; None accepts any class

    Returns:
        The guard AST

    Raises:
        GuardSyntaxError: On malformed input
        UnknownClassError: If a closed universe is given and a class is outside it
    """
    tokens = tokenize(text)
    if not tokens:
        raise GuardSyntaxError("empty guard", 0)
    parser = _GuardParser(tokens, frozenset(classes) if classes is not None else None)
    guard = parser.parse()
    if parser.pos != len(tokens):
        extra = tokens[parser.pos]
        raise GuardSyntaxError(f"trailing input {extra.value!r}", extra.pos)
    return guard
