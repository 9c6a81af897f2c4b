"""Normalization passes turning an input system into a simple system.

The passes run in this order: sibling approximation, positivization,
removal stripping, optional query lifting, and finally ``to_simple``, which
introduces one class per non-atomic guard subformula.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable
from dataclasses import dataclass, field, replace

from .const.defaults import SYNTHETIC_PREFIX
from .exceptions import NotPositiveError, NotSimpleError
from .guards import (
    TRUE,
    And,
    Atom,
    Direction,
    Guard,
    Modal,
    Not,
    Or,
    Top,
    atoms_conj,
    disj,
    format_guard,
    is_positive,
    subformulas,
    uses_siblings,
)
from .rewrite import (
    AddChild,
    AddClass,
    AddSibling,
    RewriteRule,
    RewriteSystem,
    is_removal,
)
from .trees import Tree

_LOGGER = logging.getLogger(__name__)


# --- sibling approximation ----------------------------------------------------


def approximate_guard(g: Guard) -> Guard:
    """Replace ``left``/``right`` by ``(up (down ..))``."""
    match g:
        case And(left, right):
            return And(approximate_guard(left), approximate_guard(right))
        case Or(left, right):
            return Or(approximate_guard(left), approximate_guard(right))
        case Not(body):
            return Not(approximate_guard(body))
        case Modal(direction, body):
            inner = approximate_guard(body)
            if direction in (Direction.LEFT, Direction.RIGHT):
                return Modal(Direction.UP, Modal(Direction.DOWN, inner))
            return Modal(direction, inner)
    return g


def approximate_siblings(system: RewriteSystem) -> tuple[RewriteSystem, list[str]]:
    """Over-approximate sibling modalities and sibling insertion.

    A rule ``(g, before X)`` or ``(g, after X)`` becomes ``((down g), addchild X)``:
    the new node is a child of the matched node's parent.
    """
    notes: list[str] = []
    rules: list[RewriteRule] = []
    for r in system.rules:
        guard = approximate_guard(r.guard)
        if uses_siblings(r.guard):
            notes.append(f"rule {r.name}: sibling modality approximated by (up (down ..))")
        if isinstance(r.op, AddSibling):
            notes.append(f"rule {r.name}: sibling insertion approximated by child insertion at the parent")
            rules.append(RewriteRule(r.name, Modal(Direction.DOWN, guard), AddChild(r.op.classes)))
        else:
            rules.append(RewriteRule(r.name, guard, r.op))
    queries: list[tuple[str, Guard]] = []
    for name, g in system.queries:
        if uses_siblings(g):
            notes.append(f"query {name}: sibling modality approximated by (up (down ..))")
        queries.append((name, approximate_guard(g)))
    return replace(system, rules=tuple(rules), queries=tuple(queries)), notes


# --- negation -----------------------------------------------------------------


def positivize_guard(g: Guard, tags: Iterable[str] = (), where: str = "guard") -> tuple[Guard, list[str]]:
    """Push negations to atoms and over-approximate what remains.

    A negated tag becomes the disjunction of the other tags. Every other
    negated atom, and every negated modality, becomes ``true``.
    """
    notes: list[str] = []
    tag_list = sorted(set(tags))

    def walk(h: Guard, negated: bool) -> Guard:
        match h:
            case Top():
                if negated:
                    notes.append(f"{where}: (not true) approximated by true")
                return TRUE
            case Atom(name):
                if not negated:
                    return h
                others = [t for t in tag_list if t != name]
                if name in tag_list and others:
                    return disj(*(Atom(t) for t in others))
                notes.append(f"{where}: (not {format_guard(h)}) approximated by true")
                return TRUE
            case And(left, right):
                return (Or if negated else And)(walk(left, negated), walk(right, negated))
            case Or(left, right):
                return (And if negated else Or)(walk(left, negated), walk(right, negated))
            case Not(body):
                return walk(body, not negated)
            case Modal(direction, body):
                if negated:
                    notes.append(f"{where}: (not {format_guard(h)}) approximated by true")
                    return TRUE
                return Modal(direction, walk(body, False))
        raise TypeError(f"not a guard: {h!r}")

    result = walk(g, False)
    return result, notes


def positivize(system: RewriteSystem) -> tuple[RewriteSystem, list[str]]:
    """Positive over-approximation of every rule guard and query."""
    tags = set(system.tags) & set(system.classes)
    notes: list[str] = []
    rules: list[RewriteRule] = []
    for r in system.rules:
        guard, found = positivize_guard(r.guard, tags, f"rule {r.name}")
        notes.extend(found)
        rules.append(RewriteRule(r.name, guard, r.op))
    queries: list[tuple[str, Guard]] = []
    for name, g in system.queries:
        guard, found = positivize_guard(g, tags, f"query {name}")
        notes.extend(found)
        queries.append((name, guard))
    for note in notes:
        _LOGGER.warning(note)
    return replace(system, rules=tuple(rules), queries=tuple(queries)), notes


def strip_removals(system: RewriteSystem) -> RewriteSystem:
    """Drop RemoveClass and RemoveNode rules."""
    kept = tuple(r for r in system.rules if not is_removal(r.op))
    _LOGGER.debug(f"Removal stripping kept {len(kept)} of {len(system.rules)} rules")
    return replace(system, rules=kept)


def lift_guards_to_root(queries: Iterable[tuple[str, Guard]]) -> list[tuple[str, Guard]]:
    """Wrap each query in ``down*`` so that matching anywhere becomes matching at the root."""
    return [(name, Modal(Direction.DOWN_STAR, g)) for name, g in queries]


# --- simple systems -----------------------------------------------------------


@dataclass(frozen=True)
class SimpleRule:
    """Rule guarded by a set of classes at the node, its parent (up) or a child (down)."""

    name: str
    direction: Direction | None
    classes: frozenset[str]
    op: AddChild | AddClass
    synthetic: bool = False

    def __post_init__(self) -> None:
        if self.direction not in (None, Direction.UP, Direction.DOWN):
            raise NotSimpleError(f"rule {self.name!r}: direction must be up or down")
        if not isinstance(self.op, AddChild | AddClass):
            raise NotSimpleError(f"rule {self.name!r}: only addchild and addclass are simple")
        if self.direction is not None and not isinstance(self.op, AddClass):
            raise NotSimpleError(f"rule {self.name!r}: modal guards require addclass")

    @property
    def guard(self) -> Guard:
        inner = atoms_conj(self.classes)
        return inner if self.direction is None else Modal(self.direction, inner)

    @property
    def adds(self) -> frozenset[str]:
        return self.op.classes

    def to_rule(self) -> RewriteRule:
        return RewriteRule(self.name, self.guard, self.op)


@dataclass(frozen=True)
class GuardClassMap:
    """Names of the classes standing for non-atomic guards."""

    classes: dict[Guard, str] = field(default_factory=dict)

    def class_of(self, g: Guard) -> str | None:
        """Class for ``g``; None for ``true``."""
        if isinstance(g, Top):
            return None
        if isinstance(g, Atom):
            return g.name
        return self.classes[g]

    def guard_of(self, name: str) -> Guard:
        for g, c in self.classes.items():
            if c == name:
                return g
        return Atom(name)


@dataclass(frozen=True)
class SimpleSystem:
    """Simple rules over the extended universe.

    ``query_classes`` maps each query to the class standing for it, or None
    when the query is ``true``.
    """

    classes: tuple[str, ...]
    rules: tuple[SimpleRule, ...]
    initial: Tree
    query_classes: dict[str, str | None]
    guard_classes: GuardClassMap = field(default_factory=GuardClassMap)

    def rule(self, name: str) -> SimpleRule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_rewrite_system(self) -> RewriteSystem:
        """View as an ordinary rewrite system with atomic queries."""
        queries = tuple((name, TRUE if c is None else Atom(c)) for name, c in self.query_classes.items())
        return RewriteSystem(self.classes, tuple(r.to_rule() for r in self.rules), self.initial, queries)


def synthetic_class(g: Guard) -> str:
    return SYNTHETIC_PREFIX + format_guard(g)


def fold_true(g: Guard) -> Guard:
    """Remove ``true`` from conjunctions, disjunctions and closures.

    ``(up true)`` and ``(down true)`` are kept: they mean "has a parent" and
    "has a child".
    """
    match g:
        case And(left, right):
            lhs, rhs = fold_true(left), fold_true(right)
            if isinstance(lhs, Top):
                return rhs
            if isinstance(rhs, Top):
                return lhs
            return And(lhs, rhs)
        case Or(left, right):
            lhs, rhs = fold_true(left), fold_true(right)
            if isinstance(lhs, Top) or isinstance(rhs, Top):
                return TRUE
            return Or(lhs, rhs)
        case Not(body):
            return Not(fold_true(body))
        case Modal(direction, body):
            inner = fold_true(body)
            if isinstance(inner, Top) and direction.is_closure:
                return TRUE
            return Modal(direction, inner)
    return g


def to_simple(system: RewriteSystem) -> tuple[SimpleSystem, GuardClassMap]:
    """Simple system equivalent to a positive, removal-free ``system``.

    Every non-atomic subformula g of a guard gets a class ``~g`` and rules
    that add it exactly where g holds. Original rules keep their names and are
    guarded by the class of their guard.

    Raises:
        NotPositiveError: On negation or removal rules
        NotSimpleError: On sibling modalities or sibling insertion
    """
    for r in system.rules:
        if not is_positive(r.guard):
            raise NotPositiveError(f"rule {r.name!r} has a negated guard")
        if is_removal(r.op):
            raise NotPositiveError(f"rule {r.name!r} removes; strip removals first")
        if isinstance(r.op, AddSibling) or uses_siblings(r.guard):
            raise NotSimpleError(f"rule {r.name!r} uses siblings; approximate siblings first")
    for name, g in system.queries:
        if not is_positive(g):
            raise NotPositiveError(f"query {name!r} is negated")
        if uses_siblings(g):
            raise NotSimpleError(f"query {name!r} uses siblings; approximate siblings first")

    rule_guards = [(r, fold_true(r.guard)) for r in system.rules]
    query_guards = [(name, fold_true(g)) for name, g in system.queries]

    mapping: dict[Guard, str] = {}
    order: list[Guard] = []
    for g in [g for _, g in rule_guards] + [g for _, g in query_guards]:
        for sub in subformulas(g):
            if isinstance(sub, Top | Atom) or sub in mapping:
                continue
            mapping[sub] = synthetic_class(sub)
            order.append(sub)
    gmap = GuardClassMap(mapping)

    def as_set(g: Guard) -> frozenset[str]:
        c = gmap.class_of(g)
        return frozenset() if c is None else frozenset({c})

    rules: list[SimpleRule] = []
    counter = 0

    def emit(family: str, direction: Direction | None, classes: frozenset[str], target: Guard) -> None:
        nonlocal counter
        counter += 1
        rules.append(
            SimpleRule(f"~{family}.{counter}", direction, classes, AddClass(frozenset({mapping[target]})), True)
        )

    for g in order:
        match g:
            case And(left, right):
                emit("and", None, as_set(left) | as_set(right), g)
            case Or(left, right):
                emit("or", None, as_set(left), g)
                emit("or", None, as_set(right), g)
            case Modal(direction, body) if direction in (Direction.UP, Direction.DOWN):
                emit("modal", direction, as_set(body), g)
            case Modal(direction, body):
                emit("closure", None, as_set(body), g)
                emit("closure", direction.step, frozenset({mapping[g]}), g)
    for r, g in rule_guards:
        if not isinstance(r.op, AddChild | AddClass):
            raise NotSimpleError(f"rule {r.name!r} has no simple form")
        rules.append(SimpleRule(r.name, None, as_set(g), r.op, False))

    classes = list(system.classes) + [mapping[g] for g in order if mapping[g] not in system.classes]
    queries = {name: gmap.class_of(g) for name, g in query_guards}
    simple = SimpleSystem(tuple(classes), tuple(rules), system.initial, queries, gmap)
    _LOGGER.debug(
        f"Simplified system: {len(system.classes)} -> {len(classes)} classes, "
        f"{len(system.rules)} -> {len(rules)} rules"
    )
    return simple, gmap

