"""Rewrite operations, rules and systems, with the two reference semantics.

``enumerate_post_star`` explores reachable trees breadth-first up to mutual
embedding. ``fixpoint_tree_k`` builds the least tree dominating every tree of
height at most k reachable by a positive, removal-free system.
"""

from __future__ import annotations

import logging
import random
from collections import deque
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from typing import Literal

from .const.defaults import DEFAULT_MAX_NODES, DEFAULT_MAX_STEPS, DEFAULT_MAX_TREES
from .exceptions import (
    HeightBoundError,
    NotPositiveError,
    RuleApplicationError,
    TreePruneInputError,
    UnknownClassError,
)
from .guards import Guard, classes_of, format_guard, is_positive
from .trees import NodePath, Tree, embedding_key, format_label, is_matched, match_guard, matching_nodes

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class AddChild:
    classes: frozenset[str]


@dataclass(frozen=True)
class AddClass:
    classes: frozenset[str]


@dataclass(frozen=True)
class RemoveClass:
    classes: frozenset[str]


@dataclass(frozen=True)
class RemoveNode:
    pass


@dataclass(frozen=True)
class AddSibling:
    """Insert a sibling next to the matched node; only accepted before approximation."""

    classes: frozenset[str]
    position: Literal["before", "after"] = "after"


RewriteOp = AddChild | AddClass | RemoveClass | RemoveNode | AddSibling


def op_classes(op: RewriteOp) -> frozenset[str]:
    return frozenset() if isinstance(op, RemoveNode) else op.classes


def is_removal(op: RewriteOp) -> bool:
    return isinstance(op, RemoveClass | RemoveNode)


@dataclass(frozen=True)
class RewriteRule:
    name: str
    guard: Guard
    op: RewriteOp


@dataclass(frozen=True)
class RewriteSystem:
    """Rules, initial tree and query guards over a class universe.

    ``tags`` names the classes that are HTML element names; it only refines
    how negated tags are approximated.
    """

    classes: tuple[str, ...]
    rules: tuple[RewriteRule, ...]
    initial: Tree
    queries: tuple[tuple[str, Guard], ...] = ()
    tags: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        names = [r.name for r in self.rules]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise TreePruneInputError(f"duplicate rule names: {', '.join(dupes)}")
        qnames = [q for q, _ in self.queries]
        qdupes = sorted({n for n in qnames if qnames.count(n) > 1})
        if qdupes:
            raise TreePruneInputError(f"duplicate query names: {', '.join(qdupes)}")
        universe = set(self.classes)
        used = set(self.initial.classes())
        for r in self.rules:
            used |= classes_of(r.guard) | op_classes(r.op)
        for _, g in self.queries:
            used |= classes_of(g)
        missing = used - universe
        if missing:
            raise UnknownClassError(f"classes not declared: {', '.join(sorted(missing))}")

    def rule(self, name: str) -> RewriteRule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def is_positive(self) -> bool:
        return all(is_positive(r.guard) for r in self.rules)

    @property
    def has_removals(self) -> bool:
        return any(is_removal(r.op) for r in self.rules)


@dataclass(frozen=True)
class EnumerationCaps:
    """Limits for explicit enumeration."""

    max_nodes: int = DEFAULT_MAX_NODES
    max_trees: int = DEFAULT_MAX_TREES
    max_steps: int = DEFAULT_MAX_STEPS

    def __post_init__(self) -> None:
        if min(self.max_nodes, self.max_trees, self.max_steps) < 1:
            raise TreePruneInputError("enumeration caps must be positive")


@dataclass(frozen=True)
class PostStar:
    """Trees reached by enumeration, one per mutual-embedding class.

    ``exhausted`` is true when the frontier emptied before ``max_trees`` or
    ``max_steps`` ran out. ``truncated`` is true when some tree exceeded
    ``max_nodes`` and was kept without being expanded.
    """

    trees: tuple[Tree, ...]
    exhausted: bool
    truncated: bool = False

    @property
    def exact(self) -> bool:
        return self.exhausted and not self.truncated

    def matched(self, guards: Sequence[Guard]) -> list[Guard]:
        """Guards matched somewhere in some enumerated tree."""
        return [g for g in guards if any(is_matched(t, g) for t in self.trees)]


def apply_rule(tree: Tree, node: NodePath, rule: RewriteRule) -> Tree:
    """Apply ``rule`` at ``node``; the input tree is left untouched.

    Raises:
        RuleApplicationError: If the guard does not match, the node is missing,
            or a RemoveNode targets the root
    """
    if not match_guard(tree, node, rule.guard):
        raise RuleApplicationError(f"rule {rule.name!r} does not match at {list(node)}")
    op = rule.op
    match op:
        case AddClass(classes):
            return tree.with_classes(node, classes)
        case AddChild(classes):
            return tree.with_child(node, classes)[0]
        case RemoveClass(classes):
            return tree.without_classes(node, classes)
        case RemoveNode():
            if not node:
                raise RuleApplicationError("cannot remove the root")
            return tree.without_subtree(node)
        case AddSibling():
            raise RuleApplicationError(f"rule {rule.name!r} inserts a sibling; approximate siblings first")
    raise TypeError(f"unknown operation {op!r}")


def successors(
    tree: Tree, rules: Iterable[RewriteRule], max_height: int | None = None
) -> Iterator[tuple[NodePath, RewriteRule, Tree]]:
    """Every one-step rewrite of ``tree``."""
    for rule in rules:
        for node in sorted(matching_nodes(tree, rule.guard)):
            if isinstance(rule.op, AddChild) and max_height is not None and len(node) >= max_height:
                continue
            if isinstance(rule.op, RemoveNode) and not node:
                continue
            yield node, rule, apply_rule(tree, node, rule)


def enumerate_post_star(
    system: RewriteSystem,
    caps: EnumerationCaps | None = None,
    max_height: int | None = None,
) -> PostStar:
    """Breadth-first closure of the rewrite relation from the initial tree.

    Trees are deduplicated up to mutual embedding. With ``max_height`` set,
    only trees of that height or less are generated.
    """
    caps = caps or EnumerationCaps()
    start = system.initial
    seen: dict[str, Tree] = {embedding_key(start): start}
    queue: deque[Tree] = deque([start])
    steps = 0
    truncated = False
    while queue:
        tree = queue.popleft()
        if len(tree) > caps.max_nodes:
            truncated = True
            continue
        for _, _, nxt in successors(tree, system.rules, max_height):
            steps += 1
            key = embedding_key(nxt)
            if key not in seen:
                seen[key] = nxt
                queue.append(nxt)
            if steps >= caps.max_steps or len(seen) >= caps.max_trees:
                _LOGGER.debug(f"Enumeration capped after {steps} steps, {len(seen)} trees")
                return PostStar(tuple(seen.values()), exhausted=False, truncated=truncated)
    _LOGGER.debug(f"Enumeration exhausted after {steps} steps, {len(seen)} trees")
    return PostStar(tuple(seen.values()), exhausted=True, truncated=truncated)


def fixpoint_tree_k(system: RewriteSystem, k: int, rng: random.Random | None = None) -> Tree:
    """Least tree dominating every tree of height at most ``k`` reachable from the initial tree.

    Args:
        system: Positive system with only AddChild and AddClass rules
        k: Height bound
        rng: Shuffles rule and node order when given; the result does not depend on order

    Raises:
        NotPositiveError: On negated guards or removal rules
        HeightBoundError: If the initial tree is already taller than ``k``
    """
    for r in system.rules:
        if not is_positive(r.guard):
            raise NotPositiveError(f"rule {r.name!r} has a negated guard")
        if not isinstance(r.op, AddChild | AddClass):
            raise NotPositiveError(f"rule {r.name!r} is not AddChild or AddClass")
    if k < 0:
        raise TreePruneInputError("height bound must be non-negative")
    tree = system.initial
    if tree.height > k:
        raise HeightBoundError(f"initial tree has height {tree.height}, above bound {k}")

    # Guards are positive, so a node matched at the start of a round stays
    # matched while the round grows the tree.
    changed = True
    while changed:
        changed = False
        rules = list(system.rules)
        if rng is not None:
            rng.shuffle(rules)
        for rule in rules:
            nodes = sorted(matching_nodes(tree, rule.guard))
            if rng is not None:
                rng.shuffle(nodes)
            op = rule.op
            for node in nodes:
                if isinstance(op, AddClass):
                    if op.classes <= tree.label(node):
                        continue
                    tree = tree.with_classes(node, op.classes)
                elif isinstance(op, AddChild):
                    if len(node) > k - 1:
                        continue
                    if any(op.classes <= tree.label(c) for c in tree.children(node)):
                        continue
                    tree = tree.with_child(node, op.classes)[0]
                changed = True
    _LOGGER.debug(f"Fixpoint tree at k={k} has {len(tree)} nodes")
    return tree


def matched_set(tree: Tree, guards: Sequence[Guard]) -> list[Guard]:
    """The guards of ``guards`` matched at some node of ``tree``, in input order."""
    return [g for g in guards if is_matched(tree, g)]


def describe_rule(rule: RewriteRule) -> str:
    return f"{rule.name}: {format_guard(rule.guard)} => {format_op(rule.op)}"


def format_op(op: RewriteOp) -> str:
    match op:
        case AddChild(classes):
            return f"addchild {format_label(classes)}"
        case AddClass(classes):
            return f"addclass {format_label(classes)}"
        case RemoveClass(classes):
            return f"removeclass {format_label(classes)}"
        case RemoveNode():
            return "removenode"
        case AddSibling(classes, position):
            return f"{position} {format_label(classes)}"
    raise TypeError(f"unknown operation {op!r}")
