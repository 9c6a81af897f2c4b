"""Seeded random trees, guards and systems, and shared checks, for property tests."""

from __future__ import annotations

import random
from collections.abc import Callable, Sequence
from pathlib import Path

from treeprune.guards import TRUE, And, Atom, Direction, Guard, Modal, Not, Or
from treeprune.rewrite import AddChild, AddClass, RemoveClass, RemoveNode, RewriteOp, RewriteRule, RewriteSystem
from treeprune.trees import ROOT, NodePath, Tree

ConfigFactory = Callable[..., Path]
TrsFactory = Callable[..., Path]

CLASSES: tuple[str, ...] = ("a", "b", "c", "d")

_DIRECTIONS = (Direction.UP, Direction.DOWN, Direction.UP_STAR, Direction.DOWN_STAR)


def random_label(rng: random.Random, classes: Sequence[str] = CLASSES, most: int = 2) -> frozenset[str]:
    return frozenset(rng.sample(list(classes), rng.randint(0, most)))


def random_tree(rng: random.Random, classes: Sequence[str] = CLASSES, max_nodes: int = 5) -> Tree:
    labels: dict[NodePath, frozenset[str]] = {(): random_label(rng, classes)}
    for _ in range(rng.randint(0, max_nodes - 1)):
        parent = rng.choice(sorted(labels))
        child = Tree(labels).fresh_child(parent)
        labels[child] = random_label(rng, classes)
    return Tree(labels)


def random_guard(
    rng: random.Random, classes: Sequence[str] = CLASSES, depth: int = 2, *, positive: bool = True
) -> Guard:
    if depth == 0 or rng.random() < 0.3:
        return TRUE if rng.random() < 0.1 else Atom(rng.choice(list(classes)))

    def sub() -> Guard:
        return random_guard(rng, classes, depth - 1, positive=positive)

    kind = rng.choice(["and", "or", "modal", "modal"] + ([] if positive else ["not"]))
    if kind == "and":
        return And(sub(), sub())
    if kind == "or":
        return Or(sub(), sub())
    if kind == "not":
        return Not(sub())
    return Modal(rng.choice(_DIRECTIONS), sub())


def random_system(
    rng: random.Random,
    classes: Sequence[str] = CLASSES,
    *,
    rules: int = 3,
    queries: int = 3,
    max_nodes: int = 3,
    removals: bool = False,
) -> RewriteSystem:
    """Positive system with one-class rules.

    Rules add a child or a class; with ``removals`` some remove a class or their node.
    """
    rule_list: list[RewriteRule] = []
    for i in range(rng.randint(1, rules)):
        label = frozenset({rng.choice(list(classes))})
        op: RewriteOp
        if removals and rng.random() < 0.3:
            op = RemoveNode() if rng.random() < 0.5 else RemoveClass(label)
        else:
            op = AddChild(label) if rng.random() < 0.5 else AddClass(label)
        rule_list.append(RewriteRule(f"r{i}", random_guard(rng, classes, 2), op))
    query_list = tuple((f"q{i}", random_guard(rng, classes, 2)) for i in range(queries))
    return RewriteSystem(tuple(classes), tuple(rule_list), random_tree(rng, classes, max_nodes), query_list)


def grow_tree(rng: random.Random, tree: Tree, classes: Sequence[str] = CLASSES, steps: int = 3) -> Tree:
    """Add random children and classes; ``tree`` embeds into the result."""
    for _ in range(rng.randint(0, steps)):
        node = rng.choice(tree.nodes)
        if rng.random() < 0.5:
            tree, _ = tree.with_child(node, random_label(rng, classes))
        else:
            tree = tree.with_classes(node, random_label(rng, classes, most=1))
    return tree


def assert_embedding(small: Tree, big: Tree, mapping: dict[NodePath, NodePath]) -> None:
    """Root to root, labels grow along the map, children go to children."""
    assert mapping[ROOT] == ROOT
    assert set(mapping) == set(small.nodes)
    for u, w in mapping.items():
        assert small.label(u) <= big.label(w)
        for c in small.children(u):
            assert mapping[c] in big.children(w)
