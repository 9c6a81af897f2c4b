"""Unordered labeled trees, guard matching and the embedding preorder."""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field

from .exceptions import GuardSyntaxError, NodeNotFoundError, NotSimpleError, TreePruneInputError
from .guards import (
    And,
    Atom,
    Direction,
    Guard,
    Modal,
    Not,
    Or,
    Token,
    Top,
    class_name,
    format_class,
    simple_shape,
    tokenize,
)

NodePath = tuple[int, ...]
ROOT: NodePath = ()

Label = frozenset[str]


class Tree:
    """Immutable tree with a prefix-closed domain of node paths.

    Children are keyed by index; sibling order carries no meaning.
    """

    __slots__ = ("_labels", "_children")

    def __init__(self, labels: Mapping[NodePath, Iterable[str]]) -> None:
        if ROOT not in labels:
            raise TreePruneInputError("tree domain must contain the root")
        self._labels: dict[NodePath, Label] = {tuple(v): frozenset(x) for v, x in labels.items()}
        self._children: dict[NodePath, list[NodePath]] = {v: [] for v in self._labels}
        for v in sorted(self._labels):
            if v == ROOT:
                continue
            if v[:-1] not in self._labels:
                raise TreePruneInputError(f"tree domain is not prefix-closed at {list(v)}")
            self._children[v[:-1]].append(v)

    @classmethod
    def single(cls, label: Iterable[str] = ()) -> Tree:
        return cls({ROOT: label})

    @property
    def nodes(self) -> tuple[NodePath, ...]:
        """Node paths in preorder."""
        return tuple(sorted(self._labels))

    def __contains__(self, node: object) -> bool:
        return node in self._labels

    def __len__(self) -> int:
        return len(self._labels)

    def __iter__(self) -> Iterator[NodePath]:
        return iter(self.nodes)

    def label(self, node: NodePath) -> Label:
        try:
            return self._labels[node]
        except KeyError:
            raise NodeNotFoundError(f"node {list(node)} not in tree") from None

    def children(self, node: NodePath) -> tuple[NodePath, ...]:
        if node not in self._children:
            raise NodeNotFoundError(f"node {list(node)} not in tree")
        return tuple(self._children[node])

    @staticmethod
    def parent(node: NodePath) -> NodePath | None:
        return node[:-1] if node else None

    @property
    def height(self) -> int:
        return max(len(v) for v in self._labels)

    def classes(self) -> frozenset[str]:
        """Union of all node labels."""
        return frozenset().union(*self._labels.values())

    def items(self) -> Iterator[tuple[NodePath, Label]]:
        for v in self.nodes:
            yield v, self._labels[v]

    def descendants(self, node: NodePath) -> Iterator[NodePath]:
        """Descendants of ``node`` including itself."""
        stack = [node]
        while stack:
            v = stack.pop()
            yield v
            stack.extend(self._children[v])

    # --- persistent updates -------------------------------------------------

    def with_classes(self, node: NodePath, classes: Iterable[str]) -> Tree:
        labels = dict(self._labels)
        labels[node] = self.label(node) | frozenset(classes)
        return Tree(labels)

    def without_classes(self, node: NodePath, classes: Iterable[str]) -> Tree:
        labels = dict(self._labels)
        labels[node] = self.label(node) - frozenset(classes)
        return Tree(labels)

    def fresh_child(self, node: NodePath) -> NodePath:
        """Path of the child of ``node`` with the smallest unused index."""
        used = {c[-1] for c in self.children(node)}
        i = 0
        while i in used:
            i += 1
        return (*node, i)

    def with_child(self, node: NodePath, classes: Iterable[str]) -> tuple[Tree, NodePath]:
        child = self.fresh_child(node)
        labels = dict(self._labels)
        labels[child] = frozenset(classes)
        return Tree(labels), child

    def without_subtree(self, node: NodePath) -> Tree:
        if node == ROOT:
            raise TreePruneInputError("cannot remove the root")
        self.label(node)
        n = len(node)
        return Tree({v: x for v, x in self._labels.items() if v[:n] != node})

    # --- dunder ------------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Tree):
            return NotImplemented
        return self._labels == other._labels

    def __hash__(self) -> int:
        return hash(frozenset(self._labels.items()))

    def __repr__(self) -> str:
        return f"Tree({format_tree(self)})"


@dataclass(frozen=True)
class AssumptionFunction:
    """Context of a local root: whether it is the real root, and its parent's classes."""

    is_root: bool
    parent_classes: Label = field(default_factory=frozenset)

    @classmethod
    def at_root(cls) -> AssumptionFunction:
        return cls(True, frozenset())

    @classmethod
    def below(cls, parent_classes: Iterable[str]) -> AssumptionFunction:
        return cls(False, frozenset(parent_classes))


def assumption_for(tree: Tree, node: NodePath) -> AssumptionFunction:
    """Assumption describing where ``node`` sits in ``tree``."""
    parent = Tree.parent(node)
    if parent is None:
        return AssumptionFunction.at_root()
    return AssumptionFunction.below(tree.label(parent))


# --- s-expression form --------------------------------------------------------


def format_label(label: Iterable[str]) -> str:
    return "{" + ",".join(format_class(c) for c in sorted(label)) + "}"


def format_tree(tree: Tree, node: NodePath = ROOT) -> str:
    """Print ``tree`` as ``(label child ...)``."""
    parts = [format_label(tree.label(node))]
    parts.extend(format_tree(tree, c) for c in tree.children(node))
    return "(" + " ".join(parts) + ")"


class _TreeParser:
    def __init__(self, tokens: list[Token], classes: frozenset[str] | None) -> None:
        self.tokens = tokens
        self.pos = 0
        self.classes = classes
        self.labels: dict[NodePath, Label] = {}

    def _next(self) -> Token:
        if self.pos >= len(self.tokens):
            raise GuardSyntaxError("unexpected end of tree", self.tokens[-1].pos if self.tokens else 0)
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def label(self) -> Label:
        tok = self._next()
        if tok.kind in ("word", "string"):
            return frozenset({class_name(tok, self.classes)})
        if tok.kind != "{":
            raise GuardSyntaxError(f"expected label, got {tok.value!r}", tok.pos)
        names: set[str] = set()
        while True:
            tok = self._next()
            if tok.kind == "}":
                return frozenset(names)
            if tok.kind == ",":
                continue
            names.add(class_name(tok, self.classes))

    def node(self, path: NodePath) -> None:
        tok = self._next()
        if tok.kind != "(":
            raise GuardSyntaxError(f"expected '(', got {tok.value!r}", tok.pos)
        self.labels[path] = self.label()
        index = 0
        while True:
            if self.pos >= len(self.tokens):
                raise GuardSyntaxError("missing ')'", tok.pos)
            if self.tokens[self.pos].kind == ")":
                self.pos += 1
                return
            self.node((*path, index))
            index += 1


def parse_tree(text: str, classes: Iterable[str] | None = None) -> Tree:
    """Parse ``({root} ({team} ({P1})))`` style tree text."""
    tokens = tokenize(text)
    parser = _TreeParser(tokens, frozenset(classes) if classes is not None else None)
    parser.node(ROOT)
    if parser.pos != len(tokens):
        extra = tokens[parser.pos]
        raise GuardSyntaxError(f"trailing input {extra.value!r}", extra.pos)
    return Tree(parser.labels)


# --- matching -----------------------------------------------------------------


def matching_nodes(tree: Tree, guard: Guard) -> frozenset[NodePath]:
    """All nodes of ``tree`` that match ``guard``.

    Raises:
        NotSimpleError: If ``guard`` uses sibling modalities
    """
    cache: dict[Guard, frozenset[NodePath]] = {}
    return _matching(tree, guard, cache)


def _matching(tree: Tree, g: Guard, cache: dict[Guard, frozenset[NodePath]]) -> frozenset[NodePath]:
    if g in cache:
        return cache[g]
    nodes = tree.nodes
    result: frozenset[NodePath]
    match g:
        case Top():
            result = frozenset(nodes)
        case Atom(name):
            result = frozenset(v for v in nodes if name in tree.label(v))
        case And(left, right):
            result = _matching(tree, left, cache) & _matching(tree, right, cache)
        case Or(left, right):
            result = _matching(tree, left, cache) | _matching(tree, right, cache)
        case Not(body):
            result = frozenset(nodes) - _matching(tree, body, cache)
        case Modal(direction, body):
            inner = _matching(tree, body, cache)
            if direction is Direction.UP:
                result = frozenset(c for v in inner for c in tree.children(v))
            elif direction is Direction.DOWN:
                result = frozenset(v[:-1] for v in inner if v)
            elif direction is Direction.UP_STAR:
                result = frozenset(d for v in inner for d in tree.descendants(v))
            elif direction is Direction.DOWN_STAR:
                result = frozenset(v[:i] for v in inner for i in range(len(v) + 1))
            else:
                raise NotSimpleError(f"sibling modality {direction.value!r} has no tree semantics")
        case _:
            raise TypeError(f"not a guard: {g!r}")
    cache[g] = result
    return result


def match_guard(tree: Tree, node: NodePath, guard: Guard) -> bool:
    """Whether ``node`` matches ``guard`` in ``tree``.

    Raises:
        NodeNotFoundError: If ``node`` is not in the tree
    """
    if node not in tree:
        raise NodeNotFoundError(f"node {list(node)} not in tree")
    return node in matching_nodes(tree, guard)


def match_guard_assume(tree: Tree, node: NodePath, guard: Guard, f: AssumptionFunction) -> bool:
    """Match a simple guard, reading ``up`` at the tree root from ``f``."""
    shape = simple_shape(guard)
    if shape is None:
        raise NotSimpleError(f"guard is not simple: {guard}")
    direction, classes = shape
    if node == ROOT and direction is Direction.UP:
        if node not in tree:
            raise NodeNotFoundError("empty tree")
        return not f.is_root and classes <= f.parent_classes
    return match_guard(tree, node, guard)


def is_matched(tree: Tree, guard: Guard) -> bool:
    """Whether some node of ``tree`` matches ``guard``."""
    return bool(matching_nodes(tree, guard))


# --- embedding ----------------------------------------------------------------


def find_embedding(t1: Tree, t2: Tree) -> dict[NodePath, NodePath] | None:
    """A map witnessing ``t1`` embeds into ``t2``, or None.

    Roots map to roots, labels grow along the map, and children map to
    children. The map need not be injective.
    """
    memo: dict[tuple[NodePath, NodePath], bool] = {}

    def embeds(u: NodePath, w: NodePath) -> bool:
        key = (u, w)
        if key not in memo:
            memo[key] = t1.label(u) <= t2.label(w) and all(
                any(embeds(c, d) for d in t2.children(w)) for c in t1.children(u)
            )
        return memo[key]

    if not embeds(ROOT, ROOT):
        return None
    mapping: dict[NodePath, NodePath] = {}
    stack = [(ROOT, ROOT)]
    while stack:
        u, w = stack.pop()
        mapping[u] = w
        for c in t1.children(u):
            d = next(d for d in t2.children(w) if embeds(c, d))
            stack.append((c, d))
    return mapping


def is_embedded(t1: Tree, t2: Tree) -> bool:
    return find_embedding(t1, t2) is not None


@dataclass(frozen=True)
class _Shape:
    label: Label
    children: tuple[_Shape, ...]
    key: str


def _shape_embeds(a: _Shape, b: _Shape, memo: dict[tuple[str, str], bool]) -> bool:
    k = (a.key, b.key)
    if k not in memo:
        memo[k] = a.label <= b.label and all(any(_shape_embeds(c, d, memo) for d in b.children) for c in a.children)
    return memo[k]


def embedding_key(tree: Tree) -> str:
    """Canonical text for the mutual-embedding class of ``tree``.

    Two trees embed into each other iff their keys are equal. Children that
    embed into a sibling are dropped before printing.
    """
    memo: dict[tuple[str, str], bool] = {}

    def shape(v: NodePath) -> _Shape:
        kids: dict[str, _Shape] = {}
        for c in tree.children(v):
            s = shape(c)
            kids.setdefault(s.key, s)
        kept = [
            s for s in kids.values() if not any(o.key != s.key and _shape_embeds(s, o, memo) for o in kids.values())
        ]
        kept.sort(key=lambda s: s.key)
        text = "(" + " ".join([format_label(tree.label(v)), *(s.key for s in kept)]) + ")"
        return _Shape(tree.label(v), tuple(kept), text)

    return shape(ROOT).key


def parse_label(text: str, classes: Iterable[str] | None = None) -> Label:
    """Parse ``{a,b}``, ``{a b}`` or a single class."""
    tokens = tokenize(text)
    parser = _TreeParser(tokens, frozenset(classes) if classes is not None else None)
    label = parser.label()
    if parser.pos != len(tokens):
        extra = tokens[parser.pos]
        raise GuardSyntaxError(f"trailing input {extra.value!r}", extra.pos)
    return label
