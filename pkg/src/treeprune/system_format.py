"""Line-oriented text format for rewrite systems.

Example::

    classes root team P1 P2 success
    init (root)
    rule add_team  root => addchild {team}
    rule succ      (and (down P1) (down P2)) => addchild {success}
    query q_success (down* success)

A line starting with ``#``, or a ``#`` with whitespace on both sides, opens a
comment, so ID classes such as ``#limit`` stay usable. Declaring ``classes`` closes the
universe; without it every class seen is declared in order of appearance.
"""

from __future__ import annotations

import logging
from pathlib import Path

from .exceptions import GuardSyntaxError, SystemFormatError, TreePruneInputError, UnknownClassError
from .guards import Guard, class_name, classes_of, format_class, format_guard, parse_guard, tokenize
from .rewrite import (
    AddChild,
    AddClass,
    AddSibling,
    RemoveClass,
    RemoveNode,
    RewriteOp,
    RewriteRule,
    RewriteSystem,
    format_op,
    op_classes,
)
from .trees import Tree, format_tree, parse_label, parse_tree

_LOGGER = logging.getLogger(__name__)

_LABEL_OPS = {"addchild": AddChild, "addclass": AddClass, "removeclass": RemoveClass}


def strip_comment(line: str) -> str:
    """Drop a trailing comment, honouring double-quoted class names."""
    if line.lstrip().startswith("#"):
        return ""
    in_string = False
    prev = " "
    for i, ch in enumerate(line):
        if ch == '"' and prev != "\\":
            in_string = not in_string
        elif ch == "#" and not in_string and prev.isspace():
            nxt = line[i + 1 : i + 2]
            if not nxt or nxt.isspace():
                return line[:i]
        prev = ch
    return line


def _split_arrow(text: str) -> tuple[str, str]:
    in_string = False
    for i, ch in enumerate(text):
        if ch == '"':
            in_string = not in_string
        elif not in_string and text.startswith("=>", i):
            return text[:i], text[i + 2 :]
    raise ValueError("missing '=>'")


def parse_op(text: str, classes: frozenset[str] | None = None) -> RewriteOp:
    """Parse one operation, such as ``addchild {a,b}`` or ``removenode``."""
    head, _, rest = text.strip().partition(" ")
    head = head.lower()
    rest = rest.strip()
    if head == "removenode":
        if rest:
            raise ValueError("removenode takes no argument")
        return RemoveNode()
    label = parse_label(rest, classes) if rest else None
    if label is None:
        raise ValueError(f"'{head}' needs a label")
    if head in _LABEL_OPS:
        return _LABEL_OPS[head](label)
    if head in ("before", "after"):
        return AddSibling(label, "before" if head == "before" else "after")
    raise ValueError(f"unknown operation {head!r}")


def parse_system(text: str) -> RewriteSystem:
    """Parse rewrite-system text.

    Raises:
        SystemFormatError: With the offending line number
    """
    declared: list[str] = []
    tags: list[str] = []
    closed = False
    entries: list[tuple[int, str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = strip_comment(raw).strip()
        if not line:
            continue
        directive, _, rest = line.partition(" ")
        directive = directive.lower()
        rest = rest.strip()
        if directive in ("classes", "tags"):
            target = declared if directive == "classes" else tags
            try:
                names = [class_name(tok) for tok in tokenize(rest)]
            except GuardSyntaxError as e:
                raise SystemFormatError(str(e), lineno) from e
            for name in names:
                if name not in target:
                    target.append(name)
            closed = closed or directive == "classes"
        elif directive in ("init", "rule", "query"):
            entries.append((lineno, directive, rest))
        else:
            raise SystemFormatError(f"unknown directive {directive!r}", lineno)

    universe = frozenset(declared) if closed else None
    seen = list(declared)

    def note(names: frozenset[str]) -> None:
        for name in sorted(names):
            if name not in seen:
                seen.append(name)

    initial: Tree | None = None
    rules: list[RewriteRule] = []
    queries: list[tuple[str, Guard]] = []
    for lineno, directive, rest in entries:
        try:
            if directive == "init":
                if initial is not None:
                    raise ValueError("duplicate init")
                initial = parse_tree(rest, universe)
                for _, label in initial.items():
                    note(label)
            elif directive == "rule":
                name, _, body = rest.partition(" ")
                if not name or not body.strip():
                    raise ValueError("expected 'rule NAME GUARD => OP'")
                guard_text, op_text = _split_arrow(body)
                guard = parse_guard(guard_text, universe)
                op = parse_op(op_text, universe)
                note(classes_of(guard))
                note(op_classes(op))
                rules.append(RewriteRule(name, guard, op))
            else:
                name, _, body = rest.partition(" ")
                if not name or not body.strip():
                    raise ValueError("expected 'query NAME GUARD'")
                guard = parse_guard(body, universe)
                note(classes_of(guard))
                queries.append((name, guard))
        except (GuardSyntaxError, UnknownClassError, ValueError) as e:
            raise SystemFormatError(str(e), lineno) from e

    if initial is None:
        raise SystemFormatError("missing 'init' line")
    unknown_tags = set(tags) - set(seen)
    if closed and unknown_tags:
        raise SystemFormatError(f"tags not declared as classes: {', '.join(sorted(unknown_tags))}")
    seen.extend(t for t in tags if t not in seen)
    try:
        system = RewriteSystem(tuple(seen), tuple(rules), initial, tuple(queries), frozenset(tags))
    except TreePruneInputError as e:
        raise SystemFormatError(str(e)) from e
    _LOGGER.debug(f"Parsed system: {len(system.classes)} classes, {len(rules)} rules, {len(queries)} queries")
    return system


def load_system(path: str | Path) -> RewriteSystem:
    """Read and parse a ``.trs`` file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise TreePruneInputError(f"Cannot read {path}: {e}") from e
    return parse_system(text)


def format_system(system: RewriteSystem) -> str:
    """Render ``system`` in the text format; ``parse_system`` reads it back to an equal system."""
    lines = ["classes " + " ".join(format_class(c) for c in system.classes)]
    if system.tags:
        lines.append("tags " + " ".join(format_class(c) for c in sorted(system.tags)))
    lines.append(f"init {format_tree(system.initial)}")
    for r in system.rules:
        lines.append(f"rule {r.name} {format_guard(r.guard)} => {format_op(r.op)}")
    for name, g in system.queries:
        lines.append(f"query {name} {format_guard(g)}")
    return "\n".join(lines) + "\n"
