"""Tree-level witness traces."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from .exceptions import RuleApplicationError, WitnessError
from .rewrite import AddChild, apply_rule
from .spds import PdsStep
from .trees import NodePath, Tree, format_tree


@dataclass(frozen=True)
class WitnessStep:
    """Rule ``rule`` applied at ``node``, giving ``tree``."""

    node: NodePath
    rule: str
    tree: Tree
    synthetic: bool = False


@dataclass(frozen=True)
class WitnessTrace:
    initial: Tree
    steps: tuple[WitnessStep, ...] = field(default_factory=tuple)

    @property
    def final(self) -> Tree:
        return self.steps[-1].tree if self.steps else self.initial

    def __len__(self) -> int:
        return len(self.steps)

    def extended(self, steps: Iterable[WitnessStep]) -> WitnessTrace:
        return WitnessTrace(self.initial, self.steps + tuple(steps))

    def prefix(self, length: int) -> WitnessTrace:
        return WitnessTrace(self.initial, self.steps[:length])

    def original_steps(self) -> list[WitnessStep]:
        """Steps of rules from the input system."""
        return [s for s in self.steps if not s.synthetic]

    def describe(self) -> list[str]:
        lines = [f"init {format_tree(self.initial)}"]
        for s in self.steps:
            mark = " (synthetic)" if s.synthetic else ""
            lines.append(f"{s.rule} at {'.'.join(map(str, s.node)) or 'root'}{mark}")
        return lines


def pds_to_tree_witness(node: NodePath, run: Sequence[PdsStep], prefix: WitnessTrace) -> WitnessTrace:
    """Replay a pushdown run on the last tree of ``prefix``, starting at ``node``.

    A pop returns to the parent, an arity-1 step applies its AddClass rule at
    the current node, and a push applies its AddChild rule and moves into the
    new child.

    Raises:
        WitnessError: If a step has no originating rule or does not apply
    """
    tree = prefix.final
    if node not in tree:
        raise WitnessError(f"node {node} is not in the witness tree")
    stack = [node]
    steps: list[WitnessStep] = []
    for i, step in enumerate(run):
        if step.rule.arity == 0:
            stack.pop()
            if not stack:
                raise WitnessError(f"run step {i} pops the local root")
            continue
        origin = step.rule.origin
        if origin is None:
            raise WitnessError(f"run step {i} ({step.rule.name}) has no originating rule")
        here = stack[-1]
        child = tree.fresh_child(here)
        try:
            tree = apply_rule(tree, here, origin.to_rule())
        except RuleApplicationError as e:
            raise WitnessError(f"run step {i}: rule {origin.name!r} does not apply at {here}: {e}") from e
        steps.append(WitnessStep(here, origin.name, tree, origin.synthetic))
        if isinstance(origin.op, AddChild):
            stack.append(child)
    return prefix.extended(steps)
