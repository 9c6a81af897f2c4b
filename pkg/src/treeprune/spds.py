"""Symbolic pushdown systems for class-adding queries.

A stack letter describes one tree node: its classes (``y``), its parent's
classes (``z``) and whether it is the tree root (``root``). The control state
remembers the classes of the child just popped (``x``) and whether a pop just
happened (``pop``). Pushing a letter creates a child; popping returns to the
parent.

Reachability is decided backwards: a P-automaton is saturated in rounds
until nothing changes. ``ctl`` holds transitions that pop the top letter and
land in a control state (over ``x2``/``pop2``). ``fin`` holds letters from
which the target class can be added to that very letter, or, in anywhere
mode, to it or to some descendant.

Variable names are ``<block>:<class>`` for per-class blocks and plain names
for the scalars. Blocks of one class sit next to each other in the order so
that every rule relation stays linear in size.
"""

from __future__ import annotations

import logging
import os
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .bdd import FALSE, BddManager, BddRef, Expr, Iff, Neg, Var, all_of, build_formula
from .const.defaults import THREADS_ENV
from .exceptions import NotSimpleError, TreePruneError, UnknownClassError, WitnessError
from .guards import Direction
from .rewrite import AddChild, AddClass
from .simplify import SimpleRule, SimpleSystem
from .trees import AssumptionFunction

_LOGGER = logging.getLogger(__name__)

_SCALARS = ("pop", "pop1", "pop3", "pop2", "root", "root1", "root2")
_BLOCKS = ("x", "x1", "x3", "x2", "y", "y1", "y2", "z", "z1", "z2")


def _v(block: str, c: str) -> str:
    return f"{block}:{c}"


# --- configurations -----------------------------------------------------------


@dataclass(frozen=True)
class ControlState:
    """Whether a child was just popped, and that child's classes."""

    pop: bool = False
    returned: frozenset[str] = field(default_factory=frozenset)


@dataclass(frozen=True)
class StackLetter:
    """One node: its classes, its parent's classes and whether it is the root."""

    classes: frozenset[str]
    parent: frozenset[str] = field(default_factory=frozenset)
    root: bool = False


@dataclass(frozen=True)
class Config:
    """Control state and stack; the top of the stack is the last letter."""

    control: ControlState
    stack: tuple[StackLetter, ...]

    @property
    def top(self) -> StackLetter:
        if not self.stack:
            raise WitnessError("empty stack")
        return self.stack[-1]


@dataclass(frozen=True)
class SymbolicRule:
    """A pushdown rule; arity is the number of letters replacing the top."""

    index: int
    arity: int
    relation: BddRef
    origin: SimpleRule | None
    name: str


@dataclass(frozen=True)
class PdsStep:
    """One concrete rule firing.

    ``replacement`` lists the letters replacing the top, bottom first: empty
    for a pop, the updated letter for arity 1, and (updated node, new child)
    for a push.
    """

    rule: SymbolicRule
    control: ControlState
    letter: StackLetter
    target: ControlState
    replacement: tuple[StackLetter, ...]


# --- construction -------------------------------------------------------------


class SPds:
    """Symbolic pushdown system over a fixed list of relevant classes."""

    def __init__(self, classes: Sequence[str], universe: Iterable[str]) -> None:
        self.classes: tuple[str, ...] = tuple(classes)
        self.universe: frozenset[str] = frozenset(universe)
        order = list(_SCALARS) + [_v(b, c) for c in self.classes for b in _BLOCKS]
        self.manager = BddManager(order)
        self.rules: list[SymbolicRule] = []
        cs = self.classes
        self.to_succ: dict[str, str] = {"pop": "pop1", "root": "root1"}
        self.to_push: dict[str, str] = {"pop": "pop1", "pop2": "pop3", "root": "root2"}
        self.to_below: dict[str, str] = {"pop": "pop3", "root": "root1"}
        self.pop_to_q: dict[str, str] = {"pop1": "pop2"}
        for c in cs:
            self.to_succ.update({_v("x", c): _v("x1", c), _v("y", c): _v("y1", c), _v("z", c): _v("z1", c)})
            self.to_push.update(
                {_v("x", c): _v("x1", c), _v("x2", c): _v("x3", c), _v("y", c): _v("y2", c), _v("z", c): _v("z2", c)}
            )
            self.to_below.update({_v("x", c): _v("x3", c), _v("y", c): _v("y1", c), _v("z", c): _v("z1", c)})
            self.pop_to_q[_v("x1", c)] = _v("x2", c)
        self.control_vars = ["pop", *(_v("x", c) for c in cs)]
        self.letter_vars = ["root", *(_v(b, c) for c in cs for b in ("y", "z"))]
        self.q_vars = ["pop2", *(_v("x2", c) for c in cs)]
        w1 = ["root1", *(_v(b, c) for c in cs for b in ("y1", "z1"))]
        w2 = ["root2", *(_v(b, c) for c in cs for b in ("y2", "z2"))]
        v1 = ["pop1", *(_v("x1", c) for c in cs)]
        m = ["pop3", *(_v("x3", c) for c in cs)]
        self.succ_vars = v1 + w1
        self.push_vars = v1 + w2
        self.below_vars = m + w1
        self.push_any_vars = v1 + w2 + w1

    # relation helpers

    def _frame_control(self) -> list[Expr]:
        return [Iff(Var("pop1"), Var("pop")), *(Iff(Var(_v("x1", c)), Var(_v("x", c))) for c in self.classes)]

    def _frame_letter(self, added: frozenset[str]) -> list[Expr]:
        parts: list[Expr] = [Iff(Var("root1"), Var("root"))]
        for c in self.classes:
            parts.append(Var(_v("y1", c)) if c in added else Iff(Var(_v("y1", c)), Var(_v("y", c))))
            parts.append(Iff(Var(_v("z1", c)), Var(_v("z", c))))
        return parts

    def add_rule(self, rule: SimpleRule) -> SymbolicRule:
        """Encode ``rule``; returns the symbolic rule."""
        unknown = (rule.classes | rule.adds) - set(self.classes)
        if unknown:
            raise UnknownClassError(f"rule {rule.name!r} uses classes outside the system: {sorted(unknown)}")
        guard = sorted(rule.classes)
        if isinstance(rule.op, AddClass):
            if rule.direction is None:
                pre: list[Expr] = [Var(_v("y", a)) for a in guard]
            elif rule.direction is Direction.UP:
                pre = [Neg(Var("root")), *(Var(_v("z", a)) for a in guard)]
            elif rule.direction is Direction.DOWN:
                pre = [Var("pop"), *(Var(_v("x", a)) for a in guard)]
            else:
                raise NotSimpleError(f"rule {rule.name!r} is not simple")
            expr = all_of(*pre, *self._frame_letter(rule.adds), *self._frame_control())
            arity = 1
        elif isinstance(rule.op, AddChild) and rule.direction is None:
            parts: list[Expr] = [Var(_v("y", a)) for a in guard]
            parts += [Neg(Var("root2")), Neg(Var("pop1"))]
            for c in self.classes:
                parts.append(Var(_v("y2", c)) if c in rule.adds else Neg(Var(_v("y2", c))))
                parts.append(Iff(Var(_v("z2", c)), Var(_v("y", c))))
                parts.append(Neg(Var(_v("x1", c))))
            parts += self._frame_letter(frozenset())
            expr = all_of(*parts)
            arity = 2
        else:
            raise NotSimpleError(f"rule {rule.name!r} is not simple")
        sym = SymbolicRule(len(self.rules), arity, build_formula(self.manager, expr), rule, rule.name)
        self.rules.append(sym)
        return sym

    def add_pop_rule(self) -> SymbolicRule:
        expr = all_of(
            Neg(Var("root")),
            Var("pop1"),
            *(Iff(Var(_v("x1", c)), Var(_v("y", c))) for c in self.classes),
        )
        sym = SymbolicRule(len(self.rules), 0, build_formula(self.manager, expr), None, "pop")
        self.rules.append(sym)
        return sym

    # assignments

    def control_assignment(self, state: ControlState, block: str = "x", flag: str = "pop") -> dict[str, bool]:
        values = {flag: state.pop}
        values.update({_v(block, c): c in state.returned for c in self.classes})
        return values

    def letter_assignment(self, letter: StackLetter, suffix: str = "") -> dict[str, bool]:
        values = {f"root{suffix}": letter.root}
        for c in self.classes:
            values[_v(f"y{suffix}", c)] = c in letter.classes
            values[_v(f"z{suffix}", c)] = c in letter.parent and not letter.root
        return values

    def decode_control(self, model: Mapping[str, bool], block: str, flag: str) -> ControlState:
        return ControlState(model.get(flag, False), frozenset(c for c in self.classes if model.get(_v(block, c))))

    def decode_letter(self, model: Mapping[str, bool], suffix: str) -> StackLetter:
        root = model.get(f"root{suffix}", False)
        classes = frozenset(c for c in self.classes if model.get(_v(f"y{suffix}", c)))
        parent = frozenset() if root else frozenset(c for c in self.classes if model.get(_v(f"z{suffix}", c)))
        return StackLetter(classes, parent, root)

    def letter_for(self, classes: Iterable[str], f: AssumptionFunction) -> StackLetter:
        """Letter for a local root with label ``classes`` under assumption ``f``."""
        cs = set(self.classes)
        parent = frozenset() if f.is_root else f.parent_classes & cs
        return StackLetter(frozenset(classes) & cs, parent, f.is_root)

    def step_assignment(self, step: PdsStep) -> dict[str, bool]:
        values = dict.fromkeys(self.manager.variables, False)
        values.update(self.control_assignment(step.control))
        values.update(self.letter_assignment(step.letter))
        values.update(self.control_assignment(step.target, "x1", "pop1"))
        if step.replacement:
            values.update(self.letter_assignment(step.replacement[0], "1"))
        if len(step.replacement) > 1:
            values.update(self.letter_assignment(step.replacement[1], "2"))
        return values

    def describe(self) -> list[str]:
        """One line per rule with provenance and BDD size."""
        lines = [f"classes: {' '.join(self.classes)}"]
        for r in self.rules:
            origin = r.origin.name if r.origin is not None else "pop"
            lines.append(f"{r.index:4d} arity={r.arity} nodes={self.manager.node_count(r.relation):5d} {origin}")
        return lines


def relevant_classes(system: SimpleSystem, rules: Iterable[SimpleRule], extra: Iterable[str] = ()) -> list[str]:
    """Classes used by ``rules`` or listed in ``extra``, in declaration order."""
    used = set(extra)
    for r in rules:
        used |= r.classes | r.adds
    return [c for c in system.classes if c in used]


def build_spds(system: SimpleSystem, extra_classes: Iterable[str] = ()) -> SPds:
    """One symbolic rule per simple rule, plus the pop rule.

    Raises:
        NotSimpleError: If a rule has no pushdown encoding
    """
    spds = SPds(relevant_classes(system, system.rules, extra_classes), system.classes)
    for rule in system.rules:
        spds.add_rule(rule)
    spds.add_pop_rule()
    _LOGGER.debug(f"Built sPDS with {len(spds.classes)} classes and {len(spds.rules)} rules")
    return spds


def restrict_rules(system: SimpleSystem, target: str) -> SimpleSystem:
    """Rules that can contribute to adding ``target``.

    Starts from the rules adding ``target`` and every AddChild rule, then adds
    AddClass rules whose added classes occur in an included guard.
    """
    if target not in system.classes:
        raise UnknownClassError(f"unknown class {target!r}")
    included = {r.name for r in system.rules if isinstance(r.op, AddChild) or target in r.adds}
    changed = True
    while changed:
        needed: set[str] = set()
        for r in system.rules:
            if r.name in included:
                needed |= r.classes
        changed = False
        for r in system.rules:
            if r.name not in included and isinstance(r.op, AddClass) and r.adds & needed:
                included.add(r.name)
                changed = True
    rules = tuple(r for r in system.rules if r.name in included)
    return SimpleSystem(system.classes, rules, system.initial, system.query_classes, system.guard_classes)


# --- saturation ---------------------------------------------------------------


@dataclass
class _Level:
    ctl: list[BddRef]
    fin: list[BddRef]

    @property
    def final_ctl(self) -> BddRef:
        return self.ctl[-1]

    @property
    def final_fin(self) -> BddRef:
        return self.fin[-1]


def _round(
    spds: SPds,
    ctl: BddRef,
    fin: BddRef,
    push: tuple[BddRef, BddRef] | None,
    anywhere: bool,
) -> tuple[BddRef, BddRef]:
    mgr = spds.manager
    new_ctl, new_fin = ctl, fin
    ctl_succ = mgr.rename(ctl, spds.to_succ)
    fin_succ = mgr.rename(fin, spds.to_succ)
    ctl_below = mgr.rename(ctl, spds.to_below)
    fin_below = mgr.rename(fin, spds.to_below)
    push_ctl = push_fin = FALSE
    if push is not None:
        push_ctl = mgr.rename(push[0], spds.to_push)
        push_fin = mgr.rename(push[1], spds.to_push)
    for rule in spds.rules:
        if rule.arity == 0:
            new_ctl = mgr.apply_or(new_ctl, mgr.rename(rule.relation, spds.pop_to_q))
        elif rule.arity == 1:
            new_ctl = mgr.apply_or(new_ctl, mgr.and_exists(rule.relation, ctl_succ, spds.succ_vars))
            new_fin = mgr.apply_or(new_fin, mgr.and_exists(rule.relation, fin_succ, spds.succ_vars))
        elif push is not None:
            inner = mgr.and_exists(rule.relation, push_ctl, spds.push_vars)
            new_ctl = mgr.apply_or(new_ctl, mgr.and_exists(inner, ctl_below, spds.below_vars))
            new_fin = mgr.apply_or(new_fin, mgr.and_exists(inner, fin_below, spds.below_vars))
            if anywhere:
                new_fin = mgr.apply_or(new_fin, mgr.and_exists(rule.relation, push_fin, spds.push_any_vars))
    return new_ctl, new_fin


def _saturate_level(spds: SPds, target: BddRef, anywhere: bool, below: _Level | None, bounded: bool) -> _Level:
    level = _Level([FALSE], [target])
    while True:
        ctl, fin = level.final_ctl, level.final_fin
        if bounded:
            push = (below.final_ctl, below.final_fin) if below is not None else None
        else:
            push = (ctl, fin)
        new_ctl, new_fin = _round(spds, ctl, fin, push, anywhere)
        if new_ctl == ctl and new_fin == fin:
            return level
        level.ctl.append(new_ctl)
        level.fin.append(new_fin)


@dataclass
class ReachSet:
    """Saturated automaton for one target class.

    Unbounded sets have one level. Bounded sets have one level per stack
    height 1..h; level i only uses stacks of at most i+1 letters.
    """

    spds: SPds
    target: str | None
    anywhere: bool
    bounded: bool
    levels: list[_Level]
    stack_cap: int | None = None

    def level_index(self, headroom: int | None) -> int | None:
        if not self.bounded:
            return 0
        if headroom is None:
            return len(self.levels) - 1
        if headroom < 1:
            return None
        return min(headroom, len(self.levels)) - 1

    def push_source(self, index: int) -> int | None:
        if not self.bounded:
            return index
        return index - 1 if index > 0 else None

    def accepts(self, control: ControlState, letter: StackLetter, headroom: int | None = None) -> bool:
        """Whether the target is reachable from ``control`` with ``letter`` on top."""
        if self.target is not None and self.target in letter.classes:
            return True
        index = self.level_index(headroom)
        if index is None:
            return False
        values = self.spds.control_assignment(control)
        values.update(self.spds.letter_assignment(letter))
        return self.spds.manager.evaluate(self.levels[index].final_fin, values)

    def is_closed(self) -> bool:
        """Whether one more saturation round leaves every level unchanged."""
        for i, level in enumerate(self.levels):
            src = self.push_source(i)
            if src is None:
                push = None
            elif self.bounded:
                push = (self.levels[src].final_ctl, self.levels[src].final_fin)
            else:
                push = (level.final_ctl, level.final_fin)
            if _round(self.spds, level.final_ctl, level.final_fin, push, self.anywhere) != (
                level.final_ctl,
                level.final_fin,
            ):
                return False
        return True


def pre_star(
    spds: SPds, target: str | None, *, anywhere: bool = False, stack_cap: int | None = None
) -> ReachSet:
    """Backward reachability towards letters carrying ``target``.

    Args:
        spds: The pushdown system
        target: Class to reach; None gives the empty set
        anywhere: Also accept the target on letters pushed above the start letter
        stack_cap: Bound on the stack height counted from the start letter
    """
    mgr = spds.manager
    if target is None:
        goal = FALSE
    else:
        if target not in spds.classes:
            raise UnknownClassError(f"target {target!r} not among the system's classes")
        goal = mgr.var(_v("y", target))
    if stack_cap is None:
        levels = [_saturate_level(spds, goal, anywhere, None, bounded=False)]
    else:
        if stack_cap < 1:
            raise TreePruneError("stack cap must be at least 1")
        levels = []
        below: _Level | None = None
        for _ in range(stack_cap):
            below = _saturate_level(spds, goal, anywhere, below, bounded=True)
            levels.append(below)
    reach = ReachSet(spds, target, anywhere, stack_cap is not None, levels, stack_cap)
    _LOGGER.debug(
        f"pre* for {target!r}: {len(levels)} level(s), "
        f"{sum(len(lv.fin) for lv in levels)} rounds, {len(mgr)} BDD nodes"
    )
    return reach


# --- membership ---------------------------------------------------------------


def _check_universe(reach: ReachSet, classes: Iterable[str], f: AssumptionFunction) -> None:
    outside = (set(classes) | (set() if f.is_root else set(f.parent_classes))) - reach.spds.universe
    if outside:
        raise UnknownClassError(f"classes outside the universe: {', '.join(sorted(outside))}")


def class_addable(
    reach: ReachSet, classes: Iterable[str], f: AssumptionFunction, headroom: int | None = None
) -> bool:
    """Whether the target class can be added to a node labeled ``classes`` under ``f``.

    ``headroom`` limits how many levels the node's subtree may use in bounded mode.
    """
    if reach.anywhere:
        raise TreePruneError("class_addable needs a reach set computed without anywhere matching")
    classes = frozenset(classes)
    _check_universe(reach, classes, f)
    return reach.accepts(ControlState(), reach.spds.letter_for(classes, f), headroom)


def class_addable_anywhere(
    reach: ReachSet, classes: Iterable[str], f: AssumptionFunction, headroom: int | None = None
) -> bool:
    """Whether the target class can appear on the node or on some descendant created below it."""
    if not reach.anywhere:
        raise TreePruneError("class_addable_anywhere needs an anywhere reach set")
    classes = frozenset(classes)
    _check_universe(reach, classes, f)
    return reach.accepts(ControlState(), reach.spds.letter_for(classes, f), headroom)


# --- witnesses ----------------------------------------------------------------


class _Extractor:
    def __init__(self, reach: ReachSet) -> None:
        self.reach = reach
        self.spds = reach.spds
        self.mgr = reach.spds.manager

    def _first_round(self, rounds: list[BddRef], values: Mapping[str, bool]) -> int | None:
        for r, f in enumerate(rounds):
            if self.mgr.evaluate(f, values):
                return r
        return None

    def _push_sets(self, index: int, r: int) -> tuple[int, BddRef, BddRef] | None:
        src = self.reach.push_source(index)
        if src is None:
            return None
        if self.reach.bounded:
            level = self.reach.levels[src]
            return src, level.final_ctl, level.final_fin
        level = self.reach.levels[index]
        return src, level.ctl[r], level.fin[r]

    def _pick(self, *parts: BddRef) -> dict[str, bool] | None:
        return self.mgr.pick_model(self.mgr.conjoin(parts), self.mgr.variables)

    def _source(self, control: ControlState, letter: StackLetter) -> dict[str, bool]:
        values = self.spds.control_assignment(control)
        values.update(self.spds.letter_assignment(letter))
        return values

    def _step(self, rule: SymbolicRule, control: ControlState, letter: StackLetter, model: dict[str, bool]) -> PdsStep:
        target = self.spds.decode_control(model, "x1", "pop1")
        if rule.arity == 1:
            replacement: tuple[StackLetter, ...] = (self.spds.decode_letter(model, "1"),)
        else:
            replacement = (self.spds.decode_letter(model, "1"), self.spds.decode_letter(model, "2"))
        return PdsStep(rule, control, letter, target, replacement)

    def fin_run(self, index: int, control: ControlState, letter: StackLetter) -> list[PdsStep]:
        level = self.reach.levels[index]
        values = self._source(control, letter)
        r = self._first_round(level.fin, values)
        if r is None:
            raise WitnessError("configuration is not in the reach set")
        if r == 0:
            return []
        src = self.mgr.cube(values)
        prev_ctl, prev_fin = level.ctl[r - 1], level.fin[r - 1]
        push = self._push_sets(index, r - 1)
        for rule in self.spds.rules:
            if rule.arity == 1:
                model = self._pick(rule.relation, src, self.mgr.rename(prev_fin, self.spds.to_succ))
                if model is not None:
                    step = self._step(rule, control, letter, model)
                    return [step, *self.fin_run(index, step.target, step.replacement[0])]
            elif rule.arity == 2 and push is not None:
                push_index, push_ctl, push_fin = push
                model = self._pick(
                    rule.relation,
                    src,
                    self.mgr.rename(push_ctl, self.spds.to_push),
                    self.mgr.rename(prev_fin, self.spds.to_below),
                )
                if model is not None:
                    step = self._step(rule, control, letter, model)
                    back = self.spds.decode_control(model, "x3", "pop3")
                    child = self.ctl_run(push_index, step.target, step.replacement[1], back)
                    return [step, *child, *self.fin_run(index, back, step.replacement[0])]
                if self.reach.anywhere:
                    model = self._pick(rule.relation, src, self.mgr.rename(push_fin, self.spds.to_push))
                    if model is not None:
                        step = self._step(rule, control, letter, model)
                        return [step, *self.fin_run(push_index, step.target, step.replacement[1])]
        raise WitnessError("no rule justifies a reach-set entry")

    def ctl_run(self, index: int, control: ControlState, letter: StackLetter, goal: ControlState) -> list[PdsStep]:
        level = self.reach.levels[index]
        values = self._source(control, letter)
        values.update(self.spds.control_assignment(goal, "x2", "pop2"))
        r = self._first_round(level.ctl, values)
        if r is None:
            raise WitnessError("pop transition is not in the reach set")
        src = self.mgr.cube(values)
        prev_ctl = level.ctl[r - 1]
        push = self._push_sets(index, r - 1)
        for rule in self.spds.rules:
            if rule.arity == 0:
                if self.mgr.evaluate(self.mgr.rename(rule.relation, self.spds.pop_to_q), values):
                    return [PdsStep(rule, control, letter, goal, ())]
            elif rule.arity == 1:
                model = self._pick(rule.relation, src, self.mgr.rename(prev_ctl, self.spds.to_succ))
                if model is not None:
                    step = self._step(rule, control, letter, model)
                    return [step, *self.ctl_run(index, step.target, step.replacement[0], goal)]
            elif push is not None:
                push_index, push_ctl, _ = push
                model = self._pick(
                    rule.relation,
                    src,
                    self.mgr.rename(push_ctl, self.spds.to_push),
                    self.mgr.rename(prev_ctl, self.spds.to_below),
                )
                if model is not None:
                    step = self._step(rule, control, letter, model)
                    back = self.spds.decode_control(model, "x3", "pop3")
                    child = self.ctl_run(push_index, step.target, step.replacement[1], back)
                    return [step, *child, *self.ctl_run(index, back, step.replacement[0], goal)]
        raise WitnessError("no rule justifies a pop transition")


def extract_pds_witness(reach: ReachSet, start: Config, headroom: int | None = None) -> list[PdsStep]:
    """A run from ``start`` that puts the target class on a letter.

    Raises:
        WitnessError: If ``start`` is not accepted
    """
    letter = start.top
    if reach.target is not None and reach.target in letter.classes:
        return []
    index = reach.level_index(headroom)
    if index is None or not reach.accepts(start.control, letter, headroom):
        raise WitnessError("start configuration is not in the reach set")
    return _Extractor(reach).fin_run(index, start.control, letter)


def check_step(spds: SPds, step: PdsStep) -> bool:
    """Whether ``step`` satisfies its rule's relation."""
    if len(step.replacement) != step.rule.arity:
        return False
    return spds.manager.evaluate(step.rule.relation, spds.step_assignment(step))


def replay_run(reach: ReachSet, start: Config, steps: Sequence[PdsStep]) -> Config:
    """Replay ``steps`` from ``start`` and check that the target is reached.

    Raises:
        WitnessError: On an illegal step or if the target is never reached
    """
    config = start
    peak = len(config.stack)
    reached = reach.target is not None and reach.target in config.top.classes
    for i, step in enumerate(steps):
        if step.control != config.control or step.letter != config.top:
            raise WitnessError(f"step {i} does not continue from the current configuration")
        if not check_step(reach.spds, step):
            raise WitnessError(f"step {i} violates rule {step.rule.name!r}")
        config = Config(step.target, config.stack[:-1] + step.replacement)
        if not config.stack:
            raise WitnessError(f"step {i} empties the stack")
        peak = max(peak, len(config.stack))
        if reach.target is not None and reach.target in config.top.classes:
            reached = reached or reach.anywhere or len(config.stack) == len(start.stack)
    if reach.stack_cap is not None and peak - len(start.stack) + 1 > reach.stack_cap:
        raise WitnessError("run exceeds the stack cap")
    if not reached:
        raise WitnessError("run does not reach the target")
    return config


# --- per-class analysis ---------------------------------------------------------


def resolve_threads(threads: int | None) -> int | None:
    """Worker count: explicit value, else the environment, else the executor default."""
    if threads is None:
        env = os.environ.get(THREADS_ENV, "").strip()
        threads = int(env) if env.isdigit() else 0
    return threads if threads > 0 else None


def build_reach_sets(
    system: SimpleSystem,
    targets: Iterable[str],
    *,
    anywhere: bool = False,
    stack_cap: int | None = None,
    threads: int | None = None,
) -> dict[str, ReachSet]:
    """Restrict, encode and saturate once per target class.

    Each class gets its own manager, so classes can be processed concurrently.
    The result is keyed in the order of ``targets``.
    """
    ordered = list(dict.fromkeys(targets))

    def one(target: str) -> ReachSet:
        restricted = restrict_rules(system, target)
        spds = build_spds(restricted, [target])
        reach = pre_star(spds, target, anywhere=anywhere, stack_cap=stack_cap)
        spds.manager.clear_cache()
        return reach

    workers = resolve_threads(threads)
    if workers == 1 or len(ordered) <= 1:
        results = [one(t) for t in ordered]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, ordered))
    return dict(zip(ordered, results, strict=True))
