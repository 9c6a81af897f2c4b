"""Redundancy checking: saturation of the initial tree and query verdicts."""

from __future__ import annotations

import logging
import random
import time
from collections import deque
from collections.abc import Iterator, Mapping, Sequence
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Literal

from .exceptions import HeightBoundError, InternalInconsistencyError, RuleApplicationError
from .guards import Guard
from .rewrite import (
    AddChild,
    AddClass,
    EnumerationCaps,
    RewriteSystem,
    apply_rule,
    enumerate_post_star,
    fixpoint_tree_k,
    matched_set,
)
from .simplify import (
    GuardClassMap,
    SimpleRule,
    SimpleSystem,
    approximate_siblings,
    lift_guards_to_root,
    positivize,
    strip_removals,
    to_simple,
)
from .spds import (
    Config,
    ControlState,
    ReachSet,
    build_reach_sets,
    class_addable,
    class_addable_anywhere,
    extract_pds_witness,
)
from .trees import NodePath, Tree, assumption_for, is_matched, match_guard
from .witness import WitnessStep, WitnessTrace, pds_to_tree_witness

_LOGGER = logging.getLogger(__name__)

Status = Literal["redundant", "reachable"]


@dataclass(frozen=True)
class AnalysisOptions:
    """Settings for one analysis run.

    Attributes:
        k: Height bound; None analyzes all reachable trees
        lift_queries: Decide queries through ``(down* g)`` at the root
        threads: Worker count for per-class work; None or 0 picks a default
        oracle: Cross-check verdicts against explicit enumeration
        caps: Limits for the enumeration oracle
        timings: Record per-phase wall-clock seconds
    """

    k: int | None = None
    lift_queries: bool = False
    threads: int | None = None
    oracle: bool = False
    caps: EnumerationCaps = field(default_factory=EnumerationCaps)
    timings: bool = False


@dataclass(frozen=True)
class Verdict:
    query: str
    guard: Guard
    status: Status
    witness: WitnessTrace | None = None
    warnings: tuple[str, ...] = ()

    @property
    def redundant(self) -> bool:
        return self.status == "redundant"


@dataclass(frozen=True)
class Addition:
    """How classes came to a node: a direct rule firing or a class-adding run."""

    node: NodePath
    classes: frozenset[str]
    via: Literal["rule", "oracle"]
    rule: str | None
    trace_length: int


@dataclass
class SaturatedTree:
    """Initial tree with labels closed under rule firing and class-adding.

    ``trace`` ends in a tree that contains every saturated label; its nodes
    outside the initial domain come from class-adding runs.
    """

    tree: Tree
    trace: WitnessTrace
    additions: list[Addition] = field(default_factory=list)
    oracle_calls: int = 0

    def provenance(self, node: NodePath, c: str) -> Addition | None:
        for a in self.additions:
            if a.node == node and c in a.classes:
                return a
        return None


@dataclass
class Analysis:
    prepared: RewriteSystem
    simple: SimpleSystem
    guard_classes: GuardClassMap
    saturated: SaturatedTree
    verdicts: list[Verdict]
    warnings: list[str]
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def redundant(self) -> list[Verdict]:
        return [v for v in self.verdicts if v.redundant]


class _Clock:
    def __init__(self, enabled: bool) -> None:
        self.enabled = enabled
        self.phases: dict[str, float] = {}

    @contextmanager
    def phase(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            if self.enabled:
                self.phases[name] = self.phases.get(name, 0.0) + time.perf_counter() - start


# --- preparation --------------------------------------------------------------


def prepare_system(system: RewriteSystem, lift_queries: bool = False) -> tuple[RewriteSystem, list[str]]:
    """Positive, removal-free, sibling-free over-approximation of ``system``."""
    approximated, notes = approximate_siblings(system)
    for note in notes:
        _LOGGER.warning(note)
    positive, more = positivize(approximated)
    prepared = strip_removals(positive)
    if lift_queries:
        prepared = replace(prepared, queries=tuple(lift_guards_to_root(prepared.queries)))
    return prepared, notes + more


# --- saturation ---------------------------------------------------------------


def _adders(system: SimpleSystem) -> dict[str, list[SimpleRule]]:
    table: dict[str, list[SimpleRule]] = {}
    for rule in system.rules:
        if isinstance(rule.op, AddClass):
            for c in rule.adds:
                table.setdefault(c, []).append(rule)
    return table


def _headroom(k: int | None, node: NodePath) -> int | None:
    return None if k is None else k - len(node) + 1


def saturate(
    system: SimpleSystem,
    reach: Mapping[str, ReachSet],
    *,
    k: int | None = None,
    rng: random.Random | None = None,
) -> SaturatedTree:
    """Add every class that can reach a node of the initial tree.

    A class is added when an AddClass rule fires directly at the node, or when
    the class-adding check for it succeeds on the node's current label and its
    parent's. Classes without a reach set are only added directly.

    Raises:
        HeightBoundError: If ``k`` is set and the initial tree is taller
    """
    tree = system.initial
    if k is not None and tree.height > k:
        raise HeightBoundError(f"initial tree has height {tree.height}, above bound {k}")
    adders = _adders(system)
    targets = [c for c in system.classes if c in adders or c in reach]
    sat = SaturatedTree(tree, WitnessTrace(tree))

    pairs = [(v, c) for v in tree.nodes for c in targets]
    if rng is not None:
        rng.shuffle(pairs)
    work = deque(pairs)
    queued = set(pairs)

    while work:
        v, c = work.popleft()
        queued.discard((v, c))
        label = sat.tree.label(v)
        if c in label:
            continue
        added = _fire_direct(sat, v, adders.get(c, ()))
        if added is None and c in reach:
            added = _fire_oracle(sat, v, c, reach[c], k)
        if added is None:
            continue
        _LOGGER.debug(f"Saturation: {sorted(added)} at {list(v)}")
        around = [v, *sat.tree.children(v)]
        parent = Tree.parent(v)
        if parent is not None:
            around.append(parent)
        for u in around:
            for d in targets:
                if d not in sat.tree.label(u) and (u, d) not in queued:
                    queued.add((u, d))
                    work.append((u, d))
    _LOGGER.debug(
        f"Saturated {len(tree)} nodes with {len(sat.additions)} additions and {sat.oracle_calls} class-adding checks"
    )
    return sat


def _fire_direct(sat: SaturatedTree, v: NodePath, rules: Sequence[SimpleRule]) -> frozenset[str] | None:
    for rule in rules:
        if not match_guard(sat.tree, v, rule.guard):
            continue
        real = apply_rule(sat.trace.final, v, rule.to_rule())
        sat.trace = sat.trace.extended([WitnessStep(v, rule.name, real, rule.synthetic)])
        sat.tree = sat.tree.with_classes(v, rule.adds)
        sat.additions.append(Addition(v, rule.adds, "rule", rule.name, len(sat.trace)))
        return rule.adds
    return None


def _fire_oracle(sat: SaturatedTree, v: NodePath, c: str, reach: ReachSet, k: int | None) -> frozenset[str] | None:
    f = assumption_for(sat.tree, v)
    label = sat.tree.label(v)
    headroom = _headroom(k, v)
    sat.oracle_calls += 1
    if not class_addable(reach, label, f, headroom):
        return None
    start = Config(ControlState(), (reach.spds.letter_for(label, f),))
    run = extract_pds_witness(reach, start, headroom)
    sat.trace = pds_to_tree_witness(v, run, sat.trace)
    added = frozenset({c})
    sat.tree = sat.tree.with_classes(v, added)
    sat.additions.append(Addition(v, added, "oracle", None, len(sat.trace)))
    return added


# --- verdicts -----------------------------------------------------------------


def validate_witness(system: RewriteSystem, trace: WitnessTrace, guard: Guard) -> bool:
    """Replay the non-synthetic steps of ``trace`` on ``system``.

    True when every step applies and the final tree matches ``guard`` somewhere.
    """
    tree = system.initial
    if trace.initial != tree:
        _LOGGER.warning("Witness starts from a different tree")
        return False
    for i, step in enumerate(trace.original_steps()):
        try:
            tree = apply_rule(tree, step.node, system.rule(step.rule))
        except KeyError:
            _LOGGER.warning(f"Witness step {i} names unknown rule {step.rule!r}")
            return False
        except RuleApplicationError as e:
            _LOGGER.warning(f"Witness step {i} does not apply: {e}")
            return False
    if not is_matched(tree, guard):
        _LOGGER.warning("Witness final tree does not match the query")
        return False
    return True


def _find_in_labels(sat: SaturatedTree, c: str) -> WitnessTrace | None:
    for v, label in sat.tree.items():
        if c not in label:
            continue
        if c in sat.trace.initial.label(v):
            return sat.trace.prefix(0)
        added = sat.provenance(v, c)
        if added is not None:
            return sat.trace.prefix(added.trace_length)
    return None


def _find_anywhere(sat: SaturatedTree, reach: ReachSet, k: int | None) -> WitnessTrace | None:
    for v, label in sat.tree.items():
        f = assumption_for(sat.tree, v)
        headroom = _headroom(k, v)
        if class_addable_anywhere(reach, label, f, headroom):
            start = Config(ControlState(), (reach.spds.letter_for(label, f),))
            run = extract_pds_witness(reach, start, headroom)
            return pds_to_tree_witness(v, run, sat.trace)
    return None


def _cross_check(prepared: RewriteSystem, verdicts: list[Verdict], options: AnalysisOptions) -> None:
    guards = [g for _, g in prepared.queries]
    reachable = {v.query for v in verdicts if not v.redundant}
    names = [name for name, _ in prepared.queries]
    if options.k is not None:
        found = matched_set(fixpoint_tree_k(prepared, options.k), guards)
        expected = {name for name, g in zip(names, guards, strict=True) if g in found}
        if expected != reachable:
            raise InternalInconsistencyError(
                f"bounded fixpoint disagrees: fixpoint {sorted(expected)}, analysis {sorted(reachable)}"
            )
        _LOGGER.info(f"Bounded fixpoint agrees on {len(names)} queries")
        return
    post = enumerate_post_star(prepared, options.caps)
    found = post.matched(guards)
    seen = {name for name, g in zip(names, guards, strict=True) if g in found}
    missed = seen - reachable
    if missed:
        raise InternalInconsistencyError(f"enumeration matched queries reported redundant: {sorted(missed)}")
    if post.exact and seen != reachable:
        raise InternalInconsistencyError(
            f"exhaustive enumeration disagrees: enumeration {sorted(seen)}, analysis {sorted(reachable)}"
        )
    _LOGGER.info(f"Enumeration ({len(post.trees)} trees, exact={post.exact}) agrees on {len(names)} queries")


def analyze_system(system: RewriteSystem, options: AnalysisOptions | None = None) -> Analysis:
    """Run the whole pipeline on ``system``.

    Raises:
        HeightBoundError: In bounded mode, if the initial tree is taller than ``k``
        InternalInconsistencyError: If a witness fails replay or the oracle disagrees
    """
    options = options or AnalysisOptions()
    clock = _Clock(options.timings)
    if options.k is not None and system.initial.height > options.k:
        raise HeightBoundError(f"initial tree has height {system.initial.height}, above bound {options.k}")

    with clock.phase("simplify"):
        prepared, warnings = prepare_system(system, options.lift_queries)
        simple, gmap = to_simple(prepared)
    stack_cap = None if options.k is None else options.k + 1
    # Without AddChild rules the class-adding check adds nothing that direct firing misses.
    has_children = any(isinstance(r.op, AddChild) for r in simple.rules)

    with clock.phase("spds"):
        targets = [c for c in simple.classes if c in _adders(simple)] if has_children else []
        reach = build_reach_sets(simple, targets, stack_cap=stack_cap, threads=options.threads)

    with clock.phase("saturate"):
        sat = saturate(simple, reach, k=options.k)
        pending = [
            c
            for c in dict.fromkeys(simple.query_classes.values())
            if c is not None and _find_in_labels(sat, c) is None
        ]
        anywhere: dict[str, ReachSet] = {}
        if has_children and not options.lift_queries:
            anywhere = build_reach_sets(
                simple, pending, anywhere=True, stack_cap=stack_cap, threads=options.threads
            )

        verdicts: list[Verdict] = []
        for name, guard in prepared.queries:
            c = simple.query_classes[name]
            notes = tuple(w for w in warnings if w.startswith(f"query {name}:"))
            if c is None:
                trace: WitnessTrace | None = WitnessTrace(simple.initial)
            else:
                trace = _find_in_labels(sat, c)
                if trace is None and c in anywhere:
                    trace = _find_anywhere(sat, anywhere[c], options.k)
            if trace is None:
                verdicts.append(Verdict(name, guard, "redundant", None, notes))
                continue
            if not validate_witness(prepared, trace, guard):
                raise InternalInconsistencyError(f"witness for query {name!r} fails replay")
            verdicts.append(Verdict(name, guard, "reachable", trace, notes))

    if options.oracle:
        _cross_check(prepared, verdicts, options)
    _LOGGER.debug(f"{sum(v.redundant for v in verdicts)} of {len(verdicts)} queries redundant")
    return Analysis(prepared, simple, gmap, sat, verdicts, warnings, clock.phases)


def check_redundancy(system: RewriteSystem, options: AnalysisOptions | None = None) -> list[Verdict]:
    """Verdict per query of ``system``."""
    return analyze_system(system, options).verdicts
