import dataclasses
import random
from pathlib import Path

import pytest

from treeprune.exceptions import HeightBoundError
from treeprune.guards import Atom, parse_guard
from treeprune.rewrite import AddClass, EnumerationCaps, RewriteSystem
from treeprune.saturation import AnalysisOptions, analyze_system, check_redundancy, prepare_system, saturate
from treeprune.simplify import to_simple
from treeprune.spds import build_reach_sets
from treeprune.system_format import load_system, parse_system
from treeprune.witness import WitnessTrace

from .conftest import random_system

ORACLE_CAPS = EnumerationCaps(max_nodes=5, max_trees=200, max_steps=2000)


def statuses(system: RewriteSystem, options: AnalysisOptions | None = None) -> dict[str, str]:
    return {v.query: v.status for v in check_redundancy(system, options)}


class TestFixtures:
    def test_tennis_success_is_reachable(self, fixtures_dir: Path) -> None:
        tennis = load_system(fixtures_dir / "tennis.trs")
        analysis = analyze_system(tennis, AnalysisOptions(threads=1))
        [verdict] = analysis.verdicts
        assert verdict.query == "q_success"
        assert verdict.status == "reachable"
        assert verdict.witness is not None
        assert {s.rule for s in verdict.witness.original_steps()} == {"add_team", "add_p1", "add_p2", "succ"}
        assert analysis.redundant == []

    @pytest.mark.parametrize("k, expected", [(0, "redundant"), (1, "redundant"), (2, "reachable"), (5, "reachable")])
    def test_tennis_height_bound(self, fixtures_dir: Path, k: int, expected: str) -> None:
        tennis = load_system(fixtures_dir / "tennis.trs")
        assert statuses(tennis, AnalysisOptions(k=k, threads=1)) == {"q_success": expected}

    @pytest.mark.parametrize(
        "name, expected",
        [
            ("example.trs", {"q_warn": "reachable"}),
            ("example-up.trs", {"q_warn": "redundant"}),
            ("empty-rules.trs", {"q_done": "reachable", "q_root_done": "reachable", "q_missing": "redundant"}),
        ],
    )
    def test_verdicts(self, fixtures_dir: Path, name: str, expected: dict[str, str]) -> None:
        assert statuses(load_system(fixtures_dir / name), AnalysisOptions(threads=1)) == expected

    @pytest.mark.parametrize("name", ["tennis.trs", "example.trs", "example-up.trs", "empty-rules.trs"])
    def test_lifted_queries_agree(self, fixtures_dir: Path, name: str) -> None:
        system = load_system(fixtures_dir / name)
        default = statuses(system, AnalysisOptions(threads=1))
        assert statuses(system, AnalysisOptions(lift_queries=True, threads=1)) == default

    @pytest.mark.parametrize("name", ["tennis.trs", "example.trs", "example-up.trs", "empty-rules.trs"])
    def test_oracle_agrees(self, fixtures_dir: Path, name: str) -> None:
        system = load_system(fixtures_dir / name)
        analyze_system(system, AnalysisOptions(oracle=True, threads=1))
        analyze_system(system, AnalysisOptions(k=4, oracle=True, threads=1))

    def test_witness_for_initially_matched_query_is_empty(self, fixtures_dir: Path) -> None:
        analysis = analyze_system(load_system(fixtures_dir / "empty-rules.trs"), AnalysisOptions(threads=1))
        done = next(v for v in analysis.verdicts if v.query == "q_done")
        assert done.witness is not None
        assert done.witness.original_steps() == []


class TestOptions:
    def test_height_bound_below_initial_tree(self, fixtures_dir: Path) -> None:
        with pytest.raises(HeightBoundError, match="above bound 1"):
            analyze_system(load_system(fixtures_dir / "example.trs"), AnalysisOptions(k=1))

    def test_timings_are_opt_in(self, fixtures_dir: Path) -> None:
        tennis = load_system(fixtures_dir / "tennis.trs")
        assert analyze_system(tennis, AnalysisOptions(threads=1)).timings == {}
        timed = analyze_system(tennis, AnalysisOptions(threads=1, timings=True)).timings
        assert set(timed) == {"simplify", "spds", "saturate"}
        assert all(t >= 0 for t in timed.values())

    def test_default_options(self, fixtures_dir: Path) -> None:
        assert statuses(load_system(fixtures_dir / "tennis.trs")) == {"q_success": "reachable"}


class TestApproximation:
    def test_negated_guard_over_approximates(self) -> None:
        text = "classes r a b\ninit (r)\nrule x (not a) => addclass {b}\nquery q b\n"
        analysis = analyze_system(parse_system(text), AnalysisOptions(threads=1))
        assert [v.status for v in analysis.verdicts] == ["reachable"]
        assert analysis.warnings == ["rule x: (not a) approximated by true"]

    def test_removals_are_ignored(self) -> None:
        text = "classes r a\ninit (r)\nrule add r => addclass {a}\nrule del a => removeclass {a}\nquery q a\n"
        analysis = analyze_system(parse_system(text), AnalysisOptions(threads=1))
        assert [r.name for r in analysis.prepared.rules] == ["add"]
        assert analysis.verdicts[0].status == "reachable"

    def test_query_notes_travel_with_verdicts(self) -> None:
        text = "classes r a\ninit (r)\nquery q (not (down a))\n"
        [verdict] = check_redundancy(parse_system(text), AnalysisOptions(threads=1))
        assert verdict.status == "reachable"
        assert verdict.warnings == ("query q: (not (down a)) approximated by true",)

    def test_up_guard_never_matches_the_root(self) -> None:
        text = "classes r a b\ninit (r)\nrule x (up true) => addclass {a}\nquery q a\n"
        assert statuses(parse_system(text), AnalysisOptions(threads=1)) == {"q": "redundant"}

    def test_up_guard_below_the_root(self) -> None:
        text = "classes r a b\ninit (r)\nrule c r => addchild {b}\nrule x (up r) => addclass {a}\nquery q (and b a)\n"
        assert statuses(parse_system(text), AnalysisOptions(threads=1)) == {"q": "reachable"}


def test_prepare_system_lifts_queries(fixtures_dir: Path) -> None:
    prepared, _ = prepare_system(load_system(fixtures_dir / "example.trs"), lift_queries=True)
    assert prepared.queries == (("q_warn", parse_guard("(down* .warn)")),)


def test_validated_witness_starts_at_the_initial_tree(fixtures_dir: Path) -> None:
    system = load_system(fixtures_dir / "example.trs")
    [verdict] = check_redundancy(system, AnalysisOptions(threads=1))
    assert isinstance(verdict.witness, WitnessTrace)
    assert verdict.witness.initial == system.initial
    assert [s.rule for s in verdict.witness.original_steps()] == ["limit"]


class TestAgainstEnumeration:
    @pytest.mark.parametrize("seed", range(25))
    def test_unbounded(self, seed: int) -> None:
        system = random_system(random.Random(seed))
        analyze_system(system, AnalysisOptions(oracle=True, caps=ORACLE_CAPS, threads=1))

    @pytest.mark.parametrize("seed", range(25))
    def test_bounded(self, seed: int) -> None:
        system = random_system(random.Random(1000 + seed))
        k = system.initial.height + 1
        analyze_system(system, AnalysisOptions(k=k, oracle=True, caps=ORACLE_CAPS, threads=1))

    @pytest.mark.parametrize("seed", range(10))
    def test_lifting_does_not_change_verdicts(self, seed: int) -> None:
        system = random_system(random.Random(2000 + seed))
        default = statuses(system, AnalysisOptions(threads=1))
        assert statuses(system, AnalysisOptions(lift_queries=True, threads=1)) == default

    @pytest.mark.parametrize("seed", range(200))
    def test_bounded_sweep_single_node(self, seed: int) -> None:
        rng = random.Random(3000 + seed)
        classes = [f"c{i}" for i in range(rng.randint(1, 6))]
        system = random_system(rng, classes, rules=rng.randint(1, 10), max_nodes=1)
        system = dataclasses.replace(system, queries=tuple((f"has_{c}", Atom(c)) for c in classes))
        for k in range(5):
            analyze_system(system, AnalysisOptions(k=k, oracle=True, threads=1))

    @pytest.mark.parametrize("seed", range(100))
    def test_saturation_order_does_not_matter(self, seed: int) -> None:
        rng = random.Random(4000 + seed)
        system = random_system(rng)
        k = None if seed % 2 else system.initial.height + 1
        prepared, _ = prepare_system(system)
        simple, _ = to_simple(prepared)
        added = [c for c in simple.classes if any(c in r.adds for r in simple.rules if isinstance(r.op, AddClass))]
        reach = build_reach_sets(simple, added, stack_cap=None if k is None else k + 1, threads=1)
        expected = dict(saturate(simple, reach, k=k).tree.items())
        for _ in range(10):
            assert dict(saturate(simple, reach, k=k, rng=rng).tree.items()) == expected
