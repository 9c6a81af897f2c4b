import random
from pathlib import Path

import pytest

from treeprune.exceptions import NotPositiveError, NotSimpleError
from treeprune.guards import TRUE, And, Atom, Direction, Guard, Modal, Not, Or, parse_guard
from treeprune.rewrite import (
    AddChild,
    AddClass,
    EnumerationCaps,
    RemoveClass,
    enumerate_post_star,
    fixpoint_tree_k,
    matched_set,
)
from treeprune.saturation import prepare_system
from treeprune.simplify import (
    SimpleRule,
    approximate_siblings,
    fold_true,
    lift_guards_to_root,
    positivize,
    positivize_guard,
    strip_removals,
    synthetic_class,
    to_simple,
)
from treeprune.system_format import load_system, parse_system

from .conftest import CLASSES, random_system

TAGS = ("div", "span", "a")


def test_sibling_approximation() -> None:
    system = parse_system("classes a b\ninit (a)\nrule s (left a) => after {b}\nquery q (right b)\n")
    approximated, notes = approximate_siblings(system)
    rule = approximated.rule("s")
    assert rule.guard == Modal(Direction.DOWN, Modal(Direction.UP, Modal(Direction.DOWN, Atom("a"))))
    assert rule.op == AddChild(frozenset({"b"}))
    assert approximated.queries == (("q", Modal(Direction.UP, Modal(Direction.DOWN, Atom("b")))),)
    assert len(notes) == 3


class TestPositivize:
    @pytest.mark.parametrize(
        "text, expected, n_notes",
        [
            ("(and x (down y))", And(Atom("x"), Modal(Direction.DOWN, Atom("y"))), 0),
            ("(not div)", Or(Atom("a"), Atom("span")), 0),
            ("(not foo)", TRUE, 1),
            ("(not (and x y))", Or(TRUE, TRUE), 2),
            ("(not (or x (not y)))", And(TRUE, Atom("y")), 1),
            ("(not (down x))", TRUE, 1),
            ("(not true)", TRUE, 1),
            ("(down (not span))", Modal(Direction.DOWN, Or(Atom("a"), Atom("div"))), 0),
        ],
    )
    def test_guard(self, text: str, expected: Guard, n_notes: int) -> None:
        result, notes = positivize_guard(parse_guard(text), TAGS)
        assert result == expected
        assert len(notes) == n_notes

    def test_lone_tag_negation_is_true(self) -> None:
        result, notes = positivize_guard(parse_guard("(not div)"), ["div"], "rule r")
        assert result == TRUE
        assert notes == ["rule r: (not div) approximated by true"]

    def test_system_notes_name_their_source(self) -> None:
        text = "classes x y div span\ntags div span\ninit (x)\nrule r (not x) => addclass {y}\nquery q (not div)\n"
        positive, notes = positivize(parse_system(text))
        assert positive.rule("r").guard == TRUE
        assert positive.queries == (("q", Atom("span")),)
        assert notes == ["rule r: (not x) approximated by true"]


def test_strip_removals(fixtures_dir: Path) -> None:
    system = load_system(fixtures_dir / "example.trs")
    assert [r.name for r in strip_removals(system).rules] == ["limit", "box", "box_in", "box_del"]


def test_lift_guards_to_root() -> None:
    assert lift_guards_to_root([("q", Atom("a"))]) == [("q", Modal(Direction.DOWN_STAR, Atom("a")))]


@pytest.mark.parametrize(
    "text, expected",
    [
        ("(and true x)", Atom("x")),
        ("(and x true)", Atom("x")),
        ("(or x true)", TRUE),
        ("(down* true)", TRUE),
        ("(up true)", Modal(Direction.UP, TRUE)),
        ("(down (and true true))", Modal(Direction.DOWN, TRUE)),
        ("(not (and x true))", Not(Atom("x"))),
    ],
)
def test_fold_true(text: str, expected: Guard) -> None:
    assert fold_true(parse_guard(text)) == expected


class TestToSimple:
    def test_tennis(self, fixtures_dir: Path) -> None:
        simple, gmap = to_simple(load_system(fixtures_dir / "tennis.trs"))
        assert [r.name for r in simple.rules] == [
            "~modal.1",
            "~modal.2",
            "~and.3",
            "~closure.4",
            "~closure.5",
            "add_team",
            "add_p1",
            "add_p2",
            "succ",
        ]
        assert [r.synthetic for r in simple.rules] == [True] * 5 + [False] * 4
        assert len(simple.classes) == 9
        assert simple.classes[:5] == ("root", "team", "P1", "P2", "success")

        both = synthetic_class(parse_guard("(and (down P1) (down P2))"))
        reached = synthetic_class(parse_guard("(down* success)"))
        assert simple.rule("succ").classes == frozenset({both})
        assert simple.rule("~modal.1").direction is Direction.DOWN
        assert simple.rule("~modal.1").classes == frozenset({"P1"})
        assert simple.rule("~closure.5").direction is Direction.DOWN
        assert simple.rule("~closure.5").classes == frozenset({reached})
        assert simple.query_classes == {"q_success": reached}
        assert gmap.guard_of(reached) == parse_guard("(down* success)")
        assert gmap.guard_of("root") == Atom("root")

    def test_tennis_as_rewrite_system(self, fixtures_dir: Path) -> None:
        simple, _ = to_simple(load_system(fixtures_dir / "tennis.trs"))
        system = simple.to_rewrite_system()
        assert len(system.rules) == 9
        assert system.queries == (("q_success", Atom(synthetic_class(parse_guard("(down* success)")))),)

    @pytest.mark.parametrize(
        "name, kept",
        [
            ("example.trs", ["limit", "box", "box_in", "box_del"]),
            ("example-up.trs", ["box", "box_in", "box_del"]),
        ],
    )
    def test_pages_keep_only_additions(self, fixtures_dir: Path, name: str, kept: list[str]) -> None:
        prepared, notes = prepare_system(load_system(fixtures_dir / name))
        simple, _ = to_simple(prepared)
        assert notes == []
        assert [r.name for r in simple.rules] == kept
        assert not any(r.synthetic for r in simple.rules)
        assert simple.query_classes == {"q_warn": ".warn"}

    def test_disjunction_gets_two_rules(self) -> None:
        simple, _ = to_simple(parse_system("classes a b c\ninit (a)\nrule r (or a b) => addclass {c}\n"))
        either = synthetic_class(parse_guard("(or a b)"))
        assert [(r.name, r.classes) for r in simple.rules] == [
            ("~or.1", frozenset({"a"})),
            ("~or.2", frozenset({"b"})),
            ("r", frozenset({either})),
        ]

    def test_true_guards_and_queries(self) -> None:
        simple, _ = to_simple(parse_system("classes a\ninit (a)\nrule r true => addchild {a}\nquery q true\n"))
        assert simple.rule("r").classes == frozenset()
        assert simple.query_classes == {"q": None}

    @pytest.mark.parametrize(
        "text, error",
        [
            ("classes a b\ninit (a)\nrule r (not a) => addclass {b}\n", NotPositiveError),
            ("classes a\ninit (a)\nrule r a => removeclass {a}\n", NotPositiveError),
            ("classes a b\ninit (a)\nrule r a => before {b}\n", NotSimpleError),
            ("classes a b\ninit (a)\nrule r (left a) => addclass {b}\n", NotSimpleError),
            ("classes a\ninit (a)\nquery q (not a)\n", NotPositiveError),
        ],
    )
    def test_rejects_unprepared_systems(self, text: str, error: type[Exception]) -> None:
        with pytest.raises(error):
            to_simple(parse_system(text))


class TestSimpleRule:
    def test_guard(self) -> None:
        rule = SimpleRule("r", Direction.UP, frozenset({"b", "a"}), AddClass(frozenset({"c"})))
        assert rule.guard == Modal(Direction.UP, And(Atom("a"), Atom("b")))
        assert rule.adds == frozenset({"c"})

    @pytest.mark.parametrize(
        "direction, op, fragment",
        [
            (Direction.UP_STAR, AddClass(frozenset({"c"})), "direction must be up or down"),
            (Direction.DOWN, AddChild(frozenset({"c"})), "modal guards require addclass"),
            (None, RemoveClass(frozenset({"c"})), "only addchild and addclass"),
        ],
    )
    def test_invalid(self, direction: Direction | None, op: object, fragment: str) -> None:
        with pytest.raises(NotSimpleError, match=fragment):
            SimpleRule("r", direction, frozenset({"a"}), op)  # type: ignore[arg-type]


class TestRemovalElimination:
    CAPS = EnumerationCaps(max_nodes=6, max_trees=100, max_steps=800)

    @pytest.mark.parametrize("seed", range(1000))
    def test_removals_do_not_change_matched_queries(self, seed: int) -> None:
        rng = random.Random(7000 + seed)
        system = random_system(rng, CLASSES[:2], rules=4, removals=True)
        stripped = strip_removals(system)
        k = rng.randint(system.initial.height, 2)
        guards = [g for _, g in system.queries]
        with_removals = enumerate_post_star(system, self.CAPS, max_height=k)
        without = enumerate_post_star(stripped, self.CAPS, max_height=k)
        # every tree reached with removals is dominated by the removal-free fixpoint
        dominated = matched_set(fixpoint_tree_k(stripped, k), guards)
        assert all(g in dominated for g in with_removals.matched(guards))
        if with_removals.exact and without.exact:
            assert with_removals.matched(guards) == without.matched(guards)


class TestSimpleEquivalence:
    @pytest.mark.parametrize("seed", range(100))
    def test_guard_holds_where_its_class_is_reachable(self, seed: int) -> None:
        rng = random.Random(8000 + seed)
        system = random_system(rng, CLASSES[:3], queries=4)
        simple, _ = to_simple(system)
        rewritten = simple.to_rewrite_system()
        for k in range(system.initial.height, 4):
            original = fixpoint_tree_k(system, k)
            extended = fixpoint_tree_k(rewritten, k).classes()
            for name, g in system.queries:
                c = simple.query_classes[name]
                reachable = c is None or c in extended
                assert bool(matched_set(original, [g])) == reachable, (name, k)
