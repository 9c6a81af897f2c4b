"""Tests for trees, guard matching and embeddings."""

import random

import pytest

from treeprune.exceptions import GuardSyntaxError, NodeNotFoundError, NotSimpleError, TreePruneInputError
from treeprune.guards import is_positive, parse_guard
from treeprune.trees import (
    ROOT,
    AssumptionFunction,
    Tree,
    assumption_for,
    embedding_key,
    find_embedding,
    format_tree,
    is_embedded,
    match_guard,
    match_guard_assume,
    matching_nodes,
    parse_label,
    parse_tree,
)
from tests.generators import CLASSES, assert_embedding, grow_tree, random_guard, random_tree

# Two teams; the first is complete and marked with success.
TOURNAMENT = "({root} ({team} ({P1}) ({P2}) ({success})) ({team} ({P1})))"


@pytest.fixture
def tournament() -> Tree:
    return parse_tree(TOURNAMENT)


class TestTree:
    def test_parse_and_format(self, tournament: Tree) -> None:
        assert len(tournament) == 7
        assert tournament.height == 2
        assert tournament.label((0, 2)) == frozenset({"success"})
        assert tournament.children((0,)) == ((0, 0), (0, 1), (0, 2))
        assert format_tree(tournament) == TOURNAMENT
        assert parse_tree(format_tree(tournament)) == tournament

    def test_bare_class_labels(self) -> None:
        t = parse_tree("(root (team))")
        assert t.label(ROOT) == frozenset({"root"})
        assert t.label((0,)) == frozenset({"team"})

    def test_domain_must_be_prefix_closed(self) -> None:
        with pytest.raises(TreePruneInputError, match="prefix-closed"):
            Tree({(): {"a"}, (0, 0): {"b"}})
        with pytest.raises(TreePruneInputError, match="root"):
            Tree({(0,): {"a"}})

    def test_persistent_updates(self, tournament: Tree) -> None:
        grown, child = tournament.with_child((1,), {"P2"})
        assert child == (1, 1)
        assert len(grown) == 8 and len(tournament) == 7
        marked = tournament.with_classes(ROOT, {"done"})
        assert "done" in marked.label(ROOT) and "done" not in tournament.label(ROOT)
        assert marked.without_classes(ROOT, {"done"}) == tournament
        pruned = tournament.without_subtree((0,))
        assert len(pruned) == 3
        with pytest.raises(TreePruneInputError):
            tournament.without_subtree(ROOT)

    def test_fresh_child_reuses_gaps(self) -> None:
        t = Tree({(): set(), (1,): set()})
        assert t.fresh_child(ROOT) == (0,)

    def test_missing_node(self, tournament: Tree) -> None:
        with pytest.raises(NodeNotFoundError):
            tournament.label((5,))
        with pytest.raises(NodeNotFoundError):
            match_guard(tournament, (5,), parse_guard("true"))

    @pytest.mark.parametrize("text", ["", "({a}", "({a}) ({b})", "{a}"])
    def test_malformed_tree_text(self, text: str) -> None:
        with pytest.raises(GuardSyntaxError):
            parse_tree(text)

    def test_parse_label(self) -> None:
        assert parse_label("{a,b}") == frozenset({"a", "b"})
        assert parse_label("{a b}") == frozenset({"a", "b"})
        assert parse_label("x") == frozenset({"x"})


class TestMatching:
    @pytest.mark.parametrize(
        "node,guard,expected",
        [
            ((0, 2), "(up team)", True),
            ((0, 2), "(up* root)", True),
            ((0,), "(and (down P1) (down P2))", True),
            ((1,), "(and (down P1) (down P2))", False),
            (ROOT, "(down* success)", True),
            ((1,), "(down* success)", False),
            (ROOT, "(down+ root)", False),
            (ROOT, "(down* root)", True),
            ((0, 0), "(up+ root)", True),
            ((0, 0), "(not (up root))", True),
            (ROOT, "(up true)", False),
            ((1, 0), "(up true)", True),
        ],
    )
    def test_match_guard(self, tournament: Tree, node: tuple[int, ...], guard: str, expected: bool) -> None:
        assert match_guard(tournament, node, parse_guard(guard)) is expected

    def test_matching_nodes(self, tournament: Tree) -> None:
        assert matching_nodes(tournament, parse_guard("P1")) == frozenset({(0, 0), (1, 0)})
        assert matching_nodes(tournament, parse_guard("(up* (down success))")) == frozenset(
            {(0,), (0, 0), (0, 1), (0, 2)}
        )

    def test_sibling_modalities_have_no_tree_semantics(self, tournament: Tree) -> None:
        with pytest.raises(NotSimpleError):
            match_guard(tournament, ROOT, parse_guard("(left team)"))

    def test_match_guard_assume_reads_parent_from_assumption(self) -> None:
        local = parse_tree("({success})")
        up_team = parse_guard("(up team)")
        assert match_guard_assume(local, ROOT, up_team, AssumptionFunction.below({"team"}))
        assert not match_guard_assume(local, ROOT, up_team, AssumptionFunction.below({"P1"}))
        assert not match_guard_assume(local, ROOT, up_team, AssumptionFunction.at_root())
        assert match_guard_assume(local, ROOT, parse_guard("success"), AssumptionFunction.at_root())
        with pytest.raises(NotSimpleError):
            match_guard_assume(local, ROOT, parse_guard("(up* team)"), AssumptionFunction.at_root())

    def test_assumption_for(self, tournament: Tree) -> None:
        assert assumption_for(tournament, ROOT) == AssumptionFunction.at_root()
        assert assumption_for(tournament, (0, 1)) == AssumptionFunction.below({"team"})


class TestEmbedding:
    def test_embedding_maps_roots_and_grows_labels(self, tournament: Tree) -> None:
        small = parse_tree("({root} ({team} ({P1})))")
        mapping = find_embedding(small, tournament)
        assert mapping is not None
        assert mapping[ROOT] == ROOT
        for u, w in mapping.items():
            assert small.label(u) <= tournament.label(w)
        assert not is_embedded(tournament, small)

    def test_embedding_need_not_be_injective(self) -> None:
        two = parse_tree("({r} ({a}) ({a}))")
        one = parse_tree("({r} ({a}))")
        assert is_embedded(two, one) and is_embedded(one, two)
        assert embedding_key(two) == embedding_key(one)

    def test_embedding_key_separates_non_equivalent_trees(self) -> None:
        assert embedding_key(parse_tree("({r} ({a}))")) != embedding_key(parse_tree("({r} ({a,b}))"))
        # a child that embeds into a sibling adds nothing
        assert embedding_key(parse_tree("({r} ({a}) ({a,b}))")) == embedding_key(parse_tree("({r} ({a,b}))"))

    def test_positive_guards_are_preserved_by_embedding(self) -> None:
        rng = random.Random(11)
        for _ in range(1000):
            small = random_tree(rng, max_nodes=4)
            big = grow_tree(rng, small, steps=4)
            mapping = find_embedding(small, big)
            assert mapping is not None
            g = random_guard(rng, depth=3)
            assert is_positive(g)
            for u in matching_nodes(small, g):
                assert match_guard(big, mapping[u], g)

    def test_unrelated_trees_preserve_positive_guards(self) -> None:
        rng = random.Random(12)
        for _ in range(1000):
            small = random_tree(rng, max_nodes=3)
            big = random_tree(rng, max_nodes=6)
            mapping = find_embedding(small, big)
            if mapping is None:
                continue
            g = random_guard(rng, depth=3)
            for u in matching_nodes(small, g):
                assert match_guard(big, mapping[u], g)


class TestEmbeddingPreorder:
    def test_reflexive(self) -> None:
        rng = random.Random(21)
        for _ in range(1000):
            t = random_tree(rng, max_nodes=6)
            mapping = find_embedding(t, t)
            assert mapping is not None
            assert_embedding(t, t, mapping)

    def test_transitive(self) -> None:
        rng = random.Random(22)
        for _ in range(1000):
            t1 = random_tree(rng, max_nodes=4)
            t2 = grow_tree(rng, t1)
            t3 = grow_tree(rng, t2)
            f = find_embedding(t1, t2)
            g = find_embedding(t2, t3)
            assert f is not None and g is not None
            assert_embedding(t1, t3, {u: g[w] for u, w in f.items()})
            h = find_embedding(t1, t3)
            assert h is not None
            assert_embedding(t1, t3, h)

    def test_transitive_on_unrelated_trees(self) -> None:
        rng = random.Random(23)
        for _ in range(1000):
            t1, t2, t3 = (random_tree(rng, CLASSES[:2], max_nodes=n) for n in (2, 3, 5))
            if is_embedded(t1, t2) and is_embedded(t2, t3):
                assert is_embedded(t1, t3)

    def test_witness_is_an_embedding(self) -> None:
        rng = random.Random(24)
        for _ in range(1000):
            small = random_tree(rng, CLASSES[:2], max_nodes=3)
            big = random_tree(rng, CLASSES[:2], max_nodes=6)
            mapping = find_embedding(small, big)
            if mapping is not None:
                assert_embedding(small, big, mapping)

    def test_mutual_embedding_matches_key(self) -> None:
        rng = random.Random(25)
        for _ in range(1000):
            t1 = random_tree(rng, CLASSES[:2], max_nodes=4)
            if rng.random() < 0.5:
                t2 = random_tree(rng, CLASSES[:2], max_nodes=4)
            else:
                t2 = grow_tree(rng, t1, CLASSES[:2])
            mutual = is_embedded(t1, t2) and is_embedded(t2, t1)
            assert mutual == (embedding_key(t1) == embedding_key(t2))
