import functools
import itertools
import operator
import random
from collections.abc import Callable

import pytest

from treeprune.bdd import (
    FALSE,
    TRUE,
    BddManager,
    BddRef,
    Conj,
    Const,
    Disj,
    Expr,
    Iff,
    Neg,
    Var,
    all_of,
    any_of,
    build_formula,
)
from treeprune.exceptions import BddError

VARS = ("a", "b", "c", "d")
WIDE = ("a", "b", "c", "d", "e", "f", "g", "h")


def assignments(names: tuple[str, ...] = VARS) -> list[dict[str, bool]]:
    return [dict(zip(names, bits, strict=True)) for bits in itertools.product([False, True], repeat=len(names))]


def truth(expr: Expr, env: dict[str, bool]) -> bool:
    match expr:
        case Var(name):
            return env[name]
        case Const(value):
            return value
        case Neg(body):
            return not truth(body, env)
        case Iff(left, right):
            return truth(left, env) == truth(right, env)
        case Conj(parts):
            return all(truth(p, env) for p in parts)
        case Disj(parts):
            return any(truth(p, env) for p in parts)
    raise TypeError(expr)


def random_expr(rng: random.Random, depth: int, names: tuple[str, ...] = VARS) -> Expr:
    if depth == 0 or rng.random() < 0.25:
        return Var(rng.choice(names)) if rng.random() < 0.9 else Const(rng.random() < 0.5)
    kind = rng.randrange(4)
    if kind == 0:
        return Neg(random_expr(rng, depth - 1, names))
    if kind == 1:
        return Iff(random_expr(rng, depth - 1, names), random_expr(rng, depth - 1, names))
    parts = [random_expr(rng, depth - 1, names) for _ in range(rng.randint(1, 3))]
    return all_of(*parts) if kind == 2 else any_of(*parts)


def equivalent_expr(rng: random.Random, expr: Expr) -> Expr:
    """A differently built formula with the same truth table."""
    match expr:
        case Conj(parts) if rng.random() < 0.5:
            return Neg(any_of(*(Neg(equivalent_expr(rng, p)) for p in reversed(parts))))
        case Disj(parts) if rng.random() < 0.5:
            return Neg(all_of(*(Neg(equivalent_expr(rng, p)) for p in reversed(parts))))
        case Conj(parts):
            return all_of(*rng.sample([equivalent_expr(rng, p) for p in parts], len(parts)))
        case Disj(parts):
            return any_of(*rng.sample([equivalent_expr(rng, p) for p in parts], len(parts)))
        case Iff(left, right):
            return Iff(equivalent_expr(rng, right), equivalent_expr(rng, left))
        case Neg(Neg(body)):
            return equivalent_expr(rng, body)
    return Neg(Neg(expr)) if rng.random() < 0.5 else Iff(expr, Const(True))


@functools.cache
def _column(name: str, names: tuple[str, ...]) -> int:
    j = names.index(name)
    return sum(1 << m for m in range(2 ** len(names)) if m >> j & 1)


def table(expr: Expr, names: tuple[str, ...]) -> int:
    """Truth table of ``expr`` as a bitmask; bit m is assignment m, variable j is bit j of m."""
    full = (1 << 2 ** len(names)) - 1
    match expr:
        case Var(name):
            return _column(name, names)
        case Const(value):
            return full if value else 0
        case Neg(body):
            return full & ~table(body, names)
        case Iff(left, right):
            return full & ~(table(left, names) ^ table(right, names))
        case Conj(parts):
            return functools.reduce(operator.and_, (table(p, names) for p in parts), full)
        case Disj(parts):
            return functools.reduce(operator.or_, (table(p, names) for p in parts), 0)
    raise TypeError(expr)


def assignment(m: int, names: tuple[str, ...]) -> dict[str, bool]:
    return {v: bool(m >> j & 1) for j, v in enumerate(names)}


class TestConstruction:
    def test_terminals_and_literals(self) -> None:
        mgr = BddManager(VARS)
        a = mgr.var("a")
        assert mgr.var("a") == a
        assert mgr.negate(a) == mgr.nvar("a")
        assert mgr.negate(mgr.negate(a)) == a
        assert mgr.negate(TRUE) == FALSE

    @pytest.mark.parametrize(
        "reference, method",
        [
            (lambda x, y: x and y, "apply_and"),
            (lambda x, y: x or y, "apply_or"),
            (lambda x, y: x == y, "apply_iff"),
        ],
    )
    def test_binary_truth_tables(self, reference: Callable[[bool, bool], bool], method: str) -> None:
        mgr = BddManager(VARS)
        f = getattr(mgr, method)(mgr.var("a"), mgr.nvar("c"))
        for env in assignments():
            assert mgr.evaluate(f, env) == reference(env["a"], not env["c"])

    def test_cube(self) -> None:
        mgr = BddManager(VARS)
        f = mgr.cube({"b": True, "d": False})
        assert f == mgr.apply_and(mgr.var("b"), mgr.nvar("d"))
        assert mgr.node_count(f) == 2
        assert mgr.cube({}) == TRUE

    def test_conjoin_and_disjoin(self) -> None:
        mgr = BddManager(VARS)
        assert mgr.conjoin([]) == TRUE
        assert mgr.disjoin([]) == FALSE
        assert mgr.conjoin([mgr.var("a"), mgr.nvar("a")]) == FALSE
        assert mgr.disjoin([mgr.var("a"), mgr.nvar("a")]) == TRUE

    def test_duplicate_variables(self) -> None:
        with pytest.raises(BddError, match="duplicate variable"):
            BddManager(["a", "a"])

    def test_unknown_variable(self) -> None:
        with pytest.raises(BddError, match="unknown variable 'z'"):
            BddManager(VARS).var("z")


class TestCanonicity:
    @pytest.mark.parametrize("seed", range(20))
    def test_formula_matches_truth_table(self, seed: int) -> None:
        rng = random.Random(seed)
        mgr = BddManager(VARS)
        expr = random_expr(rng, 4)
        f = build_formula(mgr, expr)
        for env in assignments():
            assert mgr.evaluate(f, env) == truth(expr, env)

    def test_every_function_of_three_variables(self) -> None:
        names = VARS[:3]
        mgr = BddManager(names)
        envs = [assignment(m, names) for m in range(8)]
        seen: dict[BddRef, int] = {}
        for bits in range(256):
            rows = [env for m, env in enumerate(envs) if bits >> m & 1]
            others = [env for m, env in enumerate(envs) if not bits >> m & 1]
            dnf = any_of(*(all_of(*(Var(v) if env[v] else Neg(Var(v)) for v in names)) for env in rows))
            cnf = all_of(*(any_of(*(Neg(Var(v)) if env[v] else Var(v) for v in names)) for env in others))
            f = build_formula(mgr, dnf)
            assert build_formula(mgr, cnf) == f
            assert table(dnf, names) == bits
            assert [mgr.evaluate(f, env) for env in envs] == [bool(bits >> m & 1) for m in range(8)]
            assert seen.setdefault(f, bits) == bits
        assert len(seen) == 256

    def test_handles_agree_with_truth_tables(self) -> None:
        rng = random.Random(41)
        mgr = BddManager(WIDE)
        for _ in range(1000):
            lhs = random_expr(rng, 4, WIDE)
            rhs = equivalent_expr(rng, lhs) if rng.random() < 0.5 else random_expr(rng, 4, WIDE)
            f, g = build_formula(mgr, lhs), build_formula(mgr, rhs)
            assert (f == g) == (table(lhs, WIDE) == table(rhs, WIDE))

    def test_wide_formulas_evaluate_like_their_tables(self) -> None:
        rng = random.Random(42)
        mgr = BddManager(WIDE)
        for _ in range(1000):
            expr = random_expr(rng, 3, WIDE)
            f = build_formula(mgr, expr)
            bits = table(expr, WIDE)
            m = rng.randrange(256)
            assert mgr.evaluate(f, assignment(m, WIDE)) == bool(bits >> m & 1)

    def test_equivalent_formulas_share_a_node(self) -> None:
        mgr = BddManager(VARS)
        a, b, c = Var("a"), Var("b"), Var("c")
        lhs = build_formula(mgr, all_of(a, any_of(b, c)))
        rhs = build_formula(mgr, any_of(all_of(a, b), all_of(a, c)))
        assert lhs == rhs
        assert build_formula(mgr, Neg(all_of(a, b))) == build_formula(mgr, any_of(Neg(a), Neg(b)))


class TestQuantification:
    def test_exists(self) -> None:
        mgr = BddManager(VARS)
        f = mgr.apply_and(mgr.var("a"), mgr.apply_iff(mgr.var("b"), mgr.var("c")))
        assert mgr.exists(f, ["b"]) == mgr.var("a")
        assert mgr.exists(f, ["a", "b", "c"]) == TRUE
        assert mgr.exists(f, []) == f
        assert mgr.exists(FALSE, ["a"]) == FALSE

    @pytest.mark.parametrize("seed", range(10))
    def test_and_exists_matches_exists_of_and(self, seed: int) -> None:
        rng = random.Random(seed)
        mgr = BddManager(VARS)
        a = build_formula(mgr, random_expr(rng, 3))
        b = build_formula(mgr, random_expr(rng, 3))
        names = rng.sample(VARS, rng.randint(0, 3))
        assert mgr.and_exists(a, b, names) == mgr.exists(mgr.apply_and(a, b), names)

    def test_rename(self) -> None:
        mgr = BddManager(("a", "a'", "b", "b'"))
        f = mgr.apply_and(mgr.var("a"), mgr.nvar("b"))
        g = mgr.rename(f, {"a": "a'", "b": "b'"})
        assert g == mgr.apply_and(mgr.var("a'"), mgr.nvar("b'"))
        assert mgr.rename(g, {"a'": "a", "b'": "b"}) == f
        assert mgr.rename(f, {"b'": "a"}) == f

    def test_rename_rejects_reordering(self) -> None:
        mgr = BddManager(("a", "b", "c"))
        f = mgr.apply_and(mgr.var("a"), mgr.var("b"))
        with pytest.raises(BddError, match="variable order"):
            mgr.rename(f, {"a": "c"})


class TestInspection:
    def test_support(self) -> None:
        mgr = BddManager(VARS)
        f = mgr.apply_or(mgr.var("b"), mgr.apply_and(mgr.var("d"), mgr.nvar("d")))
        assert mgr.support(f) == frozenset({"b"})
        assert mgr.support(TRUE) == frozenset()

    def test_pick_model(self) -> None:
        mgr = BddManager(VARS)
        f = mgr.apply_and(mgr.var("b"), mgr.nvar("c"))
        model = mgr.pick_model(f, care=VARS)
        assert model is not None
        assert model == {"a": False, "b": True, "c": False, "d": False}
        assert mgr.evaluate(f, model)
        assert mgr.pick_model(FALSE) is None
        assert mgr.pick_model(TRUE) == {}

    def test_evaluate_needs_path_variables(self) -> None:
        mgr = BddManager(VARS)
        with pytest.raises(BddError, match="misses variable 'a'"):
            mgr.evaluate(mgr.var("a"), {"b": True})

    def test_to_dot(self) -> None:
        mgr = BddManager(VARS)
        dot = mgr.to_dot(mgr.apply_and(mgr.var("a"), mgr.var("b")), "guard")
        assert dot.startswith("digraph guard {")
        assert dot.endswith("}")
        assert 'label="a"' in dot and 'label="b"' in dot
        assert dot.count("style=dashed") == 2

    def test_build_formula_rejects_unknown_variables(self) -> None:
        with pytest.raises(BddError):
            build_formula(BddManager(VARS), Var("z"))
