"""Reduced ordered binary decision diagrams.

Nodes live in flat arrays owned by a :class:`BddManager`; a node handle is an
int index. ``0`` and ``1`` are the terminals. The variable order is fixed at
construction. A manager is not thread-safe; give each worker its own.
"""

from __future__ import annotations

import logging
import sys
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

from .exceptions import BddError

_LOGGER = logging.getLogger(__name__)

BddRef = int

FALSE: BddRef = 0
TRUE: BddRef = 1


# --- formulas -----------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Neg:
    body: Expr


@dataclass(frozen=True)
class Conj:
    parts: tuple[Expr, ...]


@dataclass(frozen=True)
class Disj:
    parts: tuple[Expr, ...]


@dataclass(frozen=True)
class Iff:
    left: Expr
    right: Expr


Expr = Var | Const | Neg | Conj | Disj | Iff


def all_of(*parts: Expr) -> Conj:
    return Conj(tuple(parts))


def any_of(*parts: Expr) -> Disj:
    return Disj(tuple(parts))


# --- manager ------------------------------------------------------------------


class BddManager:
    """Node store, unique table and operation cache for one variable order."""

    def __init__(self, variables: Sequence[str]) -> None:
        if len(set(variables)) != len(variables):
            raise BddError("duplicate variable in order")
        self._names: list[str] = list(variables)
        self._levels: dict[str, int] = {name: i for i, name in enumerate(self._names)}
        terminal = len(self._names)
        self._var: list[int] = [terminal, terminal]
        self._lo: list[int] = [FALSE, TRUE]
        self._hi: list[int] = [FALSE, TRUE]
        self._unique: dict[tuple[int, int, int], int] = {}
        self._cache: dict[tuple[object, ...], int] = {}
        self._varsets: dict[frozenset[int], int] = {}
        self._maps: dict[tuple[tuple[int, int], ...], int] = {}
        limit = 4 * len(self._names) + 1000
        if sys.getrecursionlimit() < limit:
            sys.setrecursionlimit(limit)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(self._names)

    def __len__(self) -> int:
        """Number of allocated nodes, terminals included."""
        return len(self._var)

    def level_of(self, name: str) -> int:
        try:
            return self._levels[name]
        except KeyError:
            raise BddError(f"unknown variable {name!r}") from None

    def clear_cache(self) -> None:
        self._cache.clear()

    # --- construction ---------------------------------------------------------

    def _mk(self, level: int, lo: BddRef, hi: BddRef) -> BddRef:
        if lo == hi:
            return lo
        key = (level, lo, hi)
        node = self._unique.get(key)
        if node is None:
            node = len(self._var)
            self._var.append(level)
            self._lo.append(lo)
            self._hi.append(hi)
            self._unique[key] = node
        return node

    def var(self, name: str) -> BddRef:
        return self._mk(self.level_of(name), FALSE, TRUE)

    def nvar(self, name: str) -> BddRef:
        return self._mk(self.level_of(name), TRUE, FALSE)

    def cube(self, assignment: Mapping[str, bool]) -> BddRef:
        """Conjunction of literals fixing every variable of ``assignment``."""
        result = TRUE
        for level in sorted((self.level_of(n) for n in assignment), reverse=True):
            if assignment[self._names[level]]:
                result = self._mk(level, FALSE, result)
            else:
                result = self._mk(level, result, FALSE)
        return result

    def _cofactors(self, f: BddRef, level: int) -> tuple[BddRef, BddRef]:
        if self._var[f] == level:
            return self._lo[f], self._hi[f]
        return f, f

    # --- boolean algebra ------------------------------------------------------

    def apply_and(self, a: BddRef, b: BddRef) -> BddRef:
        return self._apply("and", a, b)

    def apply_or(self, a: BddRef, b: BddRef) -> BddRef:
        return self._apply("or", a, b)

    def apply_iff(self, a: BddRef, b: BddRef) -> BddRef:
        return self._apply("iff", a, b)

    def _apply(self, op: str, a: BddRef, b: BddRef) -> BddRef:
        if op == "and":
            if a == FALSE or b == FALSE:
                return FALSE
            if a == TRUE:
                return b
            if b == TRUE or a == b:
                return a
        elif op == "or":
            if a == TRUE or b == TRUE:
                return TRUE
            if a == FALSE:
                return b
            if b == FALSE or a == b:
                return a
        else:
            if a == b:
                return TRUE
            if a <= TRUE and b <= TRUE:
                return FALSE
            if a == TRUE:
                return b
            if b == TRUE:
                return a
            if a == FALSE:
                return self.negate(b)
            if b == FALSE:
                return self.negate(a)
        if a > b:
            a, b = b, a
        key = (op, a, b)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        level = min(self._var[a], self._var[b])
        a0, a1 = self._cofactors(a, level)
        b0, b1 = self._cofactors(b, level)
        result = self._mk(level, self._apply(op, a0, b0), self._apply(op, a1, b1))
        self._cache[key] = result
        return result

    def negate(self, a: BddRef) -> BddRef:
        if a <= TRUE:
            return TRUE - a
        key = ("not", a)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        result = self._mk(self._var[a], self.negate(self._lo[a]), self.negate(self._hi[a]))
        self._cache[key] = result
        return result

    def conjoin(self, parts: Iterable[BddRef]) -> BddRef:
        result = TRUE
        for p in parts:
            result = self.apply_and(result, p)
            if result == FALSE:
                break
        return result

    def disjoin(self, parts: Iterable[BddRef]) -> BddRef:
        result = FALSE
        for p in parts:
            result = self.apply_or(result, p)
            if result == TRUE:
                break
        return result

    # --- quantification and substitution ---------------------------------------

    def _varset(self, names: Iterable[str]) -> tuple[int, frozenset[int]]:
        levels = frozenset(self.level_of(n) for n in names)
        ident = self._varsets.setdefault(levels, len(self._varsets))
        return ident, levels

    def exists(self, f: BddRef, names: Iterable[str]) -> BddRef:
        """Existentially quantify ``names`` out of ``f``."""
        ident, levels = self._varset(names)
        if not levels:
            return f
        return self._exists(f, ident, levels, max(levels))

    def _exists(self, f: BddRef, ident: int, levels: frozenset[int], last: int) -> BddRef:
        if f <= TRUE or self._var[f] > last:
            return f
        key = ("ex", f, ident)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        level = self._var[f]
        lo = self._exists(self._lo[f], ident, levels, last)
        if level in levels:
            result = TRUE if lo == TRUE else self.apply_or(lo, self._exists(self._hi[f], ident, levels, last))
        else:
            result = self._mk(level, lo, self._exists(self._hi[f], ident, levels, last))
        self._cache[key] = result
        return result

    def and_exists(self, a: BddRef, b: BddRef, names: Iterable[str]) -> BddRef:
        """``exists(apply_and(a, b), names)`` without building the conjunction."""
        ident, levels = self._varset(names)
        if not levels:
            return self.apply_and(a, b)
        return self._and_exists(a, b, ident, levels, max(levels))

    def _and_exists(self, a: BddRef, b: BddRef, ident: int, levels: frozenset[int], last: int) -> BddRef:
        if a == FALSE or b == FALSE:
            return FALSE
        if a == TRUE and b == TRUE:
            return TRUE
        if a == TRUE or a == b:
            return self._exists(b, ident, levels, last)
        if b == TRUE:
            return self._exists(a, ident, levels, last)
        if a > b:
            a, b = b, a
        key = ("ae", a, b, ident)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        level = min(self._var[a], self._var[b])
        if level > last:
            result = self.apply_and(a, b)
        else:
            a0, a1 = self._cofactors(a, level)
            b0, b1 = self._cofactors(b, level)
            lo = self._and_exists(a0, b0, ident, levels, last)
            if level in levels:
                if lo == TRUE:
                    result = TRUE
                else:
                    result = self.apply_or(lo, self._and_exists(a1, b1, ident, levels, last))
            else:
                result = self._mk(level, lo, self._and_exists(a1, b1, ident, levels, last))
        self._cache[key] = result
        return result

    def rename(self, f: BddRef, mapping: Mapping[str, str]) -> BddRef:
        """Substitute variables in ``f``.

        The substitution must keep the relative order of ``f``'s support.

        Raises:
            BddError: If the renamed support would be out of order
        """
        level_map = {self.level_of(src): self.level_of(dst) for src, dst in mapping.items()}
        support = sorted(self._support_levels(f))
        image = [level_map.get(lv, lv) for lv in support]
        if any(x >= y for x, y in zip(image, image[1:], strict=False)):
            raise BddError("rename does not preserve the variable order")
        relevant = tuple(sorted((lv, level_map[lv]) for lv in support if lv in level_map and level_map[lv] != lv))
        if not relevant:
            return f
        ident = self._maps.setdefault(relevant, len(self._maps))
        return self._rename(f, dict(relevant), ident)

    def _rename(self, f: BddRef, level_map: dict[int, int], ident: int) -> BddRef:
        if f <= TRUE:
            return f
        key = ("rn", f, ident)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        level = self._var[f]
        result = self._mk(
            level_map.get(level, level),
            self._rename(self._lo[f], level_map, ident),
            self._rename(self._hi[f], level_map, ident),
        )
        self._cache[key] = result
        return result

    # --- inspection -----------------------------------------------------------

    def _support_levels(self, f: BddRef) -> set[int]:
        seen: set[int] = set()
        levels: set[int] = set()
        stack = [f]
        while stack:
            n = stack.pop()
            if n <= TRUE or n in seen:
                continue
            seen.add(n)
            levels.add(self._var[n])
            stack.append(self._lo[n])
            stack.append(self._hi[n])
        return levels

    def support(self, f: BddRef) -> frozenset[str]:
        return frozenset(self._names[lv] for lv in self._support_levels(f))

    def node_count(self, f: BddRef) -> int:
        """Internal nodes reachable from ``f``."""
        seen: set[int] = set()
        stack = [f]
        while stack:
            n = stack.pop()
            if n <= TRUE or n in seen:
                continue
            seen.add(n)
            stack.append(self._lo[n])
            stack.append(self._hi[n])
        return len(seen)

    def evaluate(self, f: BddRef, assignment: Mapping[str, bool]) -> bool:
        """Follow the decision path of ``assignment``.

        Raises:
            BddError: If a variable on the path is unassigned
        """
        while f > TRUE:
            name = self._names[self._var[f]]
            if name not in assignment:
                raise BddError(f"assignment misses variable {name!r}")
            f = self._hi[f] if assignment[name] else self._lo[f]
        return f == TRUE

    def pick_model(self, f: BddRef, care: Iterable[str] | None = None) -> dict[str, bool] | None:
        """A satisfying assignment, or None if ``f`` is false.

        Variables in ``care`` that the chosen path skips are set to False.
        """
        if f == FALSE:
            return None
        model: dict[str, bool] = {}
        while f > TRUE:
            name = self._names[self._var[f]]
            if self._lo[f] != FALSE:
                model[name] = False
                f = self._lo[f]
            else:
                model[name] = True
                f = self._hi[f]
        for name in care or ():
            self.level_of(name)
            model.setdefault(name, False)
        return model

    def to_dot(self, f: BddRef, name: str = "bdd") -> str:
        """Graphviz source for ``f``; dashed edges are the 0 branches."""
        lines = [f"digraph {name} {{", '  n0 [shape=box,label="0"];', '  n1 [shape=box,label="1"];']
        seen: set[int] = set()
        stack = [f]
        while stack:
            n = stack.pop()
            if n <= TRUE or n in seen:
                continue
            seen.add(n)
            lines.append(f'  n{n} [label="{self._names[self._var[n]]}"];')
            lines.append(f"  n{n} -> n{self._lo[n]} [style=dashed];")
            lines.append(f"  n{n} -> n{self._hi[n]};")
            stack.extend((self._lo[n], self._hi[n]))
        lines.append("}")
        return "\n".join(lines)


def build_formula(mgr: BddManager, expr: Expr) -> BddRef:
    """Canonical BDD of ``expr``.

    Raises:
        BddError: If ``expr`` mentions a variable outside the manager's order
    """
    match expr:
        case Var(name):
            return mgr.var(name)
        case Const(value):
            return TRUE if value else FALSE
        case Neg(body):
            return mgr.negate(build_formula(mgr, body))
        case Conj(parts):
            return mgr.conjoin(build_formula(mgr, p) for p in parts)
        case Disj(parts):
            return mgr.disjoin(build_formula(mgr, p) for p in parts)
        case Iff(left, right):
            return mgr.apply_iff(build_formula(mgr, left), build_formula(mgr, right))
    raise BddError(f"not a formula: {expr!r}")
