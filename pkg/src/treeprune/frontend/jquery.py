"""Rewrite rules from jQuery call chains.

This is pattern matching over a forgiving JavaScript parse, not a JavaScript
semantics. A chain ``$(s).f(x)...`` is translated with a stack of guards
standing for jQuery's stack of matched sets. Handlers passed to ``click``,
``on``, ``each`` and friends are translated with ``this`` bound to the
current selection; every other function body is translated with ``this``
matching any node. Variables assigned exactly once in the whole page keep
their value; everything unknown becomes ``true``, including the receiver of a
jQuery method whose selection is not known.
"""

from __future__ import annotations

import logging
import re
from collections.abc import Iterator
from dataclasses import dataclass

from ..const.jquery import DOCUMENT_OBJECTS, IGNORED_FUNCTIONS, JQUERY_FUNCTIONS, JQUERY_NAMES, JQueryKind
from ..guards import TRUE, And, Direction, Guard, Modal, Or, Top, down_plus, up_plus
from ..rewrite import AddClass, RewriteRule
from .css import translate_selector
from .html import DomDocument, FreshNames, SourceText, coarse_fragment_rules, fragment_to_rules

_LOGGER = logging.getLogger(__name__)

# --- tokens -------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<str>'(?:\\.|[^'\\\n])*'|"(?:\\.|[^"\\\n])*"|`(?:\\.|[^`\\])*`)
  | (?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+)
  | (?P<name>[A-Za-z_$][\w$]*)
  | (?P<punct>=>|\.\.\.|===|!==|==|!=|<=|>=|&&|\|\||\?\.|\?\?|\+\+|--|[-+*/%&|^]=|[{}()\[\];,.?:+\-*/%<>=!&|^~])
    """,
    re.VERBOSE | re.DOTALL,
)

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", "'": "'", '"': '"', "`": "`"}


@dataclass(frozen=True)
class Tok:
    kind: str
    value: str
    line: int


def _unquote(raw: str) -> str:
    out: list[str] = []
    body = raw[1:-1]
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            out.append(_ESCAPES.get(body[i + 1], body[i + 1]))
            i += 2
            continue
        out.append(ch)
        i += 1
    return "".join(out)


def tokenize_js(text: str) -> list[Tok]:
    """Tokens of ``text``; characters outside the grammar are skipped."""
    tokens: list[Tok] = []
    pos = 0
    line = 1
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            pos += 1
            continue
        kind = m.lastgroup or "punct"
        raw = m.group()
        if kind == "str":
            if raw.startswith("`") and "${" in raw:
                tokens.append(Tok("template", raw, line))
            else:
                tokens.append(Tok("str", _unquote(raw), line))
        elif kind not in ("ws", "comment"):
            tokens.append(Tok(kind, raw, line))
        line += raw.count("\n")
        pos = m.end()
    return tokens


# --- syntax -------------------------------------------------------------------


@dataclass(frozen=True)
class Name:
    id: str


@dataclass(frozen=True)
class Str:
    value: str


@dataclass(frozen=True)
class Num:
    value: str


@dataclass(frozen=True)
class Func:
    params: tuple[str, ...]
    body: tuple[Stmt, ...]
    name: str | None = None


@dataclass(frozen=True)
class Member:
    obj: Expr
    prop: str


@dataclass(frozen=True)
class Call:
    callee: Expr
    args: tuple[Expr, ...]
    line: int = 0


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Assign:
    target: Expr
    op: str
    value: Expr


@dataclass(frozen=True)
class Other:
    """Any other expression; only its parts matter."""

    parts: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class ObjectLit:
    values: tuple[Expr, ...]


Expr = Name | Str | Num | Func | Member | Call | BinOp | Assign | Other | ObjectLit


@dataclass(frozen=True)
class VarDecl:
    name: str
    value: Expr | None


@dataclass(frozen=True)
class ExprStmt:
    expr: Expr


@dataclass(frozen=True)
class Block:
    body: tuple[Stmt, ...]


@dataclass(frozen=True)
class Branch:
    """Conditional or loop: its parts may run any number of times."""

    tests: tuple[Expr, ...]
    bodies: tuple[Stmt, ...]
    loop: bool = False


@dataclass(frozen=True)
class Return:
    value: Expr | None


Stmt = VarDecl | ExprStmt | Block | Branch | Return


class _SyntaxProblem(Exception):
    pass


_BINARY = frozenset(
    "+ - * / % < > <= >= == != === !== && || ?? & | ^ instanceof in".split()
)
_ASSIGN = frozenset("= += -= *= /= %= &= |= ^=".split())
_PREFIX = frozenset("! - + ~ ++ -- typeof void delete new await".split())


class _JsParser:
    def __init__(self, tokens: list[Tok]) -> None:
        self.toks = tokens
        self.pos = 0
        self.problems: list[str] = []

    # helpers

    def _peek(self, offset: int = 0) -> Tok | None:
        i = self.pos + offset
        return self.toks[i] if i < len(self.toks) else None

    def _is(self, value: str, offset: int = 0) -> bool:
        tok = self._peek(offset)
        return tok is not None and tok.kind in ("punct", "name") and tok.value == value

    def _take(self, value: str | None = None) -> Tok:
        tok = self._peek()
        if tok is None:
            raise _SyntaxProblem("unexpected end of script")
        if value is not None and not (tok.value == value and tok.kind in ("punct", "name")):
            raise _SyntaxProblem(f"line {tok.line}: expected {value!r}, found {tok.value!r}")
        self.pos += 1
        return tok

    def _accept(self, value: str) -> bool:
        if self._is(value):
            self.pos += 1
            return True
        return False

    def _skip_balanced(self, open_: str, close: str) -> None:
        depth = 0
        while (tok := self._peek()) is not None:
            self.pos += 1
            if tok.kind == "punct" and tok.value == open_:
                depth += 1
            elif tok.kind == "punct" and tok.value == close:
                depth -= 1
                if depth == 0:
                    return
        raise _SyntaxProblem(f"unbalanced {open_!r}")

    def _recover(self) -> None:
        depth = 0
        while (tok := self._peek()) is not None:
            if tok.kind == "punct" and tok.value in "({[":
                depth += 1
            elif tok.kind == "punct" and tok.value in ")}]":
                if depth == 0:
                    return
                depth -= 1
            self.pos += 1
            if depth == 0 and tok.kind == "punct" and tok.value == ";":
                return

    # statements

    def program(self) -> tuple[Stmt, ...]:
        body: list[Stmt] = []
        while self._peek() is not None:
            if self._is("}"):
                self.pos += 1
                continue
            body.extend(self._statement_safe())
        return tuple(body)

    def _statement_safe(self) -> list[Stmt]:
        start = self.pos
        try:
            return self.statement()
        except _SyntaxProblem as e:
            self.problems.append(str(e))
            if self.pos == start:
                self.pos += 1
            self._recover()
            return []

    def _block_body(self) -> tuple[Stmt, ...]:
        self._take("{")
        body: list[Stmt] = []
        while not self._is("}"):
            if self._peek() is None:
                raise _SyntaxProblem("unterminated block")
            body.extend(self._statement_safe())
        self._take("}")
        return tuple(body)

    def _sub_statement(self) -> Stmt:
        stmts = self.statement()
        return stmts[0] if len(stmts) == 1 else Block(tuple(stmts))

    def statement(self) -> list[Stmt]:
        tok = self._peek()
        if tok is None:
            return []
        if tok.kind == "punct" and tok.value == ";":
            self.pos += 1
            return []
        if tok.kind == "punct" and tok.value == "{":
            return [Block(self._block_body())]
        if tok.kind == "name":
            word = tok.value
            if word in ("var", "let", "const"):
                self.pos += 1
                decls = self._declarations()
                self._accept(";")
                return decls
            if word == "function":
                func = self._function()
                if func.name is None:
                    return [ExprStmt(func)]
                return [VarDecl(func.name, func)]
            if word == "if":
                self.pos += 1
                test = self._paren_expr()
                then = self._sub_statement()
                bodies = [then]
                if self._accept("else"):
                    bodies.append(self._sub_statement())
                return [Branch((test,), tuple(bodies))]
            if word in ("for", "while"):
                self.pos += 1
                start = self.pos
                self._skip_balanced("(", ")")
                header = _JsParser(self.toks[start + 1 : self.pos - 1])
                tests = header._loose_expressions()
                return [Branch(tests, (self._sub_statement(),), loop=True)]
            if word == "do":
                self.pos += 1
                body = self._sub_statement()
                self._take("while")
                test = self._paren_expr()
                self._accept(";")
                return [Branch((test,), (body,), loop=True)]
            if word == "switch":
                self.pos += 1
                test = self._paren_expr()
                return [Branch((test,), self._switch_body())]
            if word == "try":
                self.pos += 1
                bodies = [Block(self._block_body())]
                if self._accept("catch"):
                    if self._is("("):
                        self._skip_balanced("(", ")")
                    bodies.append(Block(self._block_body()))
                if self._accept("finally"):
                    bodies.append(Block(self._block_body()))
                return [Branch((), tuple(bodies))]
            if word == "return":
                self.pos += 1
                value = None if self._is(";") or self._is("}") else self.expression()
                self._accept(";")
                return [Return(value)]
            if word in ("break", "continue"):
                self.pos += 1
                self._accept(";")
                return []
            if word == "throw":
                self.pos += 1
                expr = self.expression()
                self._accept(";")
                return [ExprStmt(expr)]
        expr = self.expression()
        self._accept(";")
        return [ExprStmt(expr)]

    def _switch_body(self) -> tuple[Stmt, ...]:
        self._take("{")
        body: list[Stmt] = []
        while not self._is("}"):
            if self._peek() is None:
                raise _SyntaxProblem("unterminated switch")
            if self._accept("case"):
                self.expression()
                self._take(":")
            elif self._accept("default"):
                self._take(":")
            else:
                body.extend(self._statement_safe())
        self._take("}")
        return tuple(body)

    def _declarations(self) -> list[Stmt]:
        decls: list[Stmt] = []
        while True:
            tok = self._take()
            if tok.kind == "punct" and tok.value in "[{":
                self.pos -= 1
                self._skip_balanced(tok.value, "]" if tok.value == "[" else "}")
                value = self.assignment() if self._accept("=") else None
                if value is not None:
                    decls.append(ExprStmt(value))
            elif tok.kind == "name":
                value = self.assignment() if self._accept("=") else None
                decls.append(VarDecl(tok.value, value))
            else:
                raise _SyntaxProblem(f"line {tok.line}: bad declaration")
            if not self._accept(","):
                return decls

    def _paren_expr(self) -> Expr:
        self._take("(")
        expr = self.expression()
        self._take(")")
        return expr

    def _loose_expressions(self) -> tuple[Expr, ...]:
        out: list[Expr] = []
        while self._peek() is not None:
            if self._accept(";") or self._accept("var") or self._accept("let") or self._accept("const"):
                continue
            try:
                out.append(self.expression())
            except _SyntaxProblem:
                self.pos += 1
        return tuple(out)

    # expressions

    def expression(self) -> Expr:
        expr = self.assignment()
        if not self._is(","):
            return expr
        parts = [expr]
        while self._accept(","):
            parts.append(self.assignment())
        return Other(tuple(parts))

    def assignment(self) -> Expr:
        if self._arrow_ahead():
            return self._arrow()
        left = self._conditional()
        tok = self._peek()
        if tok is not None and tok.kind == "punct" and tok.value in _ASSIGN:
            self.pos += 1
            return Assign(left, tok.value, self.assignment())
        return left

    def _conditional(self) -> Expr:
        test = self._binary()
        if self._accept("?"):
            a = self.assignment()
            self._take(":")
            b = self.assignment()
            return Other((test, a, b))
        return test

    def _binary(self) -> Expr:
        left = self._unary()
        while (tok := self._peek()) is not None and tok.value in _BINARY and tok.kind in ("punct", "name"):
            self.pos += 1
            left = BinOp(tok.value, left, self._unary())
        return left

    def _unary(self) -> Expr:
        tok = self._peek()
        if tok is not None and tok.value in _PREFIX and tok.kind in ("punct", "name"):
            self.pos += 1
            inner = self._unary()
            if tok.value in ("++", "--"):
                return Assign(inner, tok.value, Other())
            return inner if tok.value == "new" else Other((inner,))
        return self._postfix()

    def _postfix(self) -> Expr:
        expr = self._primary()
        while True:
            tok = self._peek()
            if tok is None:
                return expr
            if self._is(".") or self._is("?."):
                self.pos += 1
                prop = self._take()
                expr = Member(expr, prop.value)
            elif self._is("("):
                expr = Call(expr, self._arguments(), tok.line)
            elif self._is("["):
                self.pos += 1
                index = self.expression()
                self._take("]")
                expr = Other((expr, index))
            elif self._is("++") or self._is("--"):
                self.pos += 1
                expr = Assign(expr, tok.value, Other())
            else:
                return expr

    def _arguments(self) -> tuple[Expr, ...]:
        self._take("(")
        args: list[Expr] = []
        while not self._is(")"):
            self._accept("...")
            args.append(self.assignment())
            if not self._accept(","):
                break
        self._take(")")
        return tuple(args)

    def _primary(self) -> Expr:
        tok = self._take()
        if tok.kind == "str":
            return Str(tok.value)
        if tok.kind == "template":
            return Other()
        if tok.kind == "num":
            return Num(tok.value)
        if tok.kind == "name":
            if tok.value == "function":
                self.pos -= 1
                return self._function()
            return Name(tok.value)
        if tok.value == "(":
            expr = self.expression()
            self._take(")")
            return expr
        if tok.value == "[":
            items: list[Expr] = []
            while not self._is("]"):
                if self._accept(","):
                    continue
                self._accept("...")
                items.append(self.assignment())
            self._take("]")
            return Other(tuple(items))
        if tok.value == "{":
            return self._object()
        if tok.value == "/":
            # regular expression literal
            while (nxt := self._peek()) is not None and not (nxt.kind == "punct" and nxt.value == "/"):
                if nxt.line != tok.line:
                    break
                self.pos += 1
            self._accept("/")
            return Other()
        raise _SyntaxProblem(f"line {tok.line}: unexpected {tok.value!r}")

    def _object(self) -> Expr:
        values: list[Expr] = []
        while not self._is("}"):
            if self._accept(","):
                continue
            self._accept("...")
            key = self._take()
            if key.value == "[":
                self.pos -= 1
                self._skip_balanced("[", "]")
            if self._is("("):
                params = self._params()
                values.append(Func(params, self._block_body(), key.value))
            elif self._accept(":"):
                values.append(self.assignment())
            elif key.kind == "name":
                values.append(Name(key.value))
        self._take("}")
        return ObjectLit(tuple(values))

    def _params(self) -> tuple[str, ...]:
        self._take("(")
        params: list[str] = []
        depth = 0
        expect_name = True
        while True:
            tok = self._take()
            if tok.kind == "punct" and tok.value in "([{":
                depth += 1
            elif tok.kind == "punct" and tok.value in ")]}":
                if depth == 0:
                    return tuple(params)
                depth -= 1
            elif depth == 0 and tok.kind == "punct" and tok.value == ",":
                expect_name = True
            elif depth == 0 and tok.kind == "name" and expect_name:
                params.append(tok.value)
                expect_name = False

    def _function(self) -> Func:
        self._take("function")
        self._accept("*")
        name = None
        tok = self._peek()
        if tok is not None and tok.kind == "name":
            name = tok.value
            self.pos += 1
        params = self._params()
        return Func(params, self._block_body(), name)

    def _arrow_ahead(self) -> bool:
        tok = self._peek()
        if tok is None:
            return False
        if tok.kind == "name" and self._is("=>", 1):
            return True
        if tok.kind == "name" and tok.value == "async":
            return self._arrow_ahead_at(self.pos + 1)
        return self._arrow_ahead_at(self.pos)

    def _arrow_ahead_at(self, i: int) -> bool:
        if i >= len(self.toks):
            return False
        if self.toks[i].kind != "punct" or self.toks[i].value != "(":
            return self.toks[i].kind == "name" and i + 1 < len(self.toks) and self.toks[i + 1].value == "=>"
        depth = 0
        for j in range(i, len(self.toks)):
            tok = self.toks[j]
            if tok.kind != "punct":
                continue
            if tok.value in "([{":
                depth += 1
            elif tok.value in ")]}":
                depth -= 1
                if depth == 0:
                    return j + 1 < len(self.toks) and self.toks[j + 1].value == "=>"
        return False

    def _arrow(self) -> Func:
        self._accept("async")
        if self._is("("):
            params = self._params()
        else:
            params = (self._take().value,)
        self._take("=>")
        if self._is("{"):
            return Func(params, self._block_body())
        return Func(params, (Return(self.assignment()),))


def parse_script(text: str) -> tuple[tuple[Stmt, ...], list[str]]:
    """Statements of a script and the problems skipped while parsing it."""
    parser = _JsParser(tokenize_js(text))
    return parser.program(), parser.problems


# --- analysis -----------------------------------------------------------------


@dataclass(frozen=True)
class JQueryStack:
    """Guards for jQuery's stack of matched sets; the last one is current."""

    guards: tuple[Guard, ...]

    @property
    def top(self) -> Guard:
        return self.guards[-1]

    def push(self, g: Guard) -> JQueryStack:
        return JQueryStack((*self.guards, g))


@dataclass(frozen=True)
class StrValue:
    text: str
    complete: bool = True


@dataclass(frozen=True)
class FuncValue:
    func: Func


Value = JQueryStack | StrValue | FuncValue | None

_ANY = JQueryStack((TRUE,))


def _children(stmt: Stmt | Expr) -> Iterator[Stmt | Expr]:
    match stmt:
        case VarDecl(_, value) | Return(value):
            if value is not None:
                yield value
        case ExprStmt(expr):
            yield expr
        case Block(body):
            yield from body
        case Branch(tests, bodies):
            yield from tests
            yield from bodies
        case Func(_, body):
            yield from body
        case Member(obj, _):
            yield obj
        case Call(callee, args):
            yield callee
            yield from args
        case BinOp(_, left, right):
            yield left
            yield right
        case Assign(target, _, value):
            yield target
            yield value
        case Other(parts) | ObjectLit(parts):
            yield from parts


def _count_assignments(node: Stmt | Expr, counts: dict[str, int]) -> None:
    match node:
        case VarDecl(name, value) if value is not None:
            counts[name] = counts.get(name, 0) + 1
        case Assign(Name(name), _, _):
            counts[name] = counts.get(name, 0) + 1
    for child in _children(node):
        _count_assignments(child, counts)


def _assigns(node: Stmt | Expr, names: frozenset[str]) -> set[str]:
    found: set[str] = set()
    match node:
        case VarDecl(name, _) if name in names:
            found.add(name)
        case Assign(Name(name), _, _) if name in names:
            found.add(name)
    for child in _children(node):
        found |= _assigns(child, names)
    return found


def _plugins(node: Stmt | Expr, out: dict[str, Func]) -> None:
    match node:
        case Assign(Member(Member(Name(base), "fn"), name), "=", Func() as func) if base in JQUERY_NAMES:
            out[name] = func
    for child in _children(node):
        _plugins(child, out)


def _both(extra: Guard, rel: Guard) -> Guard:
    return rel if isinstance(extra, Top) else And(extra, rel)


class ScriptTranslator:
    """Translate the scripts of one page into rewrite rules."""

    def __init__(
        self,
        known_classes: frozenset[str] = frozenset(),
        assume_html_variables: bool = False,
        names: FreshNames | None = None,
    ) -> None:
        self.known_classes = known_classes
        self.assume_html_variables = assume_html_variables
        self.names = names or FreshNames()
        self.rules: list[RewriteRule] = []
        self.warnings: list[str] = []
        self.plugins: dict[str, Func] = {}
        self.tracked: frozenset[str] = frozenset()
        self._source = ""
        self._active: set[tuple[int, bool]] = set()

    def _warn(self, line: int, message: str) -> None:
        text = f"{self._source}:{line}: {message}" if line else f"{self._source}: {message}"
        _LOGGER.warning(text)
        self.warnings.append(text)

    def translate(self, scripts: list[SourceText]) -> list[RewriteRule]:
        parsed: list[tuple[str, tuple[Stmt, ...]]] = []
        counts: dict[str, int] = {}
        for script in scripts:
            body, problems = parse_script(script.text)
            self._source = script.source
            for p in problems:
                self._warn(0, f"skipped unparseable code ({p})")
            parsed.append((script.source, body))
            for stmt in body:
                _count_assignments(stmt, counts)
                _plugins(stmt, self.plugins)
        self.tracked = frozenset(n for n, c in counts.items() if c == 1)
        env: dict[str, Value] = {"this": _ANY}
        for source, body in parsed:
            self._source = source
            self._run(body, env)
        return self.rules

    # statements

    def _run(self, body: tuple[Stmt, ...], env: dict[str, Value]) -> None:
        for stmt in body:
            self._exec(stmt, env)

    def _exec(self, stmt: Stmt, env: dict[str, Value]) -> None:
        match stmt:
            case VarDecl(name, value):
                result = self.eval(value, env) if value is not None else None
                env[name] = result if name in self.tracked else None
            case ExprStmt(expr) | Return(expr):
                if expr is not None:
                    self.eval(expr, env)
            case Block(body):
                self._run(body, env)
            case Branch(tests, bodies):
                for test in tests:
                    self.eval(test, env)
                for body in bodies:
                    self._exec(body, env)

    def run_function(self, func: Func, env: dict[str, Value], this: Value, args: tuple[Value, ...] = ()) -> None:
        """Translate ``func``'s body with ``this`` and its parameters bound."""
        this = this if this is not None else _ANY
        if any(k[0] == id(func) for k in self._active):
            # recursive call: translate once more with nothing known
            if (id(func), True) in self._active:
                return
            this, args = _ANY, ()
        key = (id(func), this == _ANY and all(a is None for a in args))
        inner = dict(env)
        inner["this"] = this
        for i, param in enumerate(func.params):
            inner[param] = args[i] if i < len(args) else None
        self._active.add(key)
        try:
            self._run(func.body, inner)
        finally:
            self._active.discard(key)

    # expressions

    def eval(self, expr: Expr, env: dict[str, Value]) -> Value:
        match expr:
            case Str(value):
                return StrValue(value)
            case Num(value):
                return StrValue(value)
            case Name(ident):
                return env.get(ident)
            case Func() as func:
                self.run_function(func, env, _ANY)
                return FuncValue(func)
            case Call() as call:
                return self._call(call, env)
            case Assign(Member(Member(Name(base), "fn"), _), "=", Func()) if base in JQUERY_NAMES:
                # plugins are expanded where they are called
                return None
            case Member(obj, _):
                self.eval(obj, env)
                return None
            case BinOp("+", _, _):
                text, complete = self._string(expr, env)
                return StrValue(text, complete)
            case Assign(Name(name), "=", value):
                result = self.eval(value, env)
                env[name] = result if name in self.tracked else None
                return result
            case Assign(target, _, value):
                self.eval(value, env)
                if isinstance(target, Name):
                    env[target.id] = None
                return None
        for child in _children(expr):
            self._eval_part(child, env)
        return None

    def _eval_part(self, node: Stmt | Expr, env: dict[str, Value]) -> None:
        if isinstance(node, VarDecl | ExprStmt | Block | Branch | Return):
            self._exec(node, env)
        else:
            self.eval(node, env)

    def _string(self, expr: Expr, env: dict[str, Value]) -> tuple[str, bool]:
        """Concatenate string parts; parts that cannot be resolved are dropped."""
        match expr:
            case Str(value) | Num(value):
                return value, True
            case BinOp("+", left, right):
                a, ca = self._string(left, env)
                b, cb = self._string(right, env)
                return a + b, ca and cb
        value = self.eval(expr, env)
        if isinstance(value, StrValue):
            return value.text, value.complete
        return "", False

    def _args(self, args: tuple[Expr, ...], env: dict[str, Value], this: Value = None) -> list[Value]:
        """Evaluate arguments; function literals run with ``this`` bound."""
        values: list[Value] = []
        for arg in args:
            if isinstance(arg, Func):
                self.run_function(arg, env, this if this is not None else _ANY)
                values.append(FuncValue(arg))
            else:
                values.append(self.eval(arg, env))
        return values

    def _call(self, call: Call, env: dict[str, Value]) -> Value:
        callee = call.callee
        if isinstance(callee, Name) and callee.id in JQUERY_NAMES:
            return self._dollar(call, env)
        if isinstance(callee, Member):
            if isinstance(callee.obj, Name) and callee.obj.id in JQUERY_NAMES:
                self._args(call.args, env)
                return None
            base = self.eval(callee.obj, env)
            if isinstance(base, JQueryStack):
                return self._method(base, callee.prop, call, env)
            if base is None and (callee.prop in JQUERY_FUNCTIONS or callee.prop in self.plugins):
                self._warn(call.line, f"receiver of {callee.prop}() is not a known selection; using true")
                return self._method(_ANY, callee.prop, call, env)
            self._args(call.args, env)
            return None
        target = self.eval(callee, env)
        values = self._args(call.args, env)
        if isinstance(target, FuncValue) and not isinstance(callee, Func):
            self.run_function(target.func, env, _ANY, tuple(values))
        return None

    def _selector(self, text: str, line: int) -> Guard:
        tr = translate_selector(text)
        if tr.guard is None:
            self._warn(line, f"selector {text!r} not understood ({tr.reason}); using true")
            return TRUE
        return tr.guard

    def _dollar(self, call: Call, env: dict[str, Value]) -> Value:
        """Evaluate ``$(...)``.

        ``$(document)`` and ``$(window)`` select every node (true) rather than the root;
        pages use them as containers for ``ready`` and event handlers.
        """
        if not call.args:
            return None
        first = call.args[0]
        if isinstance(first, Func):
            self.run_function(first, env, _ANY)
            return None
        if isinstance(first, Name) and first.id in DOCUMENT_OBJECTS:
            return _ANY
        value = self.eval(first, env)
        if isinstance(value, StrValue) and value.complete:
            text = value.text.strip()
            if text.startswith("<"):
                self._warn(call.line, "element creation with $() is not modeled")
                return None
            guard = self._selector(text, call.line)
        elif isinstance(value, JQueryStack):
            guard = value.top
        else:
            self._warn(call.line, "$() argument is not a known selection; using true")
            guard = TRUE
        if len(call.args) > 1:
            context = self.eval(call.args[1], env)
            if isinstance(context, JQueryStack):
                guard = _both(guard, up_plus(context.top))
        return JQueryStack((guard,))

    def _html_argument(self, arg: Expr | None, env: dict[str, Value], line: int) -> tuple[str, bool]:
        if arg is None:
            return "", True
        if isinstance(arg, Func):
            self.run_function(arg, env, _ANY)
            return "", False
        text, complete = self._string(arg, env)
        if not complete and not self.assume_html_variables:
            self._warn(line, "non-constant HTML argument; unresolved parts dropped")
        return text, complete

    def _method(self, stack: JQueryStack, name: str, call: Call, env: dict[str, Value]) -> Value:
        g = stack.top
        if name in self.plugins:
            return self._expand_plugin(stack, self.plugins[name], call, env)
        kind = JQUERY_FUNCTIONS.get(name)
        if kind is None:
            self._args(call.args, env)
            if name not in IGNORED_FUNCTIONS:
                self._warn(call.line, f"unsupported jQuery function {name}(); rest of the chain uses true")
            return None
        args = call.args
        match kind:
            case JQueryKind.KEEP:
                self._args(args, env)
                return stack
            case JQueryKind.PUSH_TOP:
                self._args(args, env)
                return stack.push(g)
            case JQueryKind.END:
                if len(stack.guards) < 2:
                    self._warn(call.line, "end() on a single selection")
                    return None
                return JQueryStack(stack.guards[:-1])
            case JQueryKind.ADD_BACK:
                if len(stack.guards) < 2:
                    return stack
                return JQueryStack((*stack.guards[:-2], Or(g, stack.guards[-2])))
            case JQueryKind.ADD_CLASS:
                self._add_class(g, args, env, call.line)
                return stack
            case JQueryKind.TRAVERSE:
                return stack.push(self._traverse(name, g, args, env, call.line))
            case JQueryKind.FRAGMENT:
                text, complete = self._html_argument(args[0] if args else None, env, call.line)
                if not complete and self.assume_html_variables:
                    self.rules.extend(coarse_fragment_rules(g, self.known_classes, self.names))
                    self._warn(call.line, "variable HTML argument; adding coarse child rules")
                elif text.strip():
                    self.rules.extend(fragment_to_rules(text, g, self.names))
                return stack
            case JQueryKind.HANDLER | JQueryKind.AJAX:
                self._handlers(args, env, stack)
                return stack
            case JQueryKind.EACH:
                for value in self._resolve_functions(args, env):
                    self.run_function(value, env, stack, (None, stack))
                return stack
            case JQueryKind.HOVER:
                for value in self._resolve_functions(args, env):
                    self.run_function(value, env, stack, (stack,))
                return stack
            case JQueryKind.ON:
                target = stack
                if len(args) > 1 and isinstance(args[1], Str):
                    target = stack.push(_both(self._selector(args[1].value, call.line), up_plus(g)))
                self._handlers(args, env, target)
                return stack
        return None

    def _resolve_functions(self, args: tuple[Expr, ...], env: dict[str, Value]) -> list[Func]:
        funcs: list[Func] = []
        for arg in args:
            if isinstance(arg, Func):
                funcs.append(arg)
            elif isinstance(arg, ObjectLit):
                funcs.extend(self._resolve_functions(arg.values, env))
            elif isinstance(arg, Name) and isinstance(env.get(arg.id), FuncValue):
                value = env[arg.id]
                if isinstance(value, FuncValue):
                    funcs.append(value.func)
            else:
                self.eval(arg, env)
        return funcs

    def _handlers(self, args: tuple[Expr, ...], env: dict[str, Value], this: JQueryStack) -> None:
        for func in self._resolve_functions(args, env):
            self.run_function(func, env, this)

    def _add_class(self, g: Guard, args: tuple[Expr, ...], env: dict[str, Value], line: int) -> None:
        text, complete = self._string(args[0], env) if args else ("", False)
        if args and isinstance(args[0], Func):
            complete = False
        if complete:
            classes = frozenset(f".{c}" for c in text.split())
        else:
            classes = frozenset(c for c in self.known_classes if c.startswith("."))
            self._warn(line, "non-constant addClass() argument; adding every known class")
        if classes:
            self.rules.append(RewriteRule(self.names.rule(), g, AddClass(classes)))

    def _traverse(self, name: str, g: Guard, args: tuple[Expr, ...], env: dict[str, Value], line: int) -> Guard:
        extra: Guard = TRUE
        if args:
            value = self.eval(args[0], env)
            if isinstance(value, StrValue) and value.complete:
                extra = self._selector(value.text, line)
            else:
                self._warn(line, f"non-constant selector in {name}(); using true")
        match name:
            case "children":
                return _both(extra, Modal(Direction.UP, g))
            case "closest":
                return _both(extra, Modal(Direction.DOWN_STAR, g))
            case "find":
                return _both(extra, up_plus(g))
            case "has":
                return g if isinstance(extra, Top) else And(g, down_plus(extra))
            case "parent":
                return _both(extra, Modal(Direction.DOWN, g))
            case "parents":
                return _both(extra, down_plus(g))
        # next, nextAll, prev, prevAll
        return _both(extra, Modal(Direction.UP, Modal(Direction.DOWN, g)))

    def _expand_plugin(self, stack: JQueryStack, func: Func, call: Call, env: dict[str, Value]) -> Value:
        values = self._args(call.args, env)
        forgotten = _assigns(Block(func.body), frozenset(func.params))
        bound = tuple(
            None if p in forgotten or i >= len(values) else values[i] for i, p in enumerate(func.params)
        )
        self.run_function(func, env, stack, bound)
        return stack


def dedupe_rules(rules: list[RewriteRule]) -> list[RewriteRule]:
    """Drop rules whose guard and operation repeat an earlier rule."""
    seen: set[tuple[Guard, object]] = set()
    out: list[RewriteRule] = []
    for r in rules:
        key = (r.guard, r.op)
        if key not in seen:
            seen.add(key)
            out.append(r)
    return out


def extract_rules_from_scripts(
    doc: DomDocument,
    known_classes: frozenset[str] = frozenset(),
    assume_html_variables: bool = False,
    names: FreshNames | None = None,
) -> tuple[list[RewriteRule], list[str]]:
    """Rules and warnings for every script of ``doc``."""
    translator = ScriptTranslator(known_classes or doc.classes(), assume_html_variables, names)
    rules = dedupe_rules(translator.translate(doc.scripts))
    _LOGGER.debug(f"{doc.source}: {len(rules)} rules from {len(doc.scripts)} scripts")
    return rules, translator.warnings
