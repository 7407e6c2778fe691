"""Expression trees for guards, invariants, updates and state predicates.

The concrete syntax follows the usual timed-automata tool conventions::

    x <= 5 && B_T - B_T1 > 50
    A_MC1.Increasing imply G_MC1.Increasing
    mis = (B_T > B_T1) ? mis + 1 : 0

Operators, loosest first: ``imply``, ``?:``, ``||``/``or``, ``&&``/``and``,
``!``/``not``, comparisons, ``+ -``, ``* / %``, unary ``-``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterator, Union


class ExprError(ValueError):
    """Syntax or binding error, carrying the character offset when known."""

    def __init__(self, message: str, pos: int | None = None, text: str | None = None):
        self.pos = pos
        self.text = text
        if pos is not None:
            message = f"{message} (at position {pos})"
        super().__init__(message)


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Name:
    name: str
    pos: int = -1


@dataclass(frozen=True)
class Index:
    name: str
    index: "Expr"
    pos: int = -1


@dataclass(frozen=True)
class LocAtom:
    template: str
    location: str
    pos: int = -1


@dataclass(frozen=True)
class Unary:
    op: str  # "not" | "neg"
    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Ternary:
    cond: "Expr"
    then: "Expr"
    other: "Expr"


Expr = Union[Const, Name, Index, LocAtom, Unary, Binary, Ternary]

TRUE = Const(1)
FALSE = Const(0)

COMPARISONS = ("<", "<=", "==", "!=", ">=", ">")
_FLIP = {"<": ">", "<=": ">=", "==": "==", "!=": "!=", ">=": "<=", ">": "<"}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<id>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>imply|&&|\|\||<=|>=|==|!=|[-+*/%<>!()\[\]?:.,=]))"
)
_KEYWORDS = {"and": "&&", "or": "||", "not": "!", "imply": "imply"}


def tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExprError(f"unexpected character {text[pos]!r}", pos, text)
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        val = m.group(kind)
        if kind == "id" and val in _KEYWORDS:
            kind, val = "op", _KEYWORDS[val]
        elif kind == "id" and val in ("true", "false"):
            kind = "num"
            val = "1" if val == "true" else "0"
        toks.append((kind, val, start))
        pos = m.end()
    toks.append(("eof", "", n))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.toks[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def accept(self, op: str) -> bool:
        kind, val, _ = self.peek()
        if kind == "op" and val == op:
            self.i += 1
            return True
        return False

    def expect(self, op: str) -> None:
        if not self.accept(op):
            kind, val, pos = self.peek()
            raise ExprError(f"expected {op!r}, found {val or 'end of input'!r}", pos, self.text)

    def parse(self) -> Expr:
        e = self.imply()
        kind, val, pos = self.peek()
        if kind != "eof":
            raise ExprError(f"unexpected token {val!r}", pos, self.text)
        return e

    def imply(self) -> Expr:
        left = self.ternary()
        if self.accept("imply"):
            return Binary("imply", left, self.imply())
        return left

    def ternary(self) -> Expr:
        cond = self.disj()
        if self.accept("?"):
            then = self.imply()
            self.expect(":")
            return Ternary(cond, then, self.ternary())
        return cond

    def disj(self) -> Expr:
        e = self.conj()
        while self.accept("||"):
            e = Binary("||", e, self.conj())
        return e

    def conj(self) -> Expr:
        e = self.neg()
        while self.accept("&&"):
            e = Binary("&&", e, self.neg())
        return e

    def neg(self) -> Expr:
        if self.accept("!"):
            return Unary("not", self.neg())
        return self.comparison()

    def comparison(self) -> Expr:
        e = self.additive()
        kind, val, _ = self.peek()
        if kind == "op" and val in COMPARISONS:
            self.take()
            e = Binary(val, e, self.additive())
        return e

    def additive(self) -> Expr:
        e = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in ("+", "-"):
                self.take()
                e = Binary(val, e, self.term())
            else:
                return e

    def term(self) -> Expr:
        e = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in ("*", "/", "%"):
                self.take()
                e = Binary(val, e, self.unary())
            else:
                return e

    def unary(self) -> Expr:
        if self.accept("-"):
            arg = self.unary()
            if isinstance(arg, Const):
                return Const(-arg.value)
            return Unary("neg", arg)
        return self.primary()

    def primary(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "num":
            return Const(int(val))
        if kind == "id":
            if self.accept("."):
                k2, loc, _ = self.take()
                if k2 != "id":
                    raise ExprError("expected location name after '.'", pos, self.text)
                return LocAtom(val, loc, pos)
            if self.accept("["):
                idx = self.imply()
                self.expect("]")
                return Index(val, idx, pos)
            return Name(val, pos)
        if kind == "op" and val == "(":
            e = self.imply()
            self.expect(")")
            return e
        raise ExprError(f"unexpected token {val or 'end of input'!r}", pos, self.text)


def parse_expr(text: str) -> Expr:
    """Parse an expression string into a tree."""
    return _Parser(text).parse()


def parse_updates(text: str) -> list[tuple[str, Expr]]:
    """Parse ``a = e1, b = e2`` into an ordered list of assignments."""
    if not text or not text.strip():
        return []
    out = []
    for part in _split_top(text, ","):
        m = re.match(r"\s*([A-Za-z_][A-Za-z_0-9]*)\s*=(?!=)(.*)$", part, re.S)
        if not m:
            raise ExprError(f"malformed assignment {part.strip()!r}")
        out.append((m.group(1), parse_expr(m.group(2))))
    return out


def _split_top(text: str, sep: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def walk(e: Expr) -> Iterator[Expr]:
    yield e
    if isinstance(e, Index):
        yield from walk(e.index)
    elif isinstance(e, Unary):
        yield from walk(e.arg)
    elif isinstance(e, Binary):
        yield from walk(e.left)
        yield from walk(e.right)
    elif isinstance(e, Ternary):
        yield from walk(e.cond)
        yield from walk(e.then)
        yield from walk(e.other)


def names(e: Expr) -> set[str]:
    return {n.name for n in walk(e) if isinstance(n, (Name, Index))}


def conjuncts(e: Expr) -> list[Expr]:
    if isinstance(e, Binary) and e.op == "&&":
        return conjuncts(e.left) + conjuncts(e.right)
    if isinstance(e, Const) and e.value != 0:
        return []
    return [e]


def negate(e: Expr) -> Expr:
    if isinstance(e, Unary) and e.op == "not":
        return e.arg
    return Unary("not", e)


_PREC = {"imply": 1, "?": 2, "||": 3, "&&": 4, "not": 5, "cmp": 6, "+": 7, "-": 7,
         "*": 8, "/": 8, "%": 8, "neg": 9}


def to_text(e: Expr) -> str:
    """Render an expression back to concrete syntax (round-trips through parse_expr)."""
    return _render(e, 0)


def _render(e: Expr, ctx: int) -> str:
    if isinstance(e, Const):
        s = str(e.value)
        return f"({s})" if e.value < 0 and ctx > 0 else s
    if isinstance(e, Name):
        return e.name
    if isinstance(e, Index):
        return f"{e.name}[{_render(e.index, 0)}]"
    if isinstance(e, LocAtom):
        return f"{e.template}.{e.location}"
    if isinstance(e, Unary):
        p = _PREC[e.op]
        s = ("!" if e.op == "not" else "-") + _render(e.arg, p)
    elif isinstance(e, Ternary):
        p = _PREC["?"]
        s = f"{_render(e.cond, p + 1)} ? {_render(e.then, 0)} : {_render(e.other, p)}"
    else:
        op = e.op
        p = _PREC["cmp"] if op in COMPARISONS else _PREC[op]
        if op == "imply":
            s = f"{_render(e.left, p + 1)} imply {_render(e.right, p)}"
        else:
            s = f"{_render(e.left, p)} {op} {_render(e.right, p + 1)}"
    return f"({s})" if p < ctx or (p == ctx and ctx > 0) else s


# --- compilation -----------------------------------------------------------

def cdiv(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def cmod(a: int, b: int) -> int:
    return a - b * cdiv(a, b)


class Scope:
    """Name resolution used when compiling expressions to Python closures.

    ``variables`` maps a name to its slot in the valuation tuple, ``constants``
    to an int, ``arrays`` to a tuple of ints, ``locations`` maps
    ``(template, location)`` to ``(template slot, location id)``.
    """

    def __init__(self, variables=None, constants=None, arrays=None, clocks=None,
                 locations=None):
        self.variables: dict[str, int] = dict(variables or {})
        self.constants: dict[str, int] = dict(constants or {})
        self.arrays: dict[str, tuple[int, ...]] = dict(arrays or {})
        self.clocks: dict[str, int] = dict(clocks or {})
        self.locations: dict[tuple[str, str], tuple[int, int]] = dict(locations or {})

    def child(self, variables=None, clocks=None) -> "Scope":
        s = Scope(self.variables, self.constants, self.arrays, self.clocks, self.locations)
        s.variables.update(variables or {})
        s.clocks.update(clocks or {})
        return s


_PYOP = {"&&": "and", "||": "or", "+": "+", "-": "-", "*": "*", "<": "<", "<=": "<=",
         "==": "==", "!=": "!=", ">=": ">=", ">": ">"}


def to_python(e: Expr, scope: Scope, env: dict, allow_locations: bool = False) -> str:
    """Translate to a Python expression over ``v`` (valuation) and ``l`` (locations)."""
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Name):
        if e.name in scope.variables:
            return f"v[{scope.variables[e.name]}]"
        if e.name in scope.constants:
            return str(scope.constants[e.name])
        if e.name in scope.clocks:
            raise ExprError(f"clock {e.name!r} not allowed here", e.pos)
        raise ExprError(f"unknown name {e.name!r}", e.pos)
    if isinstance(e, Index):
        if e.name not in scope.arrays:
            raise ExprError(f"unknown array {e.name!r}", e.pos)
        key = "A_" + re.sub(r"\W", "_", e.name)
        env[key] = scope.arrays[e.name]
        return f"{key}[{to_python(e.index, scope, env, allow_locations)}]"
    if isinstance(e, LocAtom):
        dotted = f"{e.template}.{e.location}"
        if dotted in scope.variables:
            return f"v[{scope.variables[dotted]}]"
        if not allow_locations:
            raise ExprError(f"location atom {e.template}.{e.location} not allowed here", e.pos)
        key = (e.template, e.location)
        if key not in scope.locations:
            raise ExprError(f"unknown location {e.template}.{e.location}", e.pos)
        slot, lid = scope.locations[key]
        return f"(l[{slot}] == {lid})"
    if isinstance(e, Unary):
        inner = to_python(e.arg, scope, env, allow_locations)
        return f"(not {inner})" if e.op == "not" else f"(-{inner})"
    if isinstance(e, Ternary):
        c = to_python(e.cond, scope, env, allow_locations)
        a = to_python(e.then, scope, env, allow_locations)
        b = to_python(e.other, scope, env, allow_locations)
        return f"({a} if {c} else {b})"
    left = to_python(e.left, scope, env, allow_locations)
    right = to_python(e.right, scope, env, allow_locations)
    if e.op == "imply":
        return f"((not {left}) or {right})"
    if e.op == "/":
        env["_cdiv"] = cdiv
        return f"_cdiv({left}, {right})"
    if e.op == "%":
        env["_cmod"] = cmod
        return f"_cmod({left}, {right})"
    return f"({left} {_PYOP[e.op]} {right})"


def compile_pred(e: Expr, scope: Scope, allow_locations: bool = False) -> Callable:
    """Compile to ``f(v, l) -> bool``."""
    env: dict = {}
    src = to_python(e, scope, env, allow_locations)
    return eval(f"lambda v, l: bool({src})", env)


def compile_value(e: Expr, scope: Scope) -> Callable:
    """Compile an integer-valued expression to ``f(v) -> int``."""
    env: dict = {}
    src = to_python(e, scope, env)
    return eval(f"lambda v: int({src})", env)


def const_eval(e: Expr, scope: Scope) -> int:
    """Evaluate an expression that may only mention constants."""
    return compile_value(e, Scope(constants=scope.constants, arrays=scope.arrays))(())


def mentions_clock(e: Expr, scope: Scope) -> bool:
    return any(isinstance(n, Name) and n.name in scope.clocks for n in walk(e))


def flip(op: str) -> str:
    return _FLIP[op]
