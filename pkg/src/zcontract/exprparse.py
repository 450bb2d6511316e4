"""Scalar expression language for metrics, maps, zeta functions and inner functions.

Grammar (lowest to highest binding)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?            # right-associative
    atom    := NUMBER | NAME | call | '(' expr ')'
    call    := NAME '(' args ')'            # min max abs exp log sqrt if
    cond    := expr CMP expr                # only as first argument of if()
    CMP     := '<' | '<=' | '>' | '>=' | '=' | '==' | '!=' | '≤' | '≥' | '≠'

``-2^2`` is ``-(2^2)`` and ``2^3^2`` is ``2^(3^2)``.  Equality inside
``if`` is exact floating equality; prefer ``<=``/``>=`` for piecewise
boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

import numpy as np

from .errors import ArityError, DomainError, ExprSyntaxError, MissingBinding, UnknownVariable

FUNCTIONS = {"min": 2, "max": 2, "abs": 1, "exp": 1, "log": 1, "sqrt": 1, "if": 3}
COMPARISONS = ("<", "<=", ">", ">=", "=", "!=")
_CMP_ALIASES = {"==": "=", "≤": "<=", "≥": ">=", "≠": "!="}


# ---------------------------------------------------------------- AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str  # min max abs exp log sqrt
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Compare:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class If:
    cond: Compare
    then: "Expr"
    otherwise: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Call, If]


def variables(e) -> frozenset[str]:
    """Names of all variables referenced by ``e``."""
    if isinstance(e, Var):
        return frozenset([e.name])
    if isinstance(e, Num):
        return frozenset()
    if isinstance(e, Neg):
        return variables(e.operand)
    if isinstance(e, (BinOp, Compare)):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Call):
        return frozenset().union(*(variables(a) for a in e.args))
    if isinstance(e, If):
        return variables(e.cond) | variables(e.then) | variables(e.otherwise)
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------- lexer


@dataclass(frozen=True)
class Token:
    kind: str  # num, name, op, end
    text: str
    pos: int


_TWO_CHAR = ("<=", ">=", "==", "!=")
_ONE_CHAR = "+-*/^(),<>=≤≥≠"


def tokenize(src: str) -> list[Token]:
    tokens = []
    i = 0
    n = len(src)
    while i < n:
        c = src[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and src[i + 1].isdigit()):
            start = i
            while i < n and src[i].isdigit():
                i += 1
            if i < n and src[i] == ".":
                i += 1
                while i < n and src[i].isdigit():
                    i += 1
            if i < n and src[i] in "eE":
                j = i + 1
                if j < n and src[j] in "+-":
                    j += 1
                if j < n and src[j].isdigit():
                    i = j
                    while i < n and src[i].isdigit():
                        i += 1
            tokens.append(Token("num", src[start:i], start))
            continue
        if c.isalpha() or c == "_":
            start = i
            while i < n and (src[i].isalnum() or src[i] == "_"):
                i += 1
            tokens.append(Token("name", src[start:i], start))
            continue
        if src[i : i + 2] in _TWO_CHAR:
            tokens.append(Token("op", src[i : i + 2], i))
            i += 2
            continue
        if c in _ONE_CHAR:
            tokens.append(Token("op", c, i))
            i += 1
            continue
        raise ExprSyntaxError(f"unexpected character {c!r}", i, "number, name, operator or parenthesis")
    tokens.append(Token("end", "", n))
    return tokens


# ---------------------------------------------------------------- parser


class _Parser:
    def __init__(self, src: str, allowed: frozenset[str]):
        self.tokens = tokenize(src)
        self.i = 0
        self.allowed = allowed

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.tok
        if t.kind != "op" or t.text != text:
            got = "end of input" if t.kind == "end" else repr(t.text)
            raise ExprSyntaxError(f"expected {text!r}, got {got}", t.pos, text)
        return self.advance()

    def parse(self):
        e = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {self.tok.text!r}", self.tok.pos, "operator or end of input")
        return e

    def expr(self):
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            left = BinOp(op, left, self.term())
        return left

    def term(self):
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            left = BinOp(op, left, self.unary())
        return left

    def unary(self):
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(float(t.text))
        if t.kind == "name":
            self.advance()
            if self.tok.kind == "op" and self.tok.text == "(":
                return self.call(t)
            if t.text in FUNCTIONS:
                raise ExprSyntaxError(f"expected '(' after {t.text!r}", self.tok.pos, "(")
            if t.text not in self.allowed:
                raise UnknownVariable(t.text, t.pos)
            return Var(t.text)
        if t.kind == "op" and t.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        got = "end of input" if t.kind == "end" else repr(t.text)
        raise ExprSyntaxError(f"expected operand, got {got}", t.pos, "number, name or '('")

    def call(self, name_tok: Token):
        name = name_tok.text
        if name not in FUNCTIONS:
            raise ExprSyntaxError(f"unknown function {name!r}", name_tok.pos, "one of " + ", ".join(FUNCTIONS))
        self.expect("(")
        args = [self.condition() if name == "if" else self.expr()]
        while self.tok.kind == "op" and self.tok.text == ",":
            self.advance()
            args.append(self.expr())
        self.expect(")")
        if len(args) != FUNCTIONS[name]:
            raise ArityError(name, FUNCTIONS[name], len(args), name_tok.pos)
        if name == "if":
            return If(args[0], args[1], args[2])
        return Call(name, tuple(args))

    def condition(self):
        left = self.expr()
        t = self.tok
        op = _CMP_ALIASES.get(t.text, t.text)
        if t.kind != "op" or op not in COMPARISONS:
            raise ExprSyntaxError("expected comparison operator", t.pos, "< <= > >= = !=")
        self.advance()
        return Compare(op, left, self.expr())


def parse(src: str, vars: Iterable[str]):
    """Parse ``src`` into an AST whose variables are drawn from ``vars``."""
    if not src or not src.strip():
        raise ExprSyntaxError("empty expression", 0, "expression")
    return _Parser(src, frozenset(vars)).parse()


# ---------------------------------------------------------------- printer

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(e) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return 3
    return 5


def to_source(e) -> str:
    """Render ``e`` with the minimum parentheses needed to reparse identically."""
    if isinstance(e, Num):
        if e.value < 0 or not math.isfinite(e.value):
            raise ValueError(f"literal {e.value!r} has no source form")
        return repr(float(e.value))
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return "-" + _wrap(e.operand, 3)
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        if e.op == "^":
            return f"{_wrap(e.left, 5)}^{_wrap(e.right, 3)}"
        return f"{_wrap(e.left, p)} {e.op} {_wrap(e.right, p + 1)}"
    if isinstance(e, Call):
        return f"{e.name}({', '.join(to_source(a) for a in e.args)})"
    if isinstance(e, If):
        c = e.cond
        return f"if({to_source(c.left)} {c.op} {to_source(c.right)}, {to_source(e.then)}, {to_source(e.otherwise)})"
    raise TypeError(f"not an expression node: {e!r}")


def _wrap(e, min_prec: int) -> str:
    s = to_source(e)
    return f"({s})" if _prec(e) < min_prec else s


# ---------------------------------------------------------------- scalar evaluation


def evaluate(e, bindings: Mapping[str, float]) -> float:
    """Evaluate ``e`` in IEEE double precision.

    Raises DomainError instead of returning NaN or an infinity.
    """
    v = _eval(e, bindings)
    return v


def _finite(v: float, what: str) -> float:
    if not math.isfinite(v):
        raise DomainError(f"{what} produced a non-finite value")
    return v


def _eval(e, b) -> float:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        try:
            return float(b[e.name])
        except KeyError:
            raise MissingBinding(f"no value bound for {e.name!r}") from None
    if isinstance(e, Neg):
        return -_eval(e.operand, b)
    if isinstance(e, BinOp):
        x = _eval(e.left, b)
        y = _eval(e.right, b)
        if e.op == "+":
            return _finite(x + y, "addition")
        if e.op == "-":
            return _finite(x - y, "subtraction")
        if e.op == "*":
            return _finite(x * y, "multiplication")
        if e.op == "/":
            if y == 0.0:
                raise DomainError(f"division by zero ({x!r}/0)", witness=(x, y))
            return _finite(x / y, "division")
        return _pow(x, y)
    if isinstance(e, Call):
        args = [_eval(a, b) for a in e.args]
        return _CALLS[e.name](*args)
    if isinstance(e, If):
        c = e.cond
        if _compare(c.op, _eval(c.left, b), _eval(c.right, b)):
            return _eval(e.then, b)
        return _eval(e.otherwise, b)
    raise TypeError(f"not an expression node: {e!r}")


def _pow(x: float, y: float) -> float:
    if x == 0.0 and y < 0:
        raise DomainError(f"0^{y!r} is undefined", witness=(x, y))
    if x < 0 and not float(y).is_integer():
        raise DomainError(f"negative base {x!r} with fractional exponent {y!r}", witness=(x, y))
    try:
        return _finite(math.pow(x, y), "power")
    except OverflowError:
        raise DomainError(f"{x!r}^{y!r} overflows", witness=(x, y)) from None


def _log(x: float) -> float:
    if x <= 0:
        raise DomainError(f"log of nonpositive value {x!r}", witness=x)
    return math.log(x)


def _sqrt(x: float) -> float:
    if x < 0:
        raise DomainError(f"sqrt of negative value {x!r}", witness=x)
    return math.sqrt(x)


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        raise DomainError(f"exp({x!r}) overflows", witness=x) from None


_CALLS = {
    "min": min,
    "max": max,
    "abs": abs,
    "exp": _exp,
    "log": _log,
    "sqrt": _sqrt,
}


def _compare(op: str, x, y):
    if op == "<":
        return x < y
    if op == "<=":
        return x <= y
    if op == ">":
        return x > y
    if op == ">=":
        return x >= y
    if op == "=":
        return x == y
    return x != y


# ---------------------------------------------------------------- array evaluation


def evaluate_array(e, bindings: Mapping[str, object]) -> np.ndarray:
    """Vectorised counterpart of :func:`evaluate` over broadcastable arrays.

    Branches of ``if`` are evaluated only on the elements that select them,
    so a guarded ``log`` or division never raises for the unselected side.
    """
    names = variables(e)
    missing = names - set(bindings)
    if missing:
        raise MissingBinding(f"no value bound for {sorted(missing)[0]!r}")
    arrays = [np.asarray(bindings[k], dtype=float) for k in sorted(names)]
    shape = np.broadcast_shapes(*(a.shape for a in arrays)) if arrays else ()
    flat = {k: np.broadcast_to(a, shape).ravel() for k, a in zip(sorted(names), arrays)}
    size = int(np.prod(shape)) if shape else 1
    with np.errstate(all="ignore"):
        out = _aeval(e, flat, size)
    return np.broadcast_to(out, (size,)).reshape(shape).copy()


def _bad(mask: np.ndarray, operands, message: str):
    k = int(np.flatnonzero(mask)[0])
    raise DomainError(message, witness=tuple(float(np.broadcast_to(o, mask.shape)[k]) for o in operands))


def _check(v: np.ndarray, what: str, *operands) -> np.ndarray:
    bad = ~np.isfinite(v)
    if bad.any():
        _bad(np.broadcast_to(bad, np.shape(v)), operands or (v,), f"{what} produced a non-finite value")
    return v


def _aeval(e, b, n) -> np.ndarray:
    if isinstance(e, Num):
        return np.full(n, e.value)
    if isinstance(e, Var):
        return b[e.name]
    if isinstance(e, Neg):
        return -_aeval(e.operand, b, n)
    if isinstance(e, BinOp):
        x = _aeval(e.left, b, n)
        y = _aeval(e.right, b, n)
        if e.op == "+":
            return _check(x + y, "addition", x, y)
        if e.op == "-":
            return _check(x - y, "subtraction", x, y)
        if e.op == "*":
            return _check(x * y, "multiplication", x, y)
        if e.op == "/":
            zero = y == 0.0
            if zero.any():
                _bad(zero, (x, y), "division by zero")
            return _check(x / y, "division", x, y)
        bad = (x == 0.0) & (y < 0)
        if bad.any():
            _bad(bad, (x, y), "0 raised to a negative power")
        bad = (x < 0) & (np.floor(y) != y)
        if bad.any():
            _bad(bad, (x, y), "negative base with fractional exponent")
        return _check(np.power(x, y), "power", x, y)
    if isinstance(e, Call):
        args = [_aeval(a, b, n) for a in e.args]
        name = e.name
        if name == "min":
            return np.minimum(*args)
        if name == "max":
            return np.maximum(*args)
        (x,) = args
        if name == "abs":
            return np.abs(x)
        if name == "exp":
            return _check(np.exp(x), "exp", x)
        if name == "log":
            bad = x <= 0
            if bad.any():
                _bad(bad, (x,), "log of nonpositive value")
            return np.log(x)
        bad = x < 0
        if bad.any():
            _bad(bad, (x,), "sqrt of negative value")
        return np.sqrt(x)
    if isinstance(e, If):
        c = e.cond
        mask = _compare(c.op, _aeval(c.left, b, n), _aeval(c.right, b, n))
        mask = np.broadcast_to(mask, (n,))
        out = np.empty(n)
        if mask.any():
            sub = {k: v[mask] for k, v in b.items()}
            out[mask] = _aeval(e.then, sub, int(mask.sum()))
        inv = ~mask
        if inv.any():
            sub = {k: v[inv] for k, v in b.items()}
            out[inv] = _aeval(e.otherwise, sub, int(inv.sum()))
        return out
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------- compiled functions


class CompiledExpr:
    """A parsed expression bound to an ordered argument list.

    Calling it with scalars goes through :func:`evaluate`; calling it with
    arrays goes through :func:`evaluate_array`.
    """

    def __init__(self, src: str, args: Iterable[str]):
        self.args = tuple(args)
        self.source = src
        self.ast = parse(src, self.args)

    def __call__(self, *values):
        if len(values) != len(self.args):
            raise TypeError(f"expected {len(self.args)} argument(s), got {len(values)}")
        if all(np.ndim(v) == 0 for v in values):
            return evaluate(self.ast, dict(zip(self.args, map(float, values))))
        return evaluate_array(self.ast, dict(zip(self.args, values)))

    def __repr__(self) -> str:
        return f"CompiledExpr({self.source!r}, args={self.args})"
