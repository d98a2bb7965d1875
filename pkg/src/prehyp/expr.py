"""Parser and evaluator for real coefficient expressions in the variables t, x.

Grammar (highest precedence first):

    power   :=  atom ('^' unary)?          # right associative
    unary   :=  '-' unary | power
    term    :=  unary (('*' | '/') unary)*
    sum     :=  term (('+' | '-') term)*
    atom    :=  number | 't' | 'x' | 'pi' | func '(' sum ')' | '(' sum ')'

Recognized functions: sin, cos, exp, tanh, sqrt.  Numbers are decimal
literals with optional exponent.  All arithmetic is 64-bit floating point;
evaluation accepts scalars or numpy arrays for t and x.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "tanh": np.tanh,
    "sqrt": np.sqrt,
}

KNOWN_IDENTIFIERS = {"t", "x", "pi"} | set(FUNCTIONS)


class ExprError(Exception):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class ExprEvalError(ExprError):
    def __init__(self, message: str, t, x):
        super().__init__(f"{message} at (t={t}, x={x})")
        self.t = t
        self.x = x


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str  # 't' or 'x'


@dataclass(frozen=True)
class Neg:
    arg: "ExprAst"


@dataclass(frozen=True)
class Bin:
    op: str  # one of + - * / ^
    left: "ExprAst"
    right: "ExprAst"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "ExprAst"


ExprAst = Union[Num, Var, Neg, Bin, Call]

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(source: str):
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            stripped = source[pos:].lstrip()
            if not stripped:
                break
            off = len(source) - len(stripped)
            raise ExprSyntaxError(f"unexpected character {stripped[0]!r}", off)
        if m.group("num") is not None:
            tokens.append(("num", float(m.group("num")), m.start("num")))
        elif m.group("ident") is not None:
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", None, len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, val, off = self.peek()
        if kind != "op" or val != op:
            raise ExprSyntaxError(f"expected {op!r}", off)
        self.next()

    def parse(self) -> ExprAst:
        ast = self.sum()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected trailing input {val!r}", off)
        return ast

    def sum(self) -> ExprAst:
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in ("+", "-"):
                self.next()
                node = Bin(val, node, self.term())
            else:
                return node

    def term(self) -> ExprAst:
        node = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in ("*", "/"):
                self.next()
                node = Bin(val, node, self.unary())
            else:
                return node

    def unary(self) -> ExprAst:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.next()
            return Neg(self.unary())
        return self.power()

    def power(self) -> ExprAst:
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.next()
            # exponent re-enters unary so '^' is right associative and
            # expressions like 2^-3 parse
            return Bin("^", base, self.unary())
        return base

    def atom(self) -> ExprAst:
        kind, val, off = self.next()
        if kind == "num":
            return Num(val)
        if kind == "ident":
            if val in ("t", "x"):
                return Var(val)
            if val == "pi":
                return Num(math.pi)
            if val in FUNCTIONS:
                self.expect_op("(")
                arg = self.sum()
                self.expect_op(")")
                return Call(val, arg)
            raise ExprSyntaxError(f"unknown identifier {val!r}", off)
        if kind == "op" and val == "(":
            node = self.sum()
            self.expect_op(")")
            return node
        raise ExprSyntaxError("expected a number, variable or '('", off)


def parse(source: str) -> ExprAst:
    """Parse an expression string into an AST."""
    return _Parser(source).parse()


def _first_bad_point(t, x, mask):
    tb = np.broadcast_to(np.asarray(t, dtype=float), mask.shape)
    xb = np.broadcast_to(np.asarray(x, dtype=float), mask.shape)
    idx = np.argwhere(mask)
    if idx.size == 0:
        return float(np.asarray(t).ravel()[0]), float(np.asarray(x).ravel()[0])
    first = tuple(idx[0])
    return float(tb[first]), float(xb[first])


def _check_finite(value, t, x, what: str):
    bad = ~np.isfinite(np.asarray(value))
    if np.any(bad):
        if np.isscalar(value) or np.asarray(value).ndim == 0:
            raise ExprEvalError(f"non-finite result from {what}", float(np.asarray(t).ravel()[0] if np.ndim(t) else t), float(np.asarray(x).ravel()[0] if np.ndim(x) else x))
        tb, xb = _first_bad_point(t, x, bad)
        raise ExprEvalError(f"non-finite result from {what}", tb, xb)
    return value


def evaluate(ast: ExprAst, t, x):
    """Evaluate an AST at (t, x); either argument may be a numpy array."""
    with np.errstate(all="ignore"):
        return _eval(ast, t, x)


def _eval(ast: ExprAst, t, x):
    if isinstance(ast, Num):
        return ast.value
    if isinstance(ast, Var):
        return t if ast.name == "t" else x
    if isinstance(ast, Neg):
        return -_eval(ast.arg, t, x)
    if isinstance(ast, Call):
        val = FUNCTIONS[ast.func](_eval(ast.arg, t, x))
        return _check_finite(val, t, x, ast.func)
    left = _eval(ast.left, t, x)
    right = _eval(ast.right, t, x)
    if ast.op == "+":
        return left + right
    if ast.op == "-":
        return left - right
    if ast.op == "*":
        return left * right
    if ast.op == "/":
        return _check_finite(np.divide(left, right), t, x, "division")
    return _check_finite(np.power(left, right), t, x, "power")


def is_constant(ast: ExprAst) -> bool:
    """True if the expression contains no variable references."""
    if isinstance(ast, Num):
        return True
    if isinstance(ast, Var):
        return False
    if isinstance(ast, Neg):
        return is_constant(ast.arg)
    if isinstance(ast, Call):
        return is_constant(ast.arg)
    return is_constant(ast.left) and is_constant(ast.right)


def uses_var(ast: ExprAst, name: str) -> bool:
    """True if the expression references the given variable."""
    if isinstance(ast, Num):
        return False
    if isinstance(ast, Var):
        return ast.name == name
    if isinstance(ast, Neg):
        return uses_var(ast.arg, name)
    if isinstance(ast, Call):
        return uses_var(ast.arg, name)
    return uses_var(ast.left, name) or uses_var(ast.right, name)


def pretty(ast: ExprAst) -> str:
    """Render an AST back to source; fully parenthesized so that
    pretty(parse(pretty(e))) == pretty(e)."""
    if isinstance(ast, Num):
        if ast.value < 0:
            return f"({ast.value!r})"
        return repr(ast.value)
    if isinstance(ast, Var):
        return ast.name
    if isinstance(ast, Neg):
        return f"(-{pretty(ast.arg)})"
    if isinstance(ast, Call):
        return f"{ast.func}({pretty(ast.arg)})"
    return f"({pretty(ast.left)}{ast.op}{pretty(ast.right)})"
