"""Landscape expression language.

Grammar, loosest binding first::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'

Names are ``x``, ``t``, ``pi`` and ``e``.  Functions are ``sin``, ``cos``,
``exp``, ``log``, ``abs``, ``sqrt`` (one argument) and ``gauss(center,
width)``, ``tophat(center, halfwidth)`` (two arguments).
"""

import difflib
import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import CogmoveError

VARIABLES = ("x", "t")
CONSTANTS = {"pi": math.pi, "e": math.e}
UNARY_FUNCS = ("sin", "cos", "exp", "log", "abs", "sqrt")
BINARY_FUNCS = ("gauss", "tophat")
NAMES = VARIABLES + tuple(CONSTANTS) + UNARY_FUNCS + BINARY_FUNCS


class ExpressionError(CogmoveError, ValueError):
    def __init__(self, message, offset=None, text=None):
        self.offset = offset
        self.text = text
        where = f" at offset {offset}" if offset is not None else ""
        super().__init__(f"{message}{where}")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Name:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)"
                    r"|(?P<op>[-+*/^(),]))")


def tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExpressionError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value or kind != "op":
            found = "end of input" if kind == "end" else repr(val)
            raise ExpressionError(f"expected {value!r}, found {found}", pos, self.text)

    def parse(self):
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExpressionError(f"unexpected {val!r}", pos, self.text)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                return self.call(val, pos)
            if val in VARIABLES or val in CONSTANTS:
                return Name(val)
            if val in UNARY_FUNCS or val in BINARY_FUNCS:
                raise ExpressionError(f"function {val!r} needs arguments", pos, self.text)
            raise ExpressionError(f"unknown identifier {val!r}{_suggest(val)}", pos, self.text)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExpressionError(f"unexpected {found}", pos, self.text)

    def call(self, name, pos):
        if name not in UNARY_FUNCS and name not in BINARY_FUNCS:
            raise ExpressionError(f"unknown function {name!r}{_suggest(name)}", pos, self.text)
        self.expect("(")
        args = [self.expr()]
        while self.peek()[0] == "op" and self.peek()[1] == ",":
            self.take()
            args.append(self.expr())
        self.expect(")")
        arity = 1 if name in UNARY_FUNCS else 2
        if len(args) != arity:
            raise ExpressionError(f"{name} takes {arity} argument(s), got {len(args)}", pos, self.text)
        return Call(name, tuple(args))


def _suggest(word):
    close = difflib.get_close_matches(word, NAMES, n=1)
    return f" (did you mean {close[0]!r}?)" if close else ""


def parse_expression(text):
    """Parse ``text`` into an expression tree."""
    if not isinstance(text, str):
        raise ExpressionError(f"expression must be text, got {type(text).__name__}")
    return _Parser(text).parse()


def pretty(node):
    """Fully parenthesized text that parses back to the same tree."""
    if isinstance(node, Num):
        if not (math.isfinite(node.value) and node.value >= 0):
            raise ExpressionError(f"literal {node.value!r} has no textual form")
        return repr(float(node.value))
    if isinstance(node, Name):
        return node.name
    if isinstance(node, Neg):
        return f"(-{pretty(node.operand)})"
    if isinstance(node, BinOp):
        return f"({pretty(node.left)} {node.op} {pretty(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({', '.join(pretty(a) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")


def _gauss(x, c, w):
    return np.exp(-((x - c) ** 2) / (2.0 * w**2)) / (w * math.sqrt(2.0 * math.pi))


def _tophat(x, c, hw):
    return np.where(np.abs(x - c) <= hw, 1.0 / (2.0 * hw), 0.0)


def _check_domain(name, arg):
    a = np.asarray(arg)
    if name == "log" and np.any(a <= 0):
        raise ExpressionError("log of a non-positive value")
    if name == "sqrt" and np.any(a < 0):
        raise ExpressionError("sqrt of a negative value")


_UNARY_IMPL = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "log": np.log, "abs": np.abs,
               "sqrt": np.sqrt}


def evaluate(node, x=0.0, t=0.0):
    """Evaluate a tree at ``x`` (scalar or array) and time ``t``."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Name):
        if node.name == "x":
            return x
        if node.name == "t":
            return t
        return CONSTANTS[node.name]
    if isinstance(node, Neg):
        return -evaluate(node.operand, x, t)
    if isinstance(node, BinOp):
        a = evaluate(node.left, x, t)
        b = evaluate(node.right, x, t)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if np.any(np.asarray(b) == 0):
                raise ExpressionError("division by zero")
            return a / b
        with np.errstate(all="raise"):
            try:
                return np.power(np.asarray(a, dtype=float), b)
            except FloatingPointError as exc:
                raise ExpressionError(f"invalid power: {exc}") from None
    if isinstance(node, Call):
        args = [evaluate(a, x, t) for a in node.args]
        if node.func in _UNARY_IMPL:
            _check_domain(node.func, args[0])
            return _UNARY_IMPL[node.func](args[0])
        if np.any(np.asarray(args[1]) <= 0):
            raise ExpressionError(f"{node.func} width must be positive")
        if node.func == "gauss":
            return _gauss(x, *args)
        return _tophat(x, *args)
    raise TypeError(f"not an expression node: {node!r}")


class Expression:
    """Parsed expression usable as ``f(x, t)`` returning float arrays."""

    def __init__(self, text):
        self.text = text
        self.tree = parse_expression(text)

    def __call__(self, x, t=0.0):
        x = np.asarray(x, dtype=float)
        out = evaluate(self.tree, x, t)
        return np.broadcast_to(np.asarray(out, dtype=float), x.shape).copy()

    def __repr__(self):
        return f"Expression({self.text!r})"
