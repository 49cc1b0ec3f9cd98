"""Small expression language for conformal factors.

Grammar (unary minus binds looser than ``^``, which is right-associative)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := primary ('^' unary)?
    primary := number | ident | func '(' expr ')' | '(' expr ')'
    func    := exp | ln | sqrt | abs
    ident   := x1 .. x20 | pi | e

Expressions evaluate either on float arrays (vectorized values) or on
``Jet`` variables (value, gradient, Hessian).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParseError
from .jet import Jet

MAX_VARS = 20
FUNCTIONS = ("exp", "ln", "sqrt", "abs")
CONSTANTS = {"pi": math.pi, "e": math.e}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 0-based


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(src: str):
    pos = 0
    tokens = []
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            j = pos
            while j < len(src) and src[j].isspace():
                j += 1
            raise ParseError(f"unexpected character {src[j]!r}", j, src)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str, n: int):
        self.src = src
        self.n = n
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, val, pos = self.take()
        if val != text:
            raise ParseError(f"expected {text!r}, found {val or 'end of input'!r}", pos, self.src)

    def parse(self):
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos, self.src)
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
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Neg(self.unary())
        if kind == "op" and val == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return Pow(base, self.unary())
        return base

    def primary(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "id":
            if val in FUNCTIONS:
                if self.peek()[1] != "(":
                    raise ParseError(f"function {val!r} needs an argument in parentheses", self.peek()[2], self.src)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if val in CONSTANTS:
                return Num(CONSTANTS[val])
            m = re.fullmatch(r"x(\d+)", val)
            if m:
                idx = int(m.group(1))
                if idx < 1 or idx > min(self.n, MAX_VARS):
                    raise ParseError(f"variable {val} outside x1..x{min(self.n, MAX_VARS)}", pos, self.src)
                return Var(idx - 1)
            raise ParseError(f"unknown identifier {val!r}", pos, self.src)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ParseError(f"unexpected {val or 'end of input'!r}", pos, self.src)


def parse(src: str, n: int):
    """Parse ``src`` into an AST over variables x1..xn."""
    if not 1 <= n <= MAX_VARS:
        raise DomainError(f"dimension {n} outside 1..{MAX_VARS}")
    return _Parser(src, n).parse()


def _integer_literal(node):
    """The integer value of a literal exponent such as 2 or -3, else None."""
    sign = 1
    while isinstance(node, Neg):
        sign = -sign
        node = node.arg
    if isinstance(node, Num) and float(node.value).is_integer():
        return sign * int(node.value)
    return None


def _fn(name, v):
    if isinstance(v, Jet):
        return getattr(v, "log" if name == "ln" else name)()
    a = np.asarray(v, dtype=float)
    if name == "exp":
        return np.exp(a)
    if name == "abs":
        return np.abs(a)
    if name == "ln":
        if np.any(a <= 0):
            raise DomainError("ln of non-positive value")
        return np.log(a)
    if np.any(a < 0):
        raise DomainError("sqrt of negative value")
    return np.sqrt(a)


def _pow(base, exponent_node, exponent):
    p = _integer_literal(exponent_node)
    if p is not None:
        if isinstance(base, Jet):
            return base.powi(p)
        b = np.asarray(base, dtype=float)
        if p < 0 and np.any(b == 0):
            raise DomainError("zero raised to a negative power")
        return b ** float(p)
    if isinstance(base, Jet):
        if isinstance(exponent, Jet):
            return base ** exponent
        return base.powr(float(exponent))
    b = np.asarray(base, dtype=float)
    if np.any(b <= 0):
        raise DomainError("non-integer power of non-positive base")
    if isinstance(exponent, Jet):
        return (exponent * float(np.log(b))).exp()
    return np.exp(np.asarray(exponent, dtype=float) * np.log(b))


def evaluate(node, env):
    """Evaluate an AST; ``env[i]`` is variable x_{i+1} (float array or Jet)."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return env[node.index]
    if isinstance(node, Neg):
        return -evaluate(node.arg, env)
    if isinstance(node, BinOp):
        a = evaluate(node.left, env)
        b = evaluate(node.right, env)
        if node.op == "+":
            return a + b if isinstance(a, Jet) or not isinstance(b, Jet) else b + a
        if node.op == "-":
            return a - b if isinstance(a, Jet) or not isinstance(b, Jet) else (-b) + a
        if node.op == "*":
            return a * b if isinstance(a, Jet) or not isinstance(b, Jet) else b * a
        if isinstance(b, Jet):
            return b.reciprocal() * a
        if np.any(np.asarray(b) == 0):
            raise DomainError("division by zero")
        return a / b
    if isinstance(node, Pow):
        base = evaluate(node.base, env)
        exponent = None if _integer_literal(node.exponent) is not None else evaluate(node.exponent, env)
        return _pow(base, node.exponent, exponent)
    if isinstance(node, Call):
        return _fn(node.func, evaluate(node.arg, env))
    raise TypeError(f"unknown node {node!r}")


def to_source(node) -> str:
    """Render an AST back to parseable text (fully parenthesized)."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return f"x{node.index + 1}"
    if isinstance(node, Neg):
        return f"(-{to_source(node.arg)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Pow):
        return f"({to_source(node.base)}^{to_source(node.exponent)})"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    raise TypeError(node)
