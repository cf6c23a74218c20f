"""Arithmetic expressions over chart coordinates and named parameters.

Grammar (EBNF, also in docs/grammar.md)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = ("-" | "+") unary | power ;
    power   = primary [ "^" unary ] ;
    primary = number | ident [ "(" expr ")" ] | "(" expr ")" ;

``^`` binds tighter than unary minus on its left (``-x^2 == -(x^2)``) and is
right-associative (``2^3^2 == 2^(3^2)``).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from . import jets

FUNCTIONS = {
    "sin": jets.sin,
    "cos": jets.cos,
    "tan": jets.tan,
    "sinh": jets.sinh,
    "cosh": jets.cosh,
    "exp": jets.exp,
    "log": jets.log,
    "sqrt": jets.sqrt,
    "abs": jets.fabs,
}

CONSTANTS = {"pi": math.pi}


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int, text: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.text = text


class UnknownIdentifierError(ExprError):
    def __init__(self, name: str):
        super().__init__(f"unknown identifier '{name}'")
        self.name = name


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Sym:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Node"


Node = Union[Num, Sym, Neg, BinOp, Call]

_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>\*\*|[-+*/^()]))")


def _tokenize(text: str):
    pos = 0
    out = []
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        tok = m.group(kind)
        start = m.start(kind)
        if tok == "**":
            tok = "^"
        out.append((kind, tok, start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, msg):
        raise ExprSyntaxError(msg, self.peek()[2], self.text)

    def expect(self, op):
        kind, tok, _ = self.peek()
        if kind != "op" or tok != op:
            self.fail(f"expected '{op}'" if kind != "end" else f"expected '{op}' before end of input")
        self.take()

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        kind, tok, _ = self.peek()
        if kind == "op" and tok == "-":
            self.take()
            return Neg(self.unary())
        if kind == "op" and tok == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def primary(self) -> Node:
        kind, tok, _ = self.peek()
        if kind == "num":
            self.take()
            return Num(float(tok))
        if kind == "id":
            self.take()
            if self.peek()[0] == "op" and self.peek()[1] == "(":
                if tok not in FUNCTIONS:
                    raise UnknownIdentifierError(tok)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(tok, arg)
            return Sym(tok)
        if kind == "op" and tok == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            self.fail("unexpected end of input")
        self.fail(f"unexpected token {tok!r}")


def parse_tree(text: str) -> Node:
    """Parse ``text`` to a bare tree without resolving identifiers."""
    p = _Parser(text)
    node = p.expr()
    if p.peek()[0] != "end":
        p.fail(f"unexpected token {p.peek()[1]!r}")
    return node


def symbols(node: Node) -> set[str]:
    if isinstance(node, Sym):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, Neg):
        return symbols(node.arg)
    if isinstance(node, Call):
        return symbols(node.arg)
    return symbols(node.left) | symbols(node.right)


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def to_text(node: Node) -> str:
    """Print a tree so that parsing the output returns an equal tree."""
    return _emit(node, 0)


def _emit(node: Node, ctx: int) -> str:
    if isinstance(node, Num):
        s = repr(float(node.value))
        if s in ("inf", "nan"):
            raise ExprError("non-finite literal cannot be printed")
        return s
    if isinstance(node, Sym):
        return node.name
    if isinstance(node, Call):
        return f"{node.fn}({_emit(node.arg, 0)})"
    if isinstance(node, Neg):
        s = "-" + _emit(node.arg, 3)
        return f"({s})" if ctx > 3 else s
    prec = _PREC[node.op]
    if node.op == "^":
        left = _emit(node.left, 5)
        right = _emit(node.right, 3)
    else:
        left = _emit(node.left, prec)
        right = _emit(node.right, prec + 1)
    s = f"{left} {node.op} {right}" if node.op in "+-" else f"{left}{node.op}{right}"
    return f"({s})" if prec < ctx else s


def evaluate(node: Node, env: Mapping[str, object]):
    """Evaluate on floats, arrays or jets; ``env`` maps every free symbol."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Sym):
        try:
            return env[node.name]
        except KeyError:
            raise UnknownIdentifierError(node.name) from None
    if isinstance(node, Neg):
        return -evaluate(node.arg, env)
    if isinstance(node, Call):
        return FUNCTIONS[node.fn](evaluate(node.arg, env))
    a = evaluate(node.left, env)
    b = evaluate(node.right, env)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        return a / b
    if isinstance(b, jets.Jet):
        return jets.power(a, b)
    if isinstance(a, jets.Jet):
        return jets.power(a, b)
    return np.power(float(a), float(b)) if np.ndim(a) == 0 and np.ndim(b) == 0 else np.power(a, b)


@dataclass(frozen=True)
class Expr:
    """A parsed expression with its parameter bindings and allowed variables."""

    tree: Node
    params: tuple  # sorted (name, value) pairs
    variables: tuple

    @property
    def text(self) -> str:
        return to_text(self.tree)

    def __call__(self, env: Mapping[str, object] | None = None, **kw):
        full = dict(CONSTANTS)
        full.update(dict(self.params))
        if env:
            full.update(env)
        full.update(kw)
        return evaluate(self.tree, full)

    def bind(self, values):
        """Evaluate with the declared variables taken positionally from ``values``."""
        env = dict(CONSTANTS)
        env.update(dict(self.params))
        for name, v in zip(self.variables, values):
            env[name] = v
        return evaluate(self.tree, env)

    def is_constant(self) -> bool:
        return not (symbols(self.tree) & set(self.variables))


def parse_expr(text: str, params: Mapping[str, float] | None = None, variables=None) -> Expr:
    """Parse ``text`` and check that every identifier is a variable, parameter or constant.

    When ``variables`` is ``None`` every identifier that is not a parameter or
    constant becomes a variable, in order of first appearance.
    """
    params = dict(params or {})
    tree = parse_tree(text)
    known = set(params) | set(CONSTANTS)
    if variables is None:
        seen = []
        for name in _ordered_symbols(tree):
            if name not in known and name not in seen:
                seen.append(name)
        variables = tuple(seen)
    else:
        variables = tuple(variables)
        for name in _ordered_symbols(tree):
            if name not in known and name not in variables:
                raise UnknownIdentifierError(name)
    used = symbols(tree)
    bound = tuple(sorted((k, float(v)) for k, v in params.items() if k in used and k not in variables))
    return Expr(tree, bound, variables)


def _ordered_symbols(node: Node):
    if isinstance(node, Sym):
        yield node.name
    elif isinstance(node, (Neg, Call)):
        yield from _ordered_symbols(node.arg)
    elif isinstance(node, BinOp):
        yield from _ordered_symbols(node.left)
        yield from _ordered_symbols(node.right)
