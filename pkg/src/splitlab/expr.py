"""
A tiny arithmetic expression language for scenario files.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative
    atom   := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'

Names are the variables ``t, x, y, u`` and the constant ``pi``; functions
are ``sin, cos, exp, sqrt, abs``. Expressions compile to numpy-vectorised
callables.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import EvaluationError, ExprNameError, ExprParseError

__all__ = [
    "Num", "Var", "Const", "Neg", "BinOp", "Call",
    "parse_expr", "pretty", "variables", "evaluate", "Expression",
    "VARIABLES", "FUNCTIONS",
]

VARIABLES = ("t", "x", "y", "u")
FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt, "abs": np.abs}
CONSTANTS = {"pi": np.pi}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Const, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(src: str):
    pos, toks = 0, []
    end = len(src.rstrip())
    while pos < end:
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            off = pos + len(src[pos:]) - len(src[pos:].lstrip())
            raise ExprParseError(f"unexpected character {src[off]!r}", off,
                                 {"number", "name", "operator"})
        kind = m.lastgroup
        toks.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(("end", "", len(src)))
    return toks


class _Parser:
    def __init__(self, src: str):
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, off = self.peek()
        if text != value or kind == "end":
            raise ExprParseError(f"expected {value!r}, found {text or 'end of input'!r}",
                                 off, {value})
        self.take()

    def parse(self) -> Node:
        node = self.expr()
        kind, text, off = self.peek()
        if kind != "end":
            raise ExprParseError(f"unexpected {text!r}", off,
                                 {"+", "-", "*", "/", "^", "end of input"})
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
        kind, text, off = self.take()
        if kind == "num":
            value = float(text)
            if not np.isfinite(value):
                raise ExprParseError(f"numeric literal {text!r} overflows", off, {"number"})
            return Num(value)
        if kind == "name":
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            if text in CONSTANTS:
                return Const(text)
            if text in VARIABLES:
                return Var(text)
            raise ExprNameError(f"unknown identifier {text!r} at offset {off}", text)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ExprParseError(f"unexpected {text or 'end of input'!r}", off,
                             {"number", "name", "(", "-"})


def parse_expr(src: str) -> Node:
    """Parse ``src`` into an expression tree.

    Raises
    ------
    ExprParseError
        On a syntax error; carries the offset and the expected tokens.
    ExprNameError
        On an identifier that is neither a variable, constant nor function.
    """
    return _Parser(src).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    return 5


def _num_text(v: float) -> str:
    text = repr(float(v))
    return text[:-2] if text.endswith(".0") else text


def pretty(node: Node) -> str:
    """Render ``node`` with the minimum parentheses that preserve its structure."""
    if isinstance(node, Num):
        return _num_text(node.value)
    if isinstance(node, (Var, Const)):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({pretty(node.arg)})"
    if isinstance(node, Neg):
        inner = pretty(node.operand)
        return f"-({inner})" if _prec(node.operand) < 3 else f"-{inner}"
    p = _PREC[node.op]
    left, right = pretty(node.left), pretty(node.right)
    if node.op == "^":
        if _prec(node.left) <= 4:
            left = f"({left})"
        if _prec(node.right) < 3:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    if node.op in "+-":
        return f"{left} {node.op} {right}"
    return f"{left}{node.op}{right}"


def variables(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Neg):
        return variables(node.operand)
    if isinstance(node, BinOp):
        return variables(node.left) | variables(node.right)
    if isinstance(node, Call):
        return variables(node.arg)
    return set()


def _compile(node: Node) -> Callable[[dict], object]:
    if isinstance(node, Num):
        v = node.value
        return lambda env: v
    if isinstance(node, Const):
        v = CONSTANTS[node.name]
        return lambda env: v
    if isinstance(node, Var):
        name = node.name
        return lambda env: env[name]
    if isinstance(node, Neg):
        inner = _compile(node.operand)
        return lambda env: -inner(env)
    if isinstance(node, Call):
        fn, arg = FUNCTIONS[node.func], _compile(node.arg)
        return lambda env: fn(arg(env))
    left, right = _compile(node.left), _compile(node.right)
    if node.op == "+":
        return lambda env: left(env) + right(env)
    if node.op == "-":
        return lambda env: left(env) - right(env)
    if node.op == "*":
        return lambda env: left(env) * right(env)
    if node.op == "^":
        return lambda env: np.power(left(env), right(env))

    def divide(env):
        den = right(env)
        if np.any(np.asarray(den) == 0):
            raise EvaluationError("division by zero in expression")
        return left(env) / den

    return divide


def evaluate(node: Node, **env) -> object:
    """Evaluate ``node`` with variables bound to floats or numpy arrays."""
    missing = variables(node) - env.keys()
    if missing:
        raise ExprNameError(f"unbound variable(s) {sorted(missing)}", sorted(missing)[0])
    with np.errstate(all="ignore"):
        return _compile(node)(env)


class Expression:
    """A parsed expression bound to a fixed argument order.

    Calling ``Expression("x*(1-x)", ("x",))(xs)`` evaluates over ``xs``.
    Pickles by source text, so scenarios built from files can cross process
    boundaries.

    Parameters
    ----------
    source : str
    args : tuple of str
        Positional argument names; referencing any other variable raises
        :class:`~splitlab.errors.ExprNameError`.
    """

    def __init__(self, source: str, args: tuple[str, ...]):
        self.source = source
        self.args = tuple(args)
        self.tree = parse_expr(source)
        extra = variables(self.tree) - set(self.args)
        if extra:
            name = sorted(extra)[0]
            raise ExprNameError(
                f"{source!r} references {name!r}; allowed here: {', '.join(self.args) or 'none'}",
                name,
            )
        self._fn = _compile(self.tree)

    def __call__(self, *values):
        env = dict(zip(self.args, values))
        with np.errstate(all="ignore"):
            return self._fn(env)

    def __getstate__(self):
        return {"source": self.source, "args": self.args}

    def __setstate__(self, state):
        self.__init__(state["source"], state["args"])

    def __repr__(self):
        return f"Expression({self.source!r}, args={self.args})"

    def canonical(self) -> str:
        return pretty(self.tree)
