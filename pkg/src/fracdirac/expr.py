"""Tiny arithmetic expression language for potentials and kernels.

Grammar (lowest to highest precedence)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?          # right associative
    atom   := NUMBER | NAME | NAME "(" expr ("," expr)* ")" | "(" expr ")"

Names are the variables ``x``, ``t``, ``alpha``, the constant ``pi`` and the
functions ``sin cos exp sqrt abs pow``.  Evaluation broadcasts over numpy
arrays so a whole grid can be sampled in one call.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EvaluationError",
    "Expression",
    "ExpressionError",
    "ParseError",
    "UnknownIdentifierError",
    "parse",
]


class ExpressionError(ValueError):
    pass


class ParseError(ExpressionError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ParseError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r}", offset)
        self.name = name


class EvaluationError(ExpressionError):
    pass


VARIABLES = ("x", "t", "alpha")
CONSTANTS = {"pi": math.pi}
FUNCTIONS = {
    "sin": (1, np.sin),
    "cos": (1, np.cos),
    "exp": (1, np.exp),
    "sqrt": (1, np.sqrt),
    "abs": (1, np.abs),
    "pow": (2, np.power),
}

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


# -- parse tree -------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
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


_BINARY = {"+": np.add, "-": np.subtract, "*": np.multiply, "/": np.divide, "^": np.power}


def _tokenize(source: str):
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", _byte_offset(source, pos))
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), _byte_offset(source, pos)))
        pos = m.end()
    tokens.append(("end", "", _byte_offset(source, len(source))))
    return tokens


def _byte_offset(source: str, index: int) -> int:
    return len(source[:index].encode("utf-8"))


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, value, offset = self.take()
        if value != text or kind == "end":
            found = "end of input" if kind == "end" else repr(value)
            raise ParseError(f"expected {text!r}, found {found}", offset)

    def parse(self):
        node = self.expr()
        kind, value, offset = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {value!r}", offset)
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
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, value, offset = self.take()
        if kind == "num":
            return Num(float(value))
        if kind == "name":
            if value in FUNCTIONS:
                arity = FUNCTIONS[value][0]
                self.expect("(")
                args = [self.expr()]
                while self.peek()[:2] == ("op", ","):
                    self.take()
                    args.append(self.expr())
                close = self.peek()
                self.expect(")")
                if len(args) != arity:
                    raise ParseError(
                        f"{value}() takes {arity} argument(s), got {len(args)}", close[2]
                    )
                return Call(value, tuple(args))
            if value in VARIABLES or value in CONSTANTS:
                return Var(value)
            raise UnknownIdentifierError(value, offset)
        if (kind, value) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(value)
        raise ParseError(f"unexpected {found}", offset)


def _eval(node, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        if node.name in CONSTANTS:
            return CONSTANTS[node.name]
        value = env.get(node.name)
        if value is None:
            raise EvaluationError(f"variable {node.name!r} is not bound")
        return value
    if isinstance(node, Neg):
        return np.negative(_eval(node.operand, env))
    if isinstance(node, BinOp):
        return _BINARY[node.op](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, Call):
        return FUNCTIONS[node.func][1](*(_eval(a, env) for a in node.args))
    raise TypeError(f"bad node {node!r}")


def _render(node, parent_prec=0, right=False):
    # precedence: + - : 1, * / : 2, unary : 3, ^ : 4, atoms : 5
    if isinstance(node, Num):
        text = repr(node.value)
        return f"({text})" if node.value < 0 else text
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({', '.join(_render(a) for a in node.args)})"
    if isinstance(node, Neg):
        text = "-" + _render(node.operand, 3)
        return f"({text})" if parent_prec >= 3 else text
    prec = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}[node.op]
    if node.op == "^":
        text = f"{_render(node.left, 5)}^{_render(node.right, 3)}"
    else:
        text = f"{_render(node.left, prec)} {node.op} {_render(node.right, prec + 1)}"
    return f"({text})" if prec < parent_prec else text


def _names(node, acc):
    if isinstance(node, Var):
        acc.add(node.name)
    elif isinstance(node, Neg):
        _names(node.operand, acc)
    elif isinstance(node, BinOp):
        _names(node.left, acc)
        _names(node.right, acc)
    elif isinstance(node, Call):
        for a in node.args:
            _names(a, acc)
    return acc


class Expression:
    """A parsed expression. Immutable; evaluation is pure."""

    __slots__ = ("source", "tree", "variables")

    def __init__(self, source: str, tree):
        self.source = source
        self.tree = tree
        self.variables = frozenset(_names(tree, set()) - set(CONSTANTS))

    def __repr__(self):
        return f"Expression({self.source!r})"

    def __eq__(self, other):
        return isinstance(other, Expression) and self.tree == other.tree

    def __hash__(self):
        return hash(self.tree)

    @property
    def is_zero(self) -> bool:
        return isinstance(self.tree, Num) and self.tree.value == 0.0

    def render(self) -> str:
        return _render(self.tree)

    def evaluate(self, x=None, t=None, alpha=None):
        """Vectorised evaluation; returns a float or an ndarray.

        Raises :class:`EvaluationError` when any result is not finite.
        """
        env = {"x": x, "t": t, "alpha": alpha}
        with np.errstate(all="ignore"):
            out = _eval(self.tree, env)
            if isinstance(out, float) and any(
                np.ndim(v) > 0 for v in (x, t) if v is not None
            ):
                shape = np.broadcast_shapes(*(np.shape(v) for v in (x, t) if v is not None))
                out = np.full(shape, out)
        out = np.asarray(out, dtype=float)
        if not np.all(np.isfinite(out)):
            raise EvaluationError(f"non-finite value evaluating {self.source!r}")
        return float(out) if out.ndim == 0 else out

    def __call__(self, x=None, t=None, alpha=None):
        return self.evaluate(x, t, alpha)


def parse(source: str) -> Expression:
    if not isinstance(source, str) or not source.strip():
        raise ParseError("empty expression", 0)
    return Expression(source, _Parser(source).parse())


def eval_expr(e: Expression, x: float, t: float = 0.0, alpha: float | None = None) -> float:
    """Scalar evaluation at ``(x, t)``."""
    return float(e.evaluate(float(x), float(t), alpha))
