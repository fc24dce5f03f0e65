"""A small expression language for kernels, boundary curves and right-hand sides.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right associative
    atom   := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

so ``-r^2`` is ``-(r^2)`` and ``2^-1`` is ``2^(-1)``.  There is no implicit
multiplication.  Evaluation is generic over an arithmetic backend.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Any, Mapping, Union

FUNCTIONS = {
    "exp": 1,
    "sin": 1,
    "cos": 1,
    "tan": 1,
    "asin": 1,
    "acos": 1,
    "atan": 1,
    "sqrt": 1,
    "log": 1,
    "abs": 1,
    "pow": 2,
}
CONSTANTS = {"pi": math.pi, "e": math.e}

#: integer powers up to this exponent are expanded into repeated products
MAX_EXPANDED_POWER = 8


class ParseError(ValueError):
    def __init__(self, text: str, position: int, expected: str, found: str) -> None:
        self.text = text
        self.position = position
        self.expected = expected
        self.found = found
        super().__init__(f"at position {position}: expected {expected}, found {found}")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: Expr


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple[Expr, ...]


Expr = Union[Num, Const, Var, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = text[pos:].lstrip()
            start = len(text) - len(bad)
            raise ParseError(text, start, "a number, name or operator", repr(bad[0]))
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, allowed_vars: frozenset[str]) -> None:
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.allowed = allowed_vars

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected: str) -> ParseError:
        kind, text, pos = self.peek()
        found = "end of input" if kind == "end" else repr(text)
        return ParseError(self.text, pos, expected, found)

    def expect(self, op: str) -> None:
        kind, text, _ = self.peek()
        if kind != "op" or text != op:
            raise self.fail(repr(op))
        self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        if self.peek()[0] != "end":
            raise self.fail("an operator or end of input")
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, text, pos = self.peek()
        if kind == "num":
            self.advance()
            return Num(float(text))
        if kind == "name":
            self.advance()
            if self.peek()[:2] == ("op", "("):
                if text not in FUNCTIONS:
                    raise ParseError(self.text, pos, "a known function", repr(text))
                self.advance()
                args = [self.expr()]
                while self.peek()[:2] == ("op", ","):
                    self.advance()
                    args.append(self.expr())
                arity = FUNCTIONS[text]
                if len(args) != arity:
                    raise ParseError(
                        self.text, pos, f"{arity} argument(s) for {text}", f"{len(args)} argument(s)"
                    )
                self.expect(")")
                return Call(text, tuple(args))
            if text in FUNCTIONS:
                raise self.fail(f"'(' after {text}")
            if text in CONSTANTS:
                return Const(text)
            if text in self.allowed:
                return Var(text)
            allowed = ", ".join(sorted(self.allowed)) or "none"
            raise ParseError(self.text, pos, f"a variable ({allowed})", repr(text))
        if kind == "op" and text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        raise self.fail("a number, name or '('")


def parse(text: str, allowed_vars: frozenset[str] | set[str] | tuple[str, ...] = ()) -> Expr:
    """Parse ``text``; identifiers outside ``allowed_vars`` are rejected."""
    return _Parser(text, frozenset(allowed_vars)).parse()


def variables(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Neg):
        return variables(e.operand)
    if isinstance(e, BinOp):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Call):
        return set().union(*(variables(a) for a in e.args))
    return set()


def node_count(e: Expr) -> int:
    if isinstance(e, Neg):
        return 1 + node_count(e.operand)
    if isinstance(e, BinOp):
        return 1 + node_count(e.left) + node_count(e.right)
    if isinstance(e, Call):
        return 1 + sum(node_count(a) for a in e.args)
    return 1


# --------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_UNARY_PREC = 3
_POW_PREC = 4
_ATOM_PREC = 5


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _POW_PREC if e.op == "^" else _PREC[e.op]
    if isinstance(e, Neg):
        return _UNARY_PREC
    return _ATOM_PREC


def _wrap(e: Expr, needs: bool) -> str:
    s = to_text(e)
    return f"({s})" if needs else s


def to_text(e: Expr) -> str:
    """Render ``e`` with the fewest parentheses that reparse to the same tree."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, (Const, Var)):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({', '.join(to_text(a) for a in e.args)})"
    if isinstance(e, Neg):
        return "-" + _wrap(e.operand, _prec(e.operand) < _UNARY_PREC)
    if e.op == "^":
        left = _wrap(e.left, _prec(e.left) < _ATOM_PREC)
        right = _wrap(e.right, _prec(e.right) < _UNARY_PREC)
        return f"{left}^{right}"
    p = _PREC[e.op]
    left = _wrap(e.left, _prec(e.left) < p)
    right = _wrap(e.right, _prec(e.right) <= p)
    return f"{left} {e.op} {right}"


# --------------------------------------------------------------------------
# evaluation


def _small_int(e: Expr) -> int | None:
    if isinstance(e, Num) and e.value.is_integer() and 0 <= e.value <= MAX_EXPANDED_POWER:
        return int(e.value)
    return None


def power_by_products(base: Any, k: int, backend: Any) -> Any:
    """``base**k`` as ``k - 1`` successive multiplications (``base**0`` is 1)."""
    if k == 0:
        return backend.lift(1.0)
    acc = base
    for _ in range(k - 1):
        acc = backend.mul(acc, base)
    return acc


def evaluate(e: Expr, bindings: Mapping[str, Any], backend: Any) -> Any:
    """Evaluate ``e`` with every node routed through ``backend``."""
    if isinstance(e, Num):
        return backend.lift(e.value)
    if isinstance(e, Const):
        return backend.lift(CONSTANTS[e.name])
    if isinstance(e, Var):
        try:
            return bindings[e.name]
        except KeyError:
            raise KeyError(f"unbound variable {e.name!r}") from None
    if isinstance(e, Neg):
        return backend.neg(evaluate(e.operand, bindings, backend))
    if isinstance(e, Call):
        args = [evaluate(a, bindings, backend) for a in e.args]
        if e.func == "pow":
            k = _small_int(e.args[1])
            if k is not None:
                return power_by_products(args[0], k, backend)
            return backend.pow(*args)
        return backend.func(e.func, args[0])
    left = evaluate(e.left, bindings, backend)
    if e.op == "^":
        k = _small_int(e.right)
        if k is not None:
            return power_by_products(left, k, backend)
        return backend.pow(left, evaluate(e.right, bindings, backend))
    right = evaluate(e.right, bindings, backend)
    return {"+": backend.add, "-": backend.sub, "*": backend.mul, "/": backend.div}[e.op](left, right)
