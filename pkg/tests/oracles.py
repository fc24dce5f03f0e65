"""Reference implementations the package is checked against.

These are deliberately written differently from the code under test: a
shunting-yard evaluator working straight off the token string, elimination in
exact rational arithmetic, and closed-form integrals.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction

import numpy as np

_TOKENS = re.compile(r"\s*(\d+\.?\d*(?:[eE][+-]?\d+)?|[A-Za-z_]\w*|[-+*/^(),])")
_BINARY = {"+": (1, "left"), "-": (1, "left"), "*": (2, "left"), "/": (2, "left"), "^": (4, "right")}
_NEG_PREC = 3
# elementary functions come from the same libm as the package; only parsing is under test
_FUNCS = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "atan": np.arctan,
    "sqrt": np.sqrt,
    "log": np.log,
    "abs": abs,
}


def _power(a: float, b: float) -> float:
    # integer exponents 0..8 as left-to-right products, like the evaluator under test
    if float(b).is_integer() and 0 <= b <= 8:
        if b == 0:
            return 1.0
        acc = a
        for _ in range(int(b) - 1):
            acc = acc * a
        return acc
    return a**b


def shunting_yard(text: str, env: dict[str, float]) -> float:
    """Evaluate ``text`` by converting to reverse Polish notation first."""
    tokens = _TOKENS.findall(text)
    out: list = []
    ops: list = []
    prev = None

    def prec(op):
        return _NEG_PREC if op == "neg" else _BINARY[op][0]

    for tok in tokens:
        if re.fullmatch(r"\d.*", tok):
            out.append(float(tok))
        elif tok in _FUNCS:
            ops.append(("fn", tok))
        elif re.fullmatch(r"[A-Za-z_]\w*", tok):
            out.append(math.pi if tok == "pi" else math.e if tok == "e" else env[tok])
        elif tok == "(":
            ops.append("(")
        elif tok == ")":
            while ops[-1] != "(":
                out.append(ops.pop())
            ops.pop()
            if ops and isinstance(ops[-1], tuple):
                out.append(ops.pop())
        elif tok == "-" and (prev is None or prev in _BINARY or prev in ("(", ",")):
            ops.append("neg")
        else:
            p, assoc = _BINARY[tok]
            while ops and ops[-1] != "(" and not isinstance(ops[-1], tuple):
                top = prec(ops[-1])
                # a pending unary minus never pops before a right-binding '^'
                if ops[-1] == "neg" and tok == "^":
                    break
                if top > p or (top == p and assoc == "left"):
                    out.append(ops.pop())
                else:
                    break
            ops.append(tok)
        prev = tok
    while ops:
        out.append(ops.pop())

    stack: list[float] = []
    for item in out:
        if isinstance(item, float):
            stack.append(item)
        elif item == "neg":
            stack.append(-stack.pop())
        elif isinstance(item, tuple):
            stack.append(float(_FUNCS[item[1]](stack.pop())))
        else:
            b, a = stack.pop(), stack.pop()
            if item == "^":
                stack.append(_power(a, b))
            elif item == "/":
                stack.append(a / b if b else math.inf)
            else:
                stack.append({"+": a + b, "-": a - b, "*": a * b}[item])
    (result,) = stack
    return result


def rational_solve(A, F) -> list[float]:
    """Exact Gaussian elimination over the rationals, rounded at the end."""
    n = len(F)
    M = [[Fraction(float(x)) for x in row] + [Fraction(float(F[i]))] for i, row in enumerate(A)]
    for k in range(n):
        p = next(i for i in range(k, n) if M[i][k] != 0)
        M[k], M[p] = M[p], M[k]
        for i in range(k + 1, n):
            f = M[i][k] / M[k][k]
            M[i] = [a - f * b for a, b in zip(M[i], M[k])]
    x = [Fraction(0)] * n
    for i in reversed(range(n)):
        x[i] = (M[i][n] - sum(M[i][j] * x[j] for j in range(i + 1, n))) / M[i][i]
    return [float(v) for v in x]


def constant_kernel_moment(k: float, lo: float, hi: float, j: int, c: float = 0.0) -> float:
    """``k * int_lo^hi (s - c)^j ds`` in closed form."""
    return k * ((hi - c) ** (j + 1) - (lo - c) ** (j + 1)) / (j + 1)


def abel_moment(r: float, j: int) -> float:
    """``int_0^r s^j / sqrt(r^2 - s^2) ds = r^j * int_0^{pi/2} sin^j`` (Wallis)."""
    w = math.pi / 2
    if j % 2:
        w = 1.0
        for i in range(2, j + 1, 2):
            w *= i / (i + 1)
    else:
        for i in range(2, j + 1, 2):
            w *= (i - 1) / i
    return r**j * w
