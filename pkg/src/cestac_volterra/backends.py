"""Deterministic arithmetic backends sharing the :class:`~cestac_volterra.sa.SaContext` protocol.

``PlainBackend`` is ordinary binary64 arithmetic on numpy arrays.
``DualBackend`` carries a value and its first derivative through an
expression (forward-mode differentiation), which the collocation assembly uses
to build the limiting equation at a degenerate grid point.
"""

from __future__ import annotations

import math
from typing import Any, NamedTuple

import numpy as np

#: pivots below this magnitude are treated as zero by the plain solver
PLAIN_PIVOT_TOL = 1e-30


class DomainError(ArithmeticError):
    """An elementary function was evaluated outside its domain."""


_UNARY = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "asin": np.arcsin,
    "acos": np.arccos,
    "atan": np.arctan,
    "sqrt": np.sqrt,
    "log": np.log,
    "abs": np.abs,
}


def _checked(res: Any, op: str, *args: Any) -> Any:
    if np.all(np.isfinite(res)):
        return res
    if all(np.all(np.isfinite(a)) for a in args):
        raise DomainError(f"mathematical instability in {op}")
    return res


class PlainBackend:
    name = "plain"

    def lift(self, x: Any) -> Any:
        arr = np.asarray(x, dtype=np.float64)
        return float(arr) if arr.ndim == 0 else arr

    exact = lift

    def expand(self, x: Any, axis: int = -1) -> np.ndarray:
        return np.expand_dims(np.asarray(x, dtype=np.float64), axis)

    def broadcast(self, x: Any, shape: tuple[int, ...]) -> np.ndarray:
        return np.broadcast_to(np.asarray(x, dtype=np.float64), shape)

    def shape(self, x: Any) -> tuple[int, ...]:
        return np.shape(x)

    def stack(self, values: list[Any], axis: int = 0) -> np.ndarray:
        arrs = np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in values))
        return np.stack(arrs, axis=axis)

    def concat(self, values: list[Any], axis: int = 0) -> np.ndarray:
        return np.concatenate([np.asarray(v, dtype=np.float64) for v in values], axis=axis)

    def take(self, x: Any, index: int, axis: int = -1) -> Any:
        return np.take(x, index, axis=axis)

    def value(self, x: Any) -> Any:
        return x

    def magnitude(self, x: Any) -> Any:
        return np.abs(x)

    def is_zero(self, x: Any) -> Any:
        return np.abs(x) < PLAIN_PIVOT_TOL

    def add(self, a: Any, b: Any) -> Any:
        return np.add(a, b)

    def sub(self, a: Any, b: Any) -> Any:
        return np.subtract(a, b)

    def mul(self, a: Any, b: Any) -> Any:
        return np.multiply(a, b)

    def div(self, a: Any, b: Any) -> Any:
        with np.errstate(all="ignore"):
            res = np.divide(a, b)
        if np.any(np.asarray(b) == 0):
            raise ZeroDivisionError("division by zero")
        return _checked(res, "div", a, b)

    def neg(self, a: Any) -> Any:
        return np.negative(a)

    def abs(self, a: Any) -> Any:
        return np.abs(a)

    def func(self, name: str, a: Any) -> Any:
        with np.errstate(all="ignore"):
            res = _UNARY[name](a)
        return _checked(res, name, a)

    def pow(self, a: Any, b: Any) -> Any:
        with np.errstate(all="ignore"):
            res = np.power(np.asarray(a, dtype=np.float64), b)
        return _checked(res, "pow", a, b)


class Dual(NamedTuple):
    val: float
    der: float


class DualBackend:
    """Scalar forward-mode differentiation; ``lift`` makes constants."""

    name = "dual"

    def lift(self, x: Any) -> Dual:
        return Dual(float(x), 0.0)

    exact = lift

    @staticmethod
    def variable(x: float) -> Dual:
        return Dual(float(x), 1.0)

    def _d(self, x: Any) -> Dual:
        return x if isinstance(x, Dual) else self.lift(x)

    def value(self, x: Any) -> float:
        return self._d(x).val

    def add(self, a: Any, b: Any) -> Dual:
        a, b = self._d(a), self._d(b)
        return Dual(a.val + b.val, a.der + b.der)

    def sub(self, a: Any, b: Any) -> Dual:
        a, b = self._d(a), self._d(b)
        return Dual(a.val - b.val, a.der - b.der)

    def mul(self, a: Any, b: Any) -> Dual:
        a, b = self._d(a), self._d(b)
        return Dual(a.val * b.val, a.der * b.val + a.val * b.der)

    def div(self, a: Any, b: Any) -> Dual:
        a, b = self._d(a), self._d(b)
        if b.val == 0:
            raise ZeroDivisionError("division by zero")
        q = a.val / b.val
        return Dual(q, (a.der - q * b.der) / b.val)

    def neg(self, a: Any) -> Dual:
        a = self._d(a)
        return Dual(-a.val, -a.der)

    def abs(self, a: Any) -> Dual:
        a = self._d(a)
        return Dual(abs(a.val), math.copysign(1.0, a.val) * a.der)

    def func(self, name: str, a: Any) -> Dual:
        a = self._d(a)
        x = a.val
        try:
            if name == "exp":
                e = math.exp(x)
                return Dual(e, e * a.der)
            if name == "sin":
                return Dual(math.sin(x), math.cos(x) * a.der)
            if name == "cos":
                return Dual(math.cos(x), -math.sin(x) * a.der)
            if name == "tan":
                t = math.tan(x)
                return Dual(t, (1 + t * t) * a.der)
            if name == "asin":
                return Dual(math.asin(x), a.der / math.sqrt(1 - x * x))
            if name == "acos":
                return Dual(math.acos(x), -a.der / math.sqrt(1 - x * x))
            if name == "atan":
                return Dual(math.atan(x), a.der / (1 + x * x))
            if name == "sqrt":
                s = math.sqrt(x)
                return Dual(s, a.der / (2 * s))
            if name == "log":
                return Dual(math.log(x), a.der / x)
            if name == "abs":
                return self.abs(a)
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"mathematical instability in {name}") from exc
        raise ValueError(f"unknown function {name!r}")

    def pow(self, a: Any, b: Any) -> Dual:
        a, b = self._d(a), self._d(b)
        try:
            p = a.val**b.val
            der = b.val * a.val ** (b.val - 1) * a.der if b.val != 0 else 0.0
            if b.der:
                der += p * math.log(a.val) * b.der
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError("mathematical instability in pow") from exc
        if isinstance(p, complex):
            raise DomainError("mathematical instability in pow")
        return Dual(p, der)


PLAIN = PlainBackend()
