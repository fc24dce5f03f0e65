"""Composite Simpson quadrature and the Abel-weight substitution rule.

All routines run on any arithmetic backend.  Under stochastic arithmetic the
weighted samples are accumulated one node at a time, so every partial sum is
randomly rounded as it would be in a hand-written loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .backends import PLAIN
from .expr import power_by_products

DEFAULT_PANELS = 500


@dataclass(frozen=True)
class QuadConfig:
    panels: int = DEFAULT_PANELS
    singular_weight: str = "none"

    def __post_init__(self) -> None:
        check_panels(self.panels)
        if self.singular_weight not in ("none", "abel"):
            raise ValueError(f"unknown singular weight {self.singular_weight!r}")


def check_panels(panels: int) -> None:
    if panels < 2 or panels % 2:
        raise ValueError(f"panel count must be even and >= 2, got {panels}")


def simpson_weights(panels: int) -> np.ndarray:
    w = np.ones(panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w


def simpson_nodes(lo: Any, hi: Any, panels: int, backend: Any = PLAIN) -> tuple[Any, Any]:
    """Nodes ``lo + k h`` along a new trailing axis, and the step ``h``.

    ``lo`` and ``hi`` may carry a batch shape; one integral per batch element.
    """
    check_panels(panels)
    if np.any(np.asarray(backend.value(hi)) < np.asarray(backend.value(lo))):
        raise ValueError("integration bounds must satisfy lo <= hi")
    h = backend.div(backend.sub(hi, lo), backend.lift(float(panels)))
    k = backend.lift(np.arange(panels + 1, dtype=float))
    nodes = backend.add(backend.expand(lo), backend.mul(backend.expand(h), k))
    return nodes, h


def simpson_sum(values: Any, h: Any, backend: Any = PLAIN) -> Any:
    """``h/3 * sum(w_k f_k)`` over the trailing node axis of ``values``.

    ``h`` must broadcast against ``values`` with the node axis removed.
    """
    n_nodes = backend.shape(values)[-1]
    terms = backend.mul(values, backend.lift(simpson_weights(n_nodes - 1)))
    acc = backend.take(terms, 0)
    for k in range(1, n_nodes):
        acc = backend.add(acc, backend.take(terms, k))
    return backend.div(backend.mul(acc, h), backend.lift(3.0))


def simpson(
    f: Callable[[Any], Any], lo: Any, hi: Any, panels: int = DEFAULT_PANELS, backend: Any = PLAIN
) -> Any:
    """Composite Simpson rule for ``int_lo^hi f(s) ds`` with ``panels`` panels.

    ``f`` receives the node array and must return values of the same shape.
    """
    lo, hi = backend.lift(lo) if _is_number(lo) else lo, backend.lift(hi) if _is_number(hi) else hi
    nodes, h = simpson_nodes(lo, hi, panels, backend)
    return simpson_sum(backend.broadcast(f(nodes), backend.shape(nodes)), h, backend)


def abel_nodes(r: Any, panels: int, backend: Any = PLAIN) -> tuple[Any, Any]:
    """Substituted nodes ``s = r sin(theta)`` on ``theta in [0, pi/2]``, and the theta step.

    With this change of variables ``int_0^r g(s) / sqrt(r^2 - s^2) ds`` becomes
    ``int_0^{pi/2} g(r sin theta) d theta``, which has no endpoint singularity.
    """
    if np.any(np.asarray(backend.value(r)) < 0):
        raise ValueError("the Abel integral needs r >= 0")
    theta, h = simpson_nodes(backend.lift(0.0), backend.lift(math.pi / 2), panels, backend)
    s = backend.mul(backend.expand(r), backend.func("sin", theta))
    return s, h


def abel_integral(
    g: Callable[[Any], Any], r: Any, panels: int = DEFAULT_PANELS, backend: Any = PLAIN
) -> Any:
    """``int_0^r g(s) / sqrt(r^2 - s^2) ds`` via the sine substitution."""
    r = backend.lift(r) if _is_number(r) else r
    s, h = abel_nodes(r, panels, backend)
    return simpson_sum(backend.broadcast(g(s), backend.shape(s)), h, backend)


def abel_basis_integral(
    r: Any, c: Any, j: int, panels: int = DEFAULT_PANELS, backend: Any = PLAIN
) -> Any:
    """``int_0^r (s - c)^j / sqrt(r^2 - s^2) ds``; at ``r = 0`` this is ``(-c)^j pi/2``."""
    if j < 0:
        raise ValueError("basis degree must be non-negative")
    c = backend.lift(c) if _is_number(c) else c
    return abel_integral(lambda s: power_by_products(backend.sub(s, c), j, backend), r, panels, backend)


def _is_number(x: Any) -> bool:
    return isinstance(x, (int, float, np.integer, np.floating)) or (
        isinstance(x, np.ndarray) and x.dtype.kind in "if"
    )
