"""Taylor-collocation for first-kind Volterra equations with piecewise kernels.

The unknown is sought as ``v_n(s) = sum_j c_j (s - c)^j`` and the equation

    sum_p int_{rho_{p-1}(r)}^{rho_p(r)} k_p(r, s) v(s) ds = f(r)

is enforced at ``degree + 1`` grid points, giving the square system
``A V = F`` with moments ``A_ij = sum_p int k_p(r_i, s) (s - c)^j ds``.  The
unknowns are the Taylor coefficients ``c_j = v^(j)(c) / j!`` themselves, so
no factorial ever enters the matrix and reconstruction is a plain power series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .backends import PLAIN, DualBackend
from .expr import Expr, Num, Var, evaluate, to_text
from .quadrature import QuadConfig, abel_nodes, simpson_nodes, simpson_sum

GRIDS = ("default", "shifted", "paper")


class ProblemError(ValueError):
    """A problem definition violates one of the structural requirements."""


class SingularSystemError(ArithmeticError):
    def __init__(self, step: int, row: int, point: float | None = None) -> None:
        self.step = step
        self.row = row
        self.point = point
        where = f"row {row}" + (f", r={point:g}" if point is not None else "")
        super().__init__(f"singular or numerically unstable system: zero pivot at step {step} ({where})")


@dataclass(frozen=True)
class Segment:
    rho_lo: Expr
    rho_hi: Expr
    kernel: Expr


@dataclass(frozen=True)
class ProblemSpec:
    segments: tuple[Segment, ...]
    rhs: Expr
    a: float = 0.0
    b: float = 1.0
    c: float = 0.0
    point: float | None = None
    weight: str = "none"
    transform: Expr | None = None
    exact: Expr | None = None
    label: str = ""

    def exact_value(self, r: float) -> float:
        if self.exact is None:
            raise ProblemError(f"problem {self.label!r} has no exact solution")
        return float(evaluate(self.exact, {"r": float(r)}, PLAIN))


def _plain(e: Expr, r: float) -> float:
    return float(evaluate(e, {"r": r}, PLAIN))


def validate_problem(p: ProblemSpec, samples: int = 50, tol: float = 1e-12) -> None:
    """Raise :class:`ProblemError` unless ``p`` is a well-formed problem."""
    if not p.segments:
        raise ProblemError("at least one segment is required")
    if not (math.isfinite(p.a) and math.isfinite(p.b) and p.a < p.b):
        raise ProblemError(f"interval must satisfy a < b, got [{p.a}, {p.b}]")
    if p.weight not in ("none", "abel"):
        raise ProblemError(f"unknown weight {p.weight!r}")
    if p.point is not None and not (p.a < p.point <= p.b):
        raise ProblemError(f"point must lie in (a, b], got {p.point}")
    if p.weight == "abel" and len(p.segments) != 1:
        raise ProblemError("an Abel-weighted problem has exactly one segment")
    rs = p.a + (p.b - p.a) * np.arange(1, samples + 1) / samples
    for r in rs:
        r = float(r)
        if abs(_plain(p.segments[0].rho_lo, r)) > tol:
            raise ProblemError("the first segment must start at rho_0(r) = 0")
        if abs(_plain(p.segments[-1].rho_hi, r) - r) > tol * max(1.0, abs(r)):
            raise ProblemError("the last segment must end at rho_m(r) = r")
        for k, seg in enumerate(p.segments):
            lo, hi = _plain(seg.rho_lo, r), _plain(seg.rho_hi, r)
            if lo > hi + tol:
                raise ProblemError(f"segment {k + 1}: rho_lo > rho_hi at r={r:g}")
            if k + 1 < len(p.segments):
                nxt = _plain(p.segments[k + 1].rho_lo, r)
                if abs(nxt - hi) > tol * max(1.0, abs(hi)):
                    raise ProblemError(f"segments {k + 1} and {k + 2} do not meet at r={r:g}")
    if p.weight == "none" and p.a == 0 and abs(_plain(p.rhs, 0.0)) > tol:
        raise ProblemError("rhs must vanish at r=0")


# --------------------------------------------------------------------------
# systems and solutions


@dataclass(frozen=True)
class LinearSystem:
    A: Any
    F: Any
    points: tuple[float, ...] = field(default=())

    @property
    def size(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class TaylorSolution:
    degree: int
    center: float
    coeffs: Any

    def coefficient(self, j: int, backend: Any = PLAIN) -> Any:
        return backend.take(self.coeffs, j, axis=0)


def collocation_points(degree: int, a: float, b: float, grid: str = "default") -> list[float]:
    """Grid points for a degree-``degree`` approximation.

    ``default`` and ``paper`` use ``r_i = a + ((b - a)/n) i`` for ``i = 0..n``;
    ``shifted`` uses ``r_i = a + (b - a)(i + 1)/(n + 1)``, which avoids ``r = a``.
    """
    if degree < 1:
        raise ValueError(f"degree must be >= 1, got {degree}")
    if not a < b:
        raise ValueError("need a < b")
    if grid in ("default", "paper"):
        step = (b - a) / degree
        return [a + step * i for i in range(degree + 1)]
    if grid == "shifted":
        return [a + (b - a) * (i + 1) / (degree + 1) for i in range(degree + 1)]
    raise ValueError(f"unknown grid {grid!r}; choose from {GRIDS}")


def _weighted_powers(x: Any, weight: Any, degree: int, backend: Any) -> Any:
    """Stack ``weight * x^j`` for ``j = 0..degree`` on a new axis before the last."""
    out = [weight]
    for _ in range(degree):
        out.append(backend.mul(out[-1], x))
    return backend.stack(out, axis=-2)


def is_degenerate_point(p: ProblemSpec, r: float) -> bool:
    """True when every integration range collapses at ``r`` (the row is ``0 = f(r)``)."""
    if p.weight == "abel":
        return False
    bounds = [_plain(s.rho_lo, r) for s in p.segments] + [_plain(p.segments[-1].rho_hi, r)]
    return max(bounds) == min(bounds)


def limit_row(p: ProblemSpec, r: float, degree: int) -> tuple[np.ndarray, float]:
    """The equation differentiated in ``r`` at a point where all ranges collapse.

    Row and right-hand side both vanish there, so the collocation condition is
    replaced by its limit: by Leibniz' rule only the moving-boundary terms
    ``k_p(r, rho) (rho - c)^j rho'(r)`` survive, against ``f'(r)``.
    """
    dual = DualBackend()
    rv = dual.variable(r)
    j = np.arange(degree + 1)
    row = np.zeros(degree + 1)
    for seg in p.segments:
        for bound, sign in ((seg.rho_hi, 1.0), (seg.rho_lo, -1.0)):
            rho = evaluate(bound, {"r": rv}, dual)
            rho = dual.lift(rho) if not hasattr(rho, "der") else rho
            if rho.der == 0.0:
                continue
            k = float(evaluate(seg.kernel, {"r": float(r), "s": rho.val}, PLAIN))
            row += sign * k * rho.der * (rho.val - p.c) ** j
    f = evaluate(p.rhs, {"r": rv}, dual)
    rhs = f.der if hasattr(f, "der") else 0.0
    return row, float(rhs)


def assemble_rows(
    p: ProblemSpec, points: Sequence[float], degree: int, quad: QuadConfig, backend: Any = PLAIN
) -> tuple[Any, Any]:
    """Collocation rows ``A`` (``len(points) x degree+1``) and ``F`` at ``points``."""
    n_rows = len(points)
    r = backend.lift(np.asarray(points, dtype=float))
    c = backend.lift(p.c)
    r_col = backend.expand(r)
    # segments are batched on a leading axis so one sequential Simpson pass covers them all
    nodes_all, steps, kernels = [], [], []
    for seg in p.segments:
        if p.weight == "abel":
            nodes, h = abel_nodes(r, quad.panels, backend)
        else:
            lo = backend.broadcast(evaluate(seg.rho_lo, {"r": r}, backend), (n_rows,))
            hi = backend.broadcast(evaluate(seg.rho_hi, {"r": r}, backend), (n_rows,))
            nodes, h = simpson_nodes(lo, hi, quad.panels, backend)
            h = backend.expand(h)
        nodes_all.append(nodes)
        steps.append(h)
        kernels.append(backend.broadcast(evaluate(seg.kernel, {"r": r_col, "s": nodes}, backend), backend.shape(nodes)))
    nodes = backend.stack(nodes_all, axis=0)
    k = backend.stack(kernels, axis=0)
    h = backend.stack(steps, axis=0)
    integrand = _weighted_powers(backend.sub(nodes, c), k, degree, backend)
    parts = simpson_sum(integrand, h, backend)
    A = backend.take(parts, 0, axis=0)
    for q in range(1, len(p.segments)):
        A = backend.add(A, backend.take(parts, q, axis=0))
    F = backend.broadcast(evaluate(p.rhs, {"r": r}, backend), (n_rows,))
    return A, F


def assemble_system(
    p: ProblemSpec, degree: int, quad: QuadConfig | None = None, backend: Any = PLAIN, grid: str = "default"
) -> LinearSystem:
    """Build ``A V = F`` for a degree-``degree`` Taylor polynomial.

    On the ``default`` grid a degenerate point (``r = a = 0`` for kernels whose
    ranges all start at zero) contributes its limiting equation instead of the
    identically-zero row; the ``paper`` grid keeps the zero row as is.
    """
    quad = quad or QuadConfig()
    points = collocation_points(degree, p.a, p.b, grid)
    special = [i for i, r in enumerate(points) if grid == "default" and is_degenerate_point(p, r)]
    regular = [r for i, r in enumerate(points) if i not in special]
    A, F = assemble_rows(p, regular, degree, quad, backend)
    if special:
        blocks_a, blocks_f = [], []
        cursor = 0
        for i in range(len(points)):
            if i in special:
                row, rhs = limit_row(p, points[i], degree)
                blocks_a.append(backend.lift(row[None, :]))
                blocks_f.append(backend.lift(np.array([rhs])))
            else:
                blocks_a.append(backend.take(A, [cursor], axis=0))
                blocks_f.append(backend.take(F, [cursor], axis=0))
                cursor += 1
        A, F = backend.concat(blocks_a, axis=0), backend.concat(blocks_f, axis=0)
    return LinearSystem(A, F, tuple(points))


def gauss_jordan_solve(system: LinearSystem, backend: Any = PLAIN) -> Any:
    """Solve ``A V = F`` by Gauss-Jordan elimination with partial pivoting.

    Pivots are chosen by largest (mean) magnitude.  A pivot that is an
    informatical zero (stochastic backend) or below ``1e-30`` (plain backend)
    raises :class:`SingularSystemError`.
    """
    n = backend.shape(system.F)[0]
    if backend.shape(system.A) != (n, n):
        raise ValueError(f"expected a square {n}x{n} system, got {backend.shape(system.A)}")
    M = backend.concat([system.A, backend.expand(system.F)], axis=1)
    rows = [backend.take(M, i, axis=0) for i in range(n)]
    order = list(range(n))
    for k in range(n):
        mags = [float(backend.magnitude(backend.take(rows[i], k))) for i in range(k, n)]
        p = k + int(np.argmax(mags))
        rows[k], rows[p] = rows[p], rows[k]
        order[k], order[p] = order[p], order[k]
        pivot = backend.take(rows[k], k)
        if backend.is_zero(pivot):
            point = system.points[order[k]] if system.points else None
            raise SingularSystemError(k, order[k], point)
        rows[k] = backend.div(rows[k], pivot)
        for i in range(n):
            if i != k:
                rows[i] = backend.sub(rows[i], backend.mul(backend.take(rows[i], k), rows[k]))
    return backend.stack([backend.take(row, n) for row in rows], axis=0)


def solve(
    p: ProblemSpec, degree: int, quad: QuadConfig | None = None, backend: Any = PLAIN, grid: str = "default"
) -> TaylorSolution:
    system = assemble_system(p, degree, quad, backend, grid)
    return TaylorSolution(degree, p.c, gauss_jordan_solve(system, backend))


def evaluate_solution(sol: TaylorSolution, s: Any, backend: Any = PLAIN, transform: Expr | None = None) -> Any:
    """Horner evaluation of the Taylor polynomial at ``s``, then ``transform(w)`` if given."""
    x = backend.sub(backend.lift(s) if isinstance(s, (int, float)) else s, backend.lift(sol.center))
    v = sol.coefficient(sol.degree, backend)
    for j in range(sol.degree - 1, -1, -1):
        v = backend.add(backend.mul(v, x), sol.coefficient(j, backend))
    if transform is not None:
        v = evaluate(transform, {"w": v}, backend)
    return v


def residual_norm(
    p: ProblemSpec, sol: TaylorSolution, points: Sequence[float], quad: QuadConfig, backend: Any = PLAIN
) -> float:
    """``max_i |(A v_n)(r_i) - f(r_i)|`` with the integrals recomputed at ``points``."""
    A, F = assemble_rows(p, points, sol.degree, quad, backend)
    acc = None
    for j in range(sol.degree + 1):
        term = backend.mul(backend.take(A, j, axis=-1), sol.coefficient(j, backend))
        acc = term if acc is None else backend.add(acc, term)
    return float(np.max(backend.magnitude(backend.sub(acc, F))))


def describe(p: ProblemSpec) -> str:
    parts = [f"{to_text(s.kernel)} on [{to_text(s.rho_lo)}, {to_text(s.rho_hi)}]" for s in p.segments]
    return "; ".join(parts)


__all__ = [
    "GRIDS",
    "LinearSystem",
    "ProblemError",
    "ProblemSpec",
    "Segment",
    "SingularSystemError",
    "TaylorSolution",
    "assemble_rows",
    "assemble_system",
    "collocation_points",
    "evaluate_solution",
    "gauss_jordan_solve",
    "is_degenerate_point",
    "limit_row",
    "residual_norm",
    "solve",
    "validate_problem",
    "Num",
    "Var",
]
