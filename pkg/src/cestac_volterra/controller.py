"""The degree-raising loop and its stopping rules.

Iteration ``n`` solves for a Taylor polynomial of degree ``n - 1`` (so the
first record is ``n = 2``, a straight line) and evaluates it at the query
point.  Under stochastic arithmetic the loop stops as soon as the difference
between two successive values is an informatical zero; the floating-point
rules compare against a user tolerance instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Union

from .backends import PLAIN, DomainError
from .collocation import (
    ProblemSpec,
    SingularSystemError,
    collocation_points,
    evaluate_solution,
    residual_norm,
    solve,
)
from .quadrature import QuadConfig
from .sa import SaConfig, SaContext, StochasticValue, common_digits, sa_format, sa_is_zero, sa_mean, sa_ncsd, sa_sigma

DEFAULT_MAX_N = 25


@dataclass(frozen=True)
class SaSuccessive:
    pass


@dataclass(frozen=True)
class _Tolerance:
    epsilon: float

    def __post_init__(self) -> None:
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be a positive real, got {self.epsilon}")


class FpaAbsolute(_Tolerance):
    """Stop when ``|v(r*) - v_n(r*)| <= epsilon`` (needs the exact solution)."""


class FpaCorrection(_Tolerance):
    """Stop when ``|v_n(r*) - v_{n-1}(r*)| <= epsilon``."""


class FpaDiscrepancy(_Tolerance):
    """Stop when the max collocation residual at off-grid points is ``<= epsilon``."""


StoppingRule = Union[SaSuccessive, FpaAbsolute, FpaCorrection, FpaDiscrepancy]


@dataclass(frozen=True)
class Measure:
    """A reported quantity: its mean, sample spread, digit count and printed form."""

    mean: float
    sigma: float | None
    ncsd: float | None
    text: str

    @classmethod
    def plain(cls, x: float) -> Measure:
        return cls(float(x), None, None, f"{float(x):.20f}")

    @classmethod
    def stochastic(cls, x: StochasticValue, config: SaConfig) -> Measure:
        return cls(
            float(sa_mean(x)),
            float(sa_sigma(x)),
            float(sa_ncsd(x, config)),
            sa_format(x, config),
        )


@dataclass(frozen=True)
class IterationRecord:
    n: int
    v_n: Measure
    diff: Measure | None
    err: Measure | None
    residual: float | None = None


@dataclass
class RunReport:
    records: list[IterationRecord]
    optimal_n: int | None
    optimal_value: Measure | None
    stop_reason: str
    instability_log: list[str] = field(default_factory=list)
    mode: str = "sa"
    point: float = 0.0
    seed: int | None = None

    @property
    def fired(self) -> bool:
        return self.stop_reason not in ("max_n reached",) and not self.stop_reason.startswith("unstable")


def _check(p: ProblemSpec, r_star: float, rule: StoppingRule, backend: Any, max_n: int) -> None:
    if not (p.a < r_star <= p.b):
        raise ValueError(f"query point {r_star} must lie in ({p.a}, {p.b}]")
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    if isinstance(rule, FpaAbsolute) and p.exact is None:
        raise ValueError("the absolute-error rule needs an exact solution")
    if isinstance(rule, SaSuccessive) != isinstance(backend, SaContext):
        raise ValueError("the successive-difference rule runs on the stochastic backend and only there")


def _midpoints(degree: int, p: ProblemSpec, grid: str) -> list[float]:
    pts = collocation_points(degree, p.a, p.b, "shifted" if grid == "shifted" else "default")
    return [0.5 * (x + y) for x, y in zip(pts, pts[1:])]


def run(
    p: ProblemSpec,
    rule: StoppingRule,
    *,
    r_star: float | None = None,
    max_n: int = DEFAULT_MAX_N,
    quad: QuadConfig | None = None,
    sa: SaConfig | None = None,
    backend: Any = None,
    grid: str = "default",
) -> RunReport:
    """Raise the degree until ``rule`` fires, the system breaks down, or ``max_n`` is reached.

    ``backend`` defaults to a fresh :class:`SaContext` built from ``sa`` for the
    stochastic rule and to plain binary64 otherwise.  Records are labelled
    ``n = degree + 1``; ``max_n = 1`` still produces the single ``n = 2`` record.
    """
    r_star = p.point if r_star is None else r_star
    if r_star is None:
        raise ValueError("no query point given")
    quad = quad or QuadConfig(singular_weight=p.weight)
    sa = sa or SaConfig()
    if backend is None:
        backend = SaContext(sa) if isinstance(rule, SaSuccessive) else PLAIN
    _check(p, r_star, rule, backend, max_n)
    stochastic = isinstance(backend, SaContext)
    exact = p.exact_value(r_star) if p.exact is not None else None
    measure = (lambda x: Measure.stochastic(x, backend.config)) if stochastic else Measure.plain

    records: list[IterationRecord] = []
    log: list[str] = []
    previous = None
    reason = "max_n reached"
    n = 1
    while True:
        n += 1
        degree = n - 1
        try:
            sol = solve(p, degree, quad, backend, grid)
            value = evaluate_solution(sol, backend.lift(r_star), backend, p.transform)
        except (SingularSystemError, DomainError, ZeroDivisionError) as exc:
            log.append(f"n={n}: {exc}")
            reason = f"unstable system at n={n}"
            break
        # signed differences: an informatical zero is judged before taking magnitudes
        diff = backend.sub(value, previous) if previous is not None else None
        err = backend.sub(value, backend.lift(exact)) if exact is not None else None
        residual = None
        if isinstance(rule, FpaDiscrepancy):
            residual = residual_norm(p, sol, _midpoints(degree, p, grid), quad, backend)
        records.append(
            IterationRecord(
                n=n,
                v_n=measure(value),
                diff=_magnitude(measure(diff)) if diff is not None else None,
                err=_magnitude(measure(err)) if err is not None else None,
                residual=residual,
            )
        )
        if _fired(rule, diff, err, residual, backend):
            reason = _rule_name(rule)
            break
        if n - 1 >= max_n:
            break
        previous = value
    if stochastic:
        log.extend(backend.log)
    last = records[-1] if records else None
    return RunReport(
        records=records,
        optimal_n=last.n if last else None,
        optimal_value=last.v_n if last else None,
        stop_reason=reason,
        instability_log=log,
        mode=_rule_name(rule),
        point=r_star,
        seed=sa.rng_seed if stochastic else None,
    )


def _magnitude(m: Measure) -> Measure:
    return replace(m, mean=abs(m.mean), text=m.text.removeprefix("-"))


def _fired(rule: StoppingRule, diff: Any, err: Any, residual: float | None, backend: Any) -> bool:
    if isinstance(rule, SaSuccessive):
        return diff is not None and bool(sa_is_zero(diff, backend.config))
    if isinstance(rule, FpaAbsolute):
        return abs(float(err)) <= rule.epsilon
    if isinstance(rule, FpaCorrection):
        return diff is not None and abs(float(diff)) <= rule.epsilon
    return residual is not None and residual <= rule.epsilon


def _rule_name(rule: StoppingRule) -> str:
    return {
        SaSuccessive: "sa",
        FpaAbsolute: "fpa-abs",
        FpaCorrection: "fpa-corr",
        FpaDiscrepancy: "fpa-disc",
    }[type(rule)]


@dataclass(frozen=True)
class DigitAgreement:
    n: int
    c_exact: float
    c_succ: float
    gap: float


def _capped(c: float, cap: float) -> float:
    return min(max(c, 0.0), cap)


def digit_agreement(report: RunReport, exact_value: float, cap: float = 15.0) -> list[DigitAgreement]:
    """Digits ``v_n`` shares with the exact value against digits it shares with ``v_{n+1}``.

    Digit counts are clamped to ``[0, cap]`` before taking the gap, so two
    identical pairs (both counts infinite) report a gap of 0.
    """
    if len(report.records) < 2:
        raise ValueError("digit agreement needs at least two records")
    rows = []
    for cur, nxt in zip(report.records, report.records[1:]):
        c_exact = _capped(common_digits(cur.v_n.mean, exact_value), cap)
        c_succ = _capped(common_digits(cur.v_n.mean, nxt.v_n.mean), cap)
        rows.append(DigitAgreement(cur.n, c_exact, c_succ, abs(c_exact - c_succ)))
    return rows
