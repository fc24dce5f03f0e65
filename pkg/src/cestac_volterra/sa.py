"""CESTAC-style discrete stochastic arithmetic.

A :class:`StochasticValue` carries ``l`` samples of the same quantity.  Each
operation is evaluated per sample in round-to-nearest and the result is then
jittered by one unit in the last place (down with probability 1/4, up with
probability 1/4, unchanged otherwise).  The spread of the samples estimates the
round-off accumulated along the computation, and the mean/spread pair yields
the number of significant digits the value can be trusted to.

Values may carry an arbitrary trailing *batch* shape (``samples`` has shape
``(l, *batch)``) so that quadrature nodes or matrix rows can be processed in a
single vectorised call; every element is perturbed independently, exactly as if
the scalar operations had been issued one by one.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from decimal import Decimal
from typing import Any

import numpy as np

logger = logging.getLogger(__name__)

INFORMATICAL_ZERO = "@.0"

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
}


@dataclass(frozen=True)
class SaConfig:
    """Parameters of the stochastic arithmetic.

    ``tau`` is the two-sided Student quantile for ``l - 1`` degrees of freedom;
    4.303 is the 95% value for three samples.
    """

    l: int = 3
    tau: float = 4.303
    precision_bits: int = 53
    max_display_digits: int = 15
    rng_seed: int | None = None

    def __post_init__(self) -> None:
        if self.l < 2:
            raise ValueError(f"sample count l must be >= 2, got {self.l}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.precision_bits not in (24, 53):
            raise ValueError(f"precision_bits must be 24 or 53, got {self.precision_bits}")
        if self.max_display_digits < 1:
            raise ValueError("max_display_digits must be >= 1")

    @property
    def dtype(self) -> type[np.floating]:
        return np.float64 if self.precision_bits == 53 else np.float32


class StochasticValue:
    """Immutable bundle of ``l`` randomly rounded samples.

    ``unstable`` has the batch shape and marks elements produced by an
    instability (division by an informatical zero, domain violation, overflow).
    """

    __slots__ = ("samples", "unstable")

    def __init__(self, samples: Any, unstable: Any = None) -> None:
        arr = np.array(samples, copy=True)
        if arr.ndim == 0:
            raise ValueError("samples must have a leading sample axis")
        arr.flags.writeable = False
        if unstable is None:
            mask = np.array(~np.all(np.isfinite(arr), axis=0))
        else:
            mask = np.broadcast_to(np.asarray(unstable, dtype=bool), arr.shape[1:]).copy()
            mask |= ~np.all(np.isfinite(arr), axis=0)
        mask.flags.writeable = False
        self.samples = arr
        self.unstable = mask

    @property
    def l(self) -> int:
        return self.samples.shape[0]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.samples.shape[1:]

    @property
    def ndim(self) -> int:
        return self.samples.ndim - 1

    def __getitem__(self, key: Any) -> StochasticValue:
        if not isinstance(key, tuple):
            key = (key,)
        return StochasticValue(self.samples[(slice(None),) + key], self.unstable[key])

    def __len__(self) -> int:
        if not self.shape:
            raise TypeError("scalar StochasticValue has no len()")
        return self.shape[0]

    def __repr__(self) -> str:
        if not self.shape:
            return f"StochasticValue({self.samples.tolist()!r})"
        return f"StochasticValue(shape={self.shape}, l={self.l})"


def _expand_to(samples: np.ndarray, batch_ndim: int) -> np.ndarray:
    """Insert batch axes after the sample axis so numpy broadcasting lines up."""
    missing = batch_ndim - (samples.ndim - 1)
    if missing <= 0:
        return samples
    return samples.reshape((samples.shape[0],) + (1,) * missing + samples.shape[1:])


# --------------------------------------------------------------------------
# statistics


def sa_mean(v: StochasticValue) -> Any:
    """Arithmetic mean of the samples (a float for scalar values).

    Summed as offsets from the first sample, so identical samples average to
    themselves exactly.
    """
    s = v.samples.astype(np.float64)
    with np.errstate(invalid="ignore", over="ignore"):
        m = s[0] + np.sum(s - s[0], axis=0) / v.l
    return float(m) if m.ndim == 0 else m


def sa_sigma(v: StochasticValue) -> Any:
    """Sample standard deviation with divisor ``l - 1``."""
    s = v.samples.astype(np.float64)
    with np.errstate(invalid="ignore", over="ignore"):
        mu = np.asarray(sa_mean(v))
        var = np.sum((s - mu) ** 2, axis=0) / (v.l - 1)
        out = np.sqrt(var)
    return float(out) if out.ndim == 0 else out


def sa_ncsd(v: StochasticValue, config: SaConfig) -> Any:
    """Number of significant digits shared by the samples and their mean.

    ``log10(sqrt(l) |mean| / (tau sigma))`` clamped to ``[0, max_display_digits]``;
    identical non-zero samples give the clamp maximum, a zero mean or an
    unstable element gives 0.
    """
    mu = np.asarray(sa_mean(v), dtype=np.float64)
    sigma = np.asarray(sa_sigma(v), dtype=np.float64)
    top = float(config.max_display_digits)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        raw = np.log10(math.sqrt(v.l) * np.abs(mu) / (config.tau * sigma))
    c = np.where(sigma == 0, top, raw)
    c = np.where((mu == 0) | v.unstable | ~np.isfinite(mu), 0.0, c)
    c = np.clip(np.nan_to_num(c, nan=0.0, posinf=top, neginf=0.0), 0.0, top)
    return float(c) if c.ndim == 0 else c


def sa_is_zero(v: StochasticValue, config: SaConfig) -> Any:
    """The informatical-zero predicate: no reliable digit, or a zero mean."""
    mu = np.asarray(sa_mean(v))
    z = (np.asarray(sa_ncsd(v, config)) <= 0) | (mu == 0)
    return bool(z) if z.ndim == 0 else z


def common_digits(x: float, y: float) -> float:
    """Common significant digits of two reals, ``log10|(x+y) / (2(x-y))|``.

    Equal arguments share infinitely many digits.  Negative results are
    returned as is; callers clamp them to zero when reporting.
    """
    if x == y:
        return math.inf
    num = abs(x + y)
    if num == 0:
        return -math.inf
    return math.log10(num / (2.0 * abs(x - y)))


# --------------------------------------------------------------------------
# formatting


def _truncated_scientific(x: float, digits: int) -> str:
    d = Decimal(x)
    sign = "-" if d.is_signed() else ""
    t = d.copy_abs().as_tuple()
    mant = "".join(str(k) for k in t.digits).lstrip("0") or "0"
    # exponent such that |x| = 0.mant * 10**exp10
    exp10 = Decimal(x).copy_abs().adjusted() + 1
    mant = (mant + "0" * digits)[:digits]
    return f"{sign}0.{mant}E{'-' if exp10 < 0 else '+'}{abs(exp10):03d}"


def sa_format(v: StochasticValue, config: SaConfig) -> str:
    """Print only the significant digits, e.g. ``0.6147E-001``, or ``@.0``."""
    if v.shape:
        raise ValueError("sa_format expects a scalar StochasticValue")
    if sa_is_zero(v, config):
        return INFORMATICAL_ZERO
    digits = int(math.floor(sa_ncsd(v, config)))
    digits = min(max(digits, 1), config.max_display_digits)
    return _truncated_scientific(sa_mean(v), digits)


# --------------------------------------------------------------------------
# the arithmetic itself


_INT_VIEW = {4: np.int32, 8: np.int64}


class SaContext:
    """Computation context owning the RNG stream and the instability log.

    Implements the arithmetic-backend protocol used by the expression
    evaluator, the quadrature rules and the linear solver.  A context must not
    be shared between threads.
    """

    name = "sa"

    def __init__(self, config: SaConfig | None = None) -> None:
        self.config = config or SaConfig()
        self.dtype = self.config.dtype
        self.rng = np.random.default_rng(self.config.rng_seed)
        self.events: Counter[tuple[str, str]] = Counter()

    # -- bookkeeping -------------------------------------------------------

    @property
    def log(self) -> list[str]:
        return [f"{kind} in {op}: {count} element(s)" for (kind, op), count in self.events.items()]

    def _event(self, kind: str, op: str, count: int) -> None:
        if count:
            self.events[(kind, op)] += int(count)
            logger.debug("%s in %s (%d element(s))", kind, op, count)

    def _jitter(self, res: np.ndarray) -> np.ndarray:
        # Two random bits per element give a step of -1, 0, 0 or +1 on the integer
        # view, i.e. one ulp toward or away from zero with probability 1/4 each.
        # The law is symmetric, so "toward zero" and "down" are interchangeable.
        res = np.ascontiguousarray(res)
        b = np.frombuffer(self.rng.bytes(res.size), dtype=np.uint8).reshape(res.shape)
        step = (b & 1).view(np.int8) - ((b >> 1) & 1).view(np.int8)
        out = (res.view(_INT_VIEW[res.dtype.itemsize]) + step).view(res.dtype)
        # an exact zero carries no rounding error and stays put
        np.copyto(out, res, where=res == 0)
        broken = ~np.isfinite(out)
        if broken.any():
            # infinities do not survive the integer step; redo those with nextafter
            toward = np.where(step * np.copysign(1.0, res) > 0, np.inf, -np.inf).astype(res.dtype)
            with np.errstate(over="ignore"):
                moved = np.where(step == 0, res, np.nextafter(res, toward))
            out = np.where(broken, moved, out)
        return out

    def _finish(self, res: np.ndarray, unstable: Any, op: str, inputs_finite: Any = True) -> StochasticValue:
        res = np.asarray(res, dtype=self.dtype)
        finite = np.all(np.isfinite(res), axis=0)
        bad = ~finite & np.asarray(inputs_finite)
        self._event("mathematical instability", op, np.count_nonzero(bad))
        return StochasticValue(self._jitter(res), np.asarray(unstable) | ~finite)

    def _coerce(self, x: Any) -> StochasticValue:
        if isinstance(x, StochasticValue):
            if x.l != self.config.l:
                raise ValueError(f"sample count mismatch: {x.l} != {self.config.l}")
            return x
        return self.exact(x)

    def _pair(self, a: Any, b: Any) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        a, b = self._coerce(a), self._coerce(b)
        nd = max(a.ndim, b.ndim)
        return _expand_to(a.samples, nd), _expand_to(b.samples, nd), a.unstable | b.unstable

    # -- lifting and structure ---------------------------------------------

    def exact(self, x: Any) -> StochasticValue:
        """Lift a constant: all samples equal ``x`` exactly, no spread."""
        arr = np.asarray(x, dtype=self.dtype)
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"cannot lift non-finite value {x!r}")
        return StochasticValue(np.broadcast_to(arr, (self.config.l,) + arr.shape))

    lift = exact

    def expand(self, x: StochasticValue, axis: int = -1) -> StochasticValue:
        x = self._coerce(x)
        batch_axis = axis if axis < 0 else axis + 1
        return StochasticValue(np.expand_dims(x.samples, batch_axis), np.expand_dims(x.unstable, axis))

    def broadcast(self, x: Any, shape: tuple[int, ...]) -> StochasticValue:
        x = self._coerce(x)
        samples = np.broadcast_to(_expand_to(x.samples, len(shape)), (self.config.l,) + tuple(shape))
        return StochasticValue(samples, np.broadcast_to(x.unstable, shape))

    def shape(self, x: Any) -> tuple[int, ...]:
        return self._coerce(x).shape

    def stack(self, values: list[Any], axis: int = 0) -> StochasticValue:
        vals = [self._coerce(v) for v in values]
        nd = max(v.ndim for v in vals)
        shape = np.broadcast_shapes(*(v.shape for v in vals))
        samples = [np.broadcast_to(_expand_to(v.samples, nd), (self.config.l,) + shape) for v in vals]
        masks = [np.broadcast_to(v.unstable, shape) for v in vals]
        batch_axis = axis if axis < 0 else axis + 1
        return StochasticValue(np.stack(samples, axis=batch_axis), np.stack(masks, axis=axis))

    def concat(self, values: list[Any], axis: int = 0) -> StochasticValue:
        vals = [self._coerce(v) for v in values]
        batch_axis = axis if axis < 0 else axis + 1
        return StochasticValue(
            np.concatenate([v.samples for v in vals], axis=batch_axis),
            np.concatenate([v.unstable for v in vals], axis=axis),
        )

    def take(self, x: StochasticValue, index: int, axis: int = -1) -> StochasticValue:
        batch_axis = axis if axis < 0 else axis + 1
        return StochasticValue(np.take(x.samples, index, axis=batch_axis), np.take(x.unstable, index, axis=axis))

    def value(self, x: Any) -> Any:
        return sa_mean(self._coerce(x))

    def magnitude(self, x: Any) -> Any:
        return np.abs(sa_mean(self._coerce(x)))

    def is_zero(self, x: Any) -> Any:
        return sa_is_zero(self._coerce(x), self.config)

    # -- arithmetic --------------------------------------------------------

    def add(self, a: Any, b: Any) -> StochasticValue:
        x, y, u = self._pair(a, b)
        with np.errstate(all="ignore"):
            return self._finish(x + y, u, "add", np.all(np.isfinite(x) & np.isfinite(y), axis=0))

    def sub(self, a: Any, b: Any) -> StochasticValue:
        x, y, u = self._pair(a, b)
        with np.errstate(all="ignore"):
            return self._finish(x - y, u, "sub", np.all(np.isfinite(x) & np.isfinite(y), axis=0))

    def mul(self, a: Any, b: Any) -> StochasticValue:
        x, y, u = self._pair(a, b)
        with np.errstate(all="ignore"):
            return self._finish(x * y, u, "mul", np.all(np.isfinite(x) & np.isfinite(y), axis=0))

    def div(self, a: Any, b: Any) -> StochasticValue:
        b = self._coerce(b)
        zero = np.asarray(sa_is_zero(b, self.config))
        self._event("unstable division", "div", np.count_nonzero(zero))
        x, y, u = self._pair(a, b)
        with np.errstate(all="ignore"):
            res = x / y
        return self._finish(res, u | zero, "div", ~zero)

    def neg(self, a: Any) -> StochasticValue:
        # sign changes are exact under every rounding direction
        a = self._coerce(a)
        return StochasticValue(-a.samples, a.unstable)

    def abs(self, a: Any) -> StochasticValue:
        a = self._coerce(a)
        return StochasticValue(np.abs(a.samples), a.unstable)

    def func(self, name: str, a: Any) -> StochasticValue:
        if name == "abs":
            return self.abs(a)
        fn = _UNARY[name]
        a = self._coerce(a)
        with np.errstate(all="ignore"):
            res = fn(a.samples)
        return self._finish(res, a.unstable, name, np.all(np.isfinite(a.samples), axis=0))

    def pow(self, a: Any, b: Any) -> StochasticValue:
        if isinstance(b, (int, np.integer)) and not isinstance(b, bool):
            a = self._coerce(a)
            with np.errstate(all="ignore"):
                res = a.samples ** int(b)
            return self._finish(res, a.unstable, "pow", np.all(np.isfinite(a.samples), axis=0))
        x, y, u = self._pair(a, b)
        with np.errstate(all="ignore"):
            res = np.power(x, y)
        return self._finish(res, u, "pow", np.all(np.isfinite(x) & np.isfinite(y), axis=0))


def sa_from_exact(x: float, config: SaConfig) -> StochasticValue:
    """Lift a finite constant into ``config.l`` identical samples."""
    if not math.isfinite(x):
        raise ValueError(f"cannot lift non-finite value {x!r}")
    return StochasticValue(np.full(config.l, x, dtype=config.dtype))


_BINARY_KINDS = {"add", "sub", "mul", "div", "pow"}


def sa_op(kind: str, a: StochasticValue, b: Any = None, *, ctx: SaContext) -> StochasticValue:
    """Dispatch one stochastic operation by name (``add``, ``sin``, ``pow``...)."""
    if kind in _BINARY_KINDS:
        if b is None:
            raise ValueError(f"{kind} needs two operands")
        return getattr(ctx, kind)(a, b)
    if b is not None:
        raise ValueError(f"{kind} takes a single operand")
    if kind == "neg":
        return ctx.neg(a)
    if kind == "abs":
        return ctx.abs(a)
    if kind in _UNARY:
        return ctx.func(kind, a)
    raise ValueError(f"unknown operation {kind!r}")
