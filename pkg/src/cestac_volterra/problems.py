"""Built-in test problems and the line-based problem file format.

A problem file looks like::

    # comment
    label = my problem
    interval = 0 1
    center = 0
    point = 0.5
    segment: rho_lo=0; rho_hi=r; kernel=1
    rhs = r^2/2
    exact = r
    weight = abel          # optional
    transform = sin(w)     # optional
"""

from __future__ import annotations

import math
from pathlib import Path

from .collocation import ProblemError, ProblemSpec, Segment, validate_problem
from .expr import ParseError, parse, to_text

_R = ("r",)
_RS = ("r", "s")
_W = ("w",)

_EXAMPLES: dict[int, dict] = {
    1: dict(
        label="example 1: weakly regular, four segments",
        interval=(0.0, 2.0),
        point=0.2,
        segments=[
            ("0", "r/8", "1+r+s"),
            ("r/8", "r/2", "2+r*s"),
            ("r/2", "3*r/4", "r+s-1"),
            ("3*r/4", "r", "-4"),
        ],
        rhs=(
            "(1/128)*(-4 - (1/8)*(16*r + 69*r^2 + 15*r^3) - exp(r/4)*(r^2 - 13*r + 12)"
            " + exp(r)*(4*r^2 - 16*r + 28) + exp(3*r/2)*(14*r + 20) - 32*exp(2*r))"
        ),
        exact="(exp(2*r) - 1)/8",
    ),
    2: dict(
        label="example 2: constant kernels, sine curves",
        interval=(0.0, 3 * math.pi / 2),
        point=0.5,
        segments=[
            ("0", "sin(r/2)", "2"),
            ("sin(r/2)", "2*sin(r/3)", "-1"),
            ("2*sin(r/3)", "r", "1"),
        ],
        rhs="r^3/3 + sin(r/2)^3 - (16/3)*sin(r/3)^3",
        exact="r^2",
    ),
    3: dict(
        label="example 3: polynomial solution",
        interval=(0.0, 2.0),
        point=0.7,
        segments=[
            ("0", "r/4", "1+r+s"),
            ("r/4", "r/2", "2+r*s"),
            ("r/2", "r", "1+r+s"),
        ],
        rhs="31*r^6/40960 + 1099*r^5/20480 + 271*r^4/8192",
        exact="r^3/8",
    ),
    4: dict(
        label="example 4: linear Abel equation",
        interval=(0.0, 1.0),
        point=0.1,
        segments=[("0", "r", "1")],
        rhs="(2/3)*pi*r^3",
        exact="pi*r^3",
        weight="abel",
    ),
    5: dict(
        label="example 5: nonlinear Abel equation",
        interval=(0.0, 1.0),
        point=0.4,
        segments=[("0", "r", "1")],
        rhs="pi + r",
        exact="sin(r+2)",
        weight="abel",
        transform="sin(w)",
    ),
}

EXAMPLE_IDS = tuple(sorted(_EXAMPLES))


def _build(d: dict) -> ProblemSpec:
    a, b = d["interval"]
    segs = tuple(Segment(parse(lo, _R), parse(hi, _R), parse(k, _RS)) for lo, hi, k in d["segments"])
    return ProblemSpec(
        segments=segs,
        rhs=parse(d["rhs"], _R),
        a=a,
        b=b,
        c=d.get("center", a),
        point=d["point"],
        weight=d.get("weight", "none"),
        transform=parse(d["transform"], _W) if d.get("transform") else None,
        exact=parse(d["exact"], _R) if d.get("exact") else None,
        label=d["label"],
    )


def builtin_example(example_id: int) -> ProblemSpec:
    if example_id not in _EXAMPLES:
        raise ValueError(f"unknown example {example_id}; choose from {list(EXAMPLE_IDS)}")
    return _build(_EXAMPLES[example_id])


class ProblemFileError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None) -> None:
        self.line = line
        where = ":".join(str(x) for x in (path, line) if x is not None)
        super().__init__(f"{where}: {message}" if where else message)


_REQUIRED = ("interval", "point", "rhs", "label")
_SCALAR_KEYS = {"interval", "center", "point", "rhs", "weight", "transform", "exact", "label"}


def _expr(text: str, allowed: tuple[str, ...], lineno: int, path: str | None):
    try:
        return parse(text, allowed)
    except ParseError as exc:
        raise ProblemFileError(f"column {exc.position + 1}: {exc}", lineno, path) from None


def _float(text: str, key: str, lineno: int, path: str | None) -> float:
    try:
        return float(text)
    except ValueError:
        raise ProblemFileError(f"{key}: not a number: {text!r}", lineno, path) from None


def parse_problem(text: str, path: str | None = None) -> ProblemSpec:
    """Parse and validate problem-file ``text``."""
    fields: dict[str, tuple[str, int]] = {}
    segments: list[Segment] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("segment:"):
            parts = {}
            for item in line[len("segment:") :].split(";"):
                key, sep, value = item.partition("=")
                if not sep:
                    raise ProblemFileError(f"malformed segment field {item.strip()!r}", lineno, path)
                parts[key.strip()] = value.strip()
            missing = [k for k in ("rho_lo", "rho_hi", "kernel") if k not in parts]
            if missing:
                raise ProblemFileError(f"segment is missing {', '.join(missing)}", lineno, path)
            segments.append(
                Segment(
                    _expr(parts["rho_lo"], _R, lineno, path),
                    _expr(parts["rho_hi"], _R, lineno, path),
                    _expr(parts["kernel"], _RS, lineno, path),
                )
            )
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in _SCALAR_KEYS:
            raise ProblemFileError(f"unrecognised line {raw.strip()!r}", lineno, path)
        if key in fields:
            raise ProblemFileError(f"duplicate key {key!r}", lineno, path)
        fields[key] = (value.strip(), lineno)

    for key in _REQUIRED:
        if key not in fields:
            raise ProblemFileError(f"missing required key {key!r}", path=path)
    if not segments:
        raise ProblemFileError("at least one segment line is required", path=path)

    text_i, ln = fields["interval"]
    bounds = text_i.split()
    if len(bounds) != 2:
        raise ProblemFileError("interval needs two numbers: a b", ln, path)
    a, b = (_float(x, "interval", ln, path) for x in bounds)
    center = _float(fields["center"][0], "center", fields["center"][1], path) if "center" in fields else a
    weight = fields.get("weight", ("none", None))[0]
    problem = ProblemSpec(
        segments=tuple(segments),
        rhs=_expr(fields["rhs"][0], _R, fields["rhs"][1], path),
        a=a,
        b=b,
        c=center,
        point=_float(fields["point"][0], "point", fields["point"][1], path),
        weight=weight,
        transform=_expr(fields["transform"][0], _W, fields["transform"][1], path) if "transform" in fields else None,
        exact=_expr(fields["exact"][0], _R, fields["exact"][1], path) if "exact" in fields else None,
        label=fields["label"][0],
    )
    try:
        validate_problem(problem)
    except ProblemError as exc:
        key = "rhs" if "rhs" in str(exc) else "point" if "point" in str(exc) else "weight" if "weight" in str(exc) else None
        raise ProblemFileError(str(exc), fields[key][1] if key in fields else None, path) from None
    return problem


def load_problem(path: str | Path) -> ProblemSpec:
    path = Path(path)
    return parse_problem(path.read_text(encoding="utf-8"), str(path))


def dump_problem(p: ProblemSpec) -> str:
    """Render ``p`` in problem-file syntax; ``parse_problem`` inverts it."""
    lines = [
        f"label = {p.label}",
        f"interval = {p.a!r} {p.b!r}",
        f"center = {p.c!r}",
    ]
    if p.point is not None:
        lines.append(f"point = {p.point!r}")
    for s in p.segments:
        lines.append(f"segment: rho_lo={to_text(s.rho_lo)}; rho_hi={to_text(s.rho_hi)}; kernel={to_text(s.kernel)}")
    lines.append(f"rhs = {to_text(p.rhs)}")
    if p.weight != "none":
        lines.append(f"weight = {p.weight}")
    if p.transform is not None:
        lines.append(f"transform = {to_text(p.transform)}")
    if p.exact is not None:
        lines.append(f"exact = {to_text(p.exact)}")
    return "\n".join(lines) + "\n"
