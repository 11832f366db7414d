"""Directional cones and the finite sequences S used by the experiments."""

from __future__ import annotations

import ast
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .errors import ParseError
from .lca import ActionIndex, LocalRule


@dataclass(frozen=True)
class DirectionCone:
    """Lattice points with ``beta*m - b/2 <= n <= beta*m + b/2``."""

    beta: Fraction
    b: Fraction

    def __post_init__(self):
        object.__setattr__(self, "beta", Fraction(self.beta))
        object.__setattr__(self, "b", Fraction(self.b))
        if self.b <= 0:
            raise ValueError(f"cone width must be positive, got b={self.b}")


def cone_contains(cone: DirectionCone, p: ActionIndex) -> bool:
    center = cone.beta * p.m
    half = cone.b / 2
    return center - half <= p.n <= center + half


def cone_slice(cone: DirectionCone, m: int) -> range:
    center = cone.beta * m
    half = cone.b / 2
    return range(math.ceil(center - half), math.floor(center + half) + 1)


def cone_points(cone: DirectionCone, k: int) -> list[ActionIndex]:
    """All cone points with ``0 <= m <= k-1``, sorted by ``(m, n)``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return [ActionIndex(m, n) for m in range(k) for n in cone_slice(cone, m)]


@dataclass(frozen=True)
class SequenceS:
    """Finite prefix ``(m_1, n_1), (m_2, n_2), ...`` of a sequence in the lattice."""

    points: tuple = ()

    def __post_init__(self):
        object.__setattr__(
            self, "points", tuple(p if isinstance(p, ActionIndex) else ActionIndex(*p)
                                  for p in self.points)
        )

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def prefix(self, length: int) -> "SequenceS":
        return SequenceS(self.points[:length])

    @property
    def ms(self) -> tuple:
        return tuple(p.m for p in self.points)


@dataclass(frozen=True)
class AffineRule:
    """``n(m) = slope*m + intercept`` over the rationals."""

    slope: Fraction = Fraction(0)
    intercept: Fraction = Fraction(0)

    def __call__(self, m) -> Fraction:
        return self.slope * m + self.intercept


def _affine_eval(node) -> tuple[Fraction, Fraction]:
    # returns (slope, intercept)
    if isinstance(node, ast.Expression):
        return _affine_eval(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, int):
        return Fraction(0), Fraction(node.value)
    if isinstance(node, ast.Name) and node.id == "m":
        return Fraction(1), Fraction(0)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        s, c = _affine_eval(node.operand)
        return (-s, -c) if isinstance(node.op, ast.USub) else (s, c)
    if isinstance(node, ast.BinOp):
        ls, lc = _affine_eval(node.left)
        rs, rc = _affine_eval(node.right)
        if isinstance(node.op, ast.Add):
            return ls + rs, lc + rc
        if isinstance(node.op, ast.Sub):
            return ls - rs, lc - rc
        if isinstance(node.op, ast.Mult):
            if ls and rs:
                raise ParseError("expression is not affine in m")
            return ls * rc + rs * lc, lc * rc
        if isinstance(node.op, ast.Div):
            if rs or rc == 0:
                raise ParseError("division must be by a nonzero constant")
            return ls / rc, lc / rc
    raise ParseError(f"unsupported token in affine expression: {ast.dump(node)}")


def parse_affine(text: str) -> AffineRule:
    """Parse expressions such as ``0``, ``m-1``, ``m/2``, ``3*m/4+1``."""
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"bad affine expression {text!r}") from exc
    slope, intercept = _affine_eval(tree)
    return AffineRule(slope, intercept)


def round_half_toward_zero(x: Fraction) -> int:
    x = Fraction(x)
    mag = math.ceil(abs(x) - Fraction(1, 2))
    return mag if x >= 0 else -mag


def make_syndetic_sequence(gap: int, length: int, n_of_m: AffineRule) -> SequenceS:
    """``m_i = i*gap`` for ``i = 1..length``; ``n_i`` is ``n_of_m(m_i)`` truncated."""
    if gap < 1 or length < 1:
        raise ValueError("gap and length must be >= 1")
    pts = []
    for i in range(1, length + 1):
        m = i * gap
        pts.append(ActionIndex(m, math.trunc(n_of_m(m))))
    return SequenceS(tuple(pts))


def make_geometric_sequence(base: int, length: int, beta) -> SequenceS:
    """``m_i = base**i``, ``n_i = round(beta*m_i)`` with ties toward zero."""
    if base < 2:
        raise ValueError("base must be >= 2")
    beta = Fraction(beta)
    return SequenceS(
        tuple(ActionIndex(base**i, round_half_toward_zero(beta * base**i))
              for i in range(1, length + 1))
    )


@dataclass
class SequenceReport:
    monotone: bool
    max_gap: int | None
    syndetic: bool
    m_exceeds_n: bool
    in_cone: bool | None = None
    coverage: str | None = None
    coverage_rows: list = field(default_factory=list)

    def failed(self) -> list[str]:
        out = []
        if not self.monotone:
            out.append("monotone")
        if not self.syndetic:
            out.append("syndetic")
        if not self.m_exceeds_n:
            out.append("m_i>n_i")
        if self.in_cone is False:
            out.append("in_cone")
        return out


def _gaps(ms: tuple) -> list[int]:
    prev = 0
    out = []
    for m in ms:
        out.append(m - prev)
        prev = m
    return out


def validate_sequence(
    S: SequenceS,
    cone: DirectionCone | None = None,
    rule: LocalRule | None = None,
    M: int | None = None,
    gap_bound: int | None = None,
) -> SequenceReport:
    """Check the entropy-formula hypotheses on a finite prefix.

    Gaps are measured from ``m_0 = 0``.  Without ``gap_bound`` a prefix is
    called syndetic when the gaps in its second half never exceed the largest
    gap of its first half, i.e. the gaps are not growing.

    With ``rule`` and ``M`` the report also checks, for consecutive points,
    whether ``2(r*m_i + M) + 1 >= 2r*m_{i+1} + 1``; equality is reported as
    ``"boundary"``.
    """
    ms = S.ms
    gaps = _gaps(ms)
    monotone = all(g > 0 for g in gaps[1:]) and (not gaps or gaps[0] >= 0)
    max_gap = max(gaps) if gaps else None
    if not monotone:
        syndetic = False
    elif gap_bound is not None:
        syndetic = max_gap is None or max_gap <= gap_bound
    elif len(gaps) < 2:
        syndetic = True
    else:
        half = len(gaps) // 2
        syndetic = max(gaps[half:]) <= max(gaps[:half])
    report = SequenceReport(
        monotone=monotone,
        max_gap=max_gap,
        syndetic=syndetic,
        m_exceeds_n=all(p.m > p.n for p in S),
    )
    if cone is not None:
        report.in_cone = all(cone_contains(cone, p) for p in S)
    if rule is not None and M is not None:
        r = rule.radius
        status = "strict"
        for p, q in zip(S.points, S.points[1:]):
            lhs = 2 * (r * p.m + M) + 1
            rhs = 2 * r * q.m + 1
            row = "strict" if lhs > rhs else "boundary" if lhs == rhs else "fail"
            report.coverage_rows.append((p.m, q.m, lhs, rhs, row))
            if row == "fail":
                status = "fail"
            elif row == "boundary" and status == "strict":
                status = "boundary"
        report.coverage = status
    return report


_SYNDETIC_RE = re.compile(r"syndetic:gap=(\d+),len=(\d+),n=(.+)")
_GEOMETRIC_RE = re.compile(r"geometric:base=(\d+),len=(\d+),beta=(-?\d+(?:/\d+)?)")
_POINT_RE = re.compile(r"\((\d+),(-?\d+)\)")


def parse_sequence(text: str) -> SequenceS:
    """Parse a sequence literal (``syndetic:``, ``geometric:`` or ``explicit:``)."""
    if (m := _SYNDETIC_RE.fullmatch(text)) is not None:
        return make_syndetic_sequence(int(m.group(1)), int(m.group(2)), parse_affine(m.group(3)))
    if (m := _GEOMETRIC_RE.fullmatch(text)) is not None:
        return make_geometric_sequence(int(m.group(1)), int(m.group(2)), Fraction(m.group(3)))
    if text.startswith("explicit:"):
        body = text[len("explicit:"):]
        parts = body.split(";") if body else []
        pts = []
        for part in parts:
            pm = _POINT_RE.fullmatch(part)
            if pm is None:
                raise ParseError(f"bad point {part!r} in sequence literal")
            pts.append(ActionIndex(int(pm.group(1)), int(pm.group(2))))
        return SequenceS(tuple(pts))
    raise ParseError(f"bad sequence literal {text!r}")


def points_from(pairs: Iterable) -> SequenceS:
    return SequenceS(tuple(ActionIndex(*p) for p in pairs))
