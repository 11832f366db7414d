"""Linear cellular automata over Z_a on finite windows.

A configuration is only ever known on a finite interval, so every operation
returns just the coordinates that are fully determined by its input.  The
action used throughout is ``Phi^(m,n) = T^m o sigma^n`` with
``(sigma x)_i = x_{i+1}``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels
from .errors import AllZeroRule, BadAlphabet, ParseError, WindowTooSmall


class Interval(NamedTuple):
    """Closed integer interval ``[lo, hi]``."""

    lo: int
    hi: int

    def __len__(self):
        return max(0, self.hi - self.lo + 1)

    def contains(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def shifted(self, by: int) -> "Interval":
        return Interval(self.lo + by, self.hi + by)


@dataclass(frozen=True)
class LocalRule:
    """Linear local rule ``f(x_{-r..r}) = sum coeffs[i] * x_{i-r} mod a``.

    Coefficients are reduced mod ``a`` on construction.
    """

    a: int
    coeffs: tuple

    def __post_init__(self):
        if self.a < 2:
            raise BadAlphabet(f"alphabet size must be >= 2, got {self.a}")
        if len(self.coeffs) % 2 != 1 or len(self.coeffs) < 3:
            raise ValueError("coeffs must have odd length 2r+1 with r >= 1")
        reduced = tuple(int(c) % self.a for c in self.coeffs)
        if not any(reduced):
            raise AllZeroRule(f"every coefficient of {self.coeffs} vanishes mod {self.a}")
        object.__setattr__(self, "coeffs", reduced)

    @property
    def radius(self) -> int:
        return len(self.coeffs) // 2

    def coeff(self, i: int) -> int:
        return self.coeffs[i + self.radius]

    @property
    def min_dep(self) -> int:
        return next(i for i in range(-self.radius, self.radius + 1) if self.coeff(i))

    @property
    def max_dep(self) -> int:
        return next(i for i in range(self.radius, -self.radius - 1, -1) if self.coeff(i))

    @property
    def span(self) -> int:
        return self.max_dep - self.min_dep

    @property
    def left_invertible(self) -> bool:
        return math.gcd(self.coeff(-self.radius), self.a) == 1

    @property
    def right_invertible(self) -> bool:
        return math.gcd(self.coeff(self.radius), self.a) == 1

    @property
    def one_sided(self) -> bool:
        return all(self.coeff(i) == 0 for i in range(-self.radius, 0))

    def literal(self) -> str:
        return f"a={self.a};coeffs=" + ",".join(str(c) for c in self.coeffs)

    def __str__(self):
        return self.literal()


def validate_rule(a: int, coeffs: Sequence[int]) -> LocalRule:
    return LocalRule(int(a), tuple(int(c) for c in coeffs))


_RULE_RE = re.compile(r"a=(\d+);coeffs=(-?\d+(?:,-?\d+)*)")


def parse_rule(text: str) -> LocalRule:
    """Parse ``a=<int>;coeffs=<c_-r>,...,<c_r>`` (no whitespace allowed)."""
    match = _RULE_RE.fullmatch(text)
    if match is None:
        raise ParseError(f"bad rule literal {text!r}; expected a=<int>;coeffs=<c>,...")
    a = int(match.group(1))
    coeffs = [int(c) for c in match.group(2).split(",")]
    try:
        return validate_rule(a, coeffs)
    except (BadAlphabet, AllZeroRule, ValueError) as exc:
        raise ParseError(f"bad rule literal {text!r}: {exc}") from exc


@dataclass(frozen=True, order=True)
class ActionIndex:
    """Index ``(m, n)`` of ``Phi^(m,n) = T^m o sigma^n``; ``m >= 0``."""

    m: int
    n: int

    def __post_init__(self):
        if self.m < 0:
            raise ValueError(f"CA exponent must be nonnegative, got m={self.m}")

    def __add__(self, other: "ActionIndex") -> "ActionIndex":
        return ActionIndex(self.m + other.m, self.n + other.n)

    def scaled(self, k: int) -> "ActionIndex":
        return ActionIndex(k * self.m, k * self.n)


IDENTITY = ActionIndex(0, 0)


class WindowConfig:
    """A configuration restricted to ``[lo, lo + len - 1]``; immutable."""

    __slots__ = ("lo", "symbols", "a")

    def __init__(self, lo: int, symbols, a: int):
        if a < 2:
            raise BadAlphabet(f"alphabet size must be >= 2, got {a}")
        arr = np.array(symbols, dtype=np.int64).reshape(-1)
        if arr.size and (arr.min() < 0 or arr.max() >= a):
            raise ValueError(f"symbols must lie in [0, {a})")
        arr.setflags(write=False)
        object.__setattr__(self, "lo", int(lo))
        object.__setattr__(self, "symbols", arr)
        object.__setattr__(self, "a", int(a))

    def __setattr__(self, name, value):
        raise AttributeError("WindowConfig is immutable")

    @property
    def hi(self) -> int:
        return self.lo + len(self.symbols) - 1

    @property
    def interval(self) -> Interval:
        return Interval(self.lo, self.hi)

    def __len__(self):
        return len(self.symbols)

    def __getitem__(self, i: int) -> int:
        if not self.lo <= i <= self.hi:
            raise IndexError(f"coordinate {i} outside window {self.interval}")
        return int(self.symbols[i - self.lo])

    def restrict(self, iv: Interval) -> "WindowConfig":
        if not self.interval.contains(iv):
            raise WindowTooSmall(f"{iv} not inside {self.interval}", required=iv)
        return WindowConfig(iv.lo, self.symbols[iv.lo - self.lo : iv.hi - self.lo + 1], self.a)

    def relabeled(self, by: int) -> "WindowConfig":
        return WindowConfig(self.lo + by, self.symbols, self.a)

    def __eq__(self, other):
        if not isinstance(other, WindowConfig):
            return NotImplemented
        return (
            self.lo == other.lo
            and self.a == other.a
            and np.array_equal(self.symbols, other.symbols)
        )

    def __hash__(self):
        return hash((self.lo, self.a, self.symbols.tobytes()))

    def __repr__(self):
        body = "".join(str(int(s)) for s in self.symbols[:40])
        more = "..." if len(self) > 40 else ""
        return f"WindowConfig(lo={self.lo}, a={self.a}, [{body}{more}])"


def needed_support(target: Interval, act: ActionIndex, rule: LocalRule) -> Interval:
    """Smallest interval of ``x`` determining ``Phi^act x`` on ``target``."""
    target = Interval(*target)
    if target.hi < target.lo:
        raise ValueError("target interval is empty")
    return Interval(
        target.lo + act.n + act.m * rule.min_dep,
        target.hi + act.n + act.m * rule.max_dep,
    )


@lru_cache(maxsize=256)
def _rule_power(rule: LocalRule, m: int) -> np.ndarray:
    base = np.array(rule.coeffs[rule.min_dep + rule.radius : rule.max_dep + rule.radius + 1],
                    dtype=np.int64)
    result = np.ones(1, dtype=np.int64)
    while m:
        if m & 1:
            result = np.convolve(result, base) % rule.a
        m >>= 1
        if m:
            base = np.convolve(base, base) % rule.a
    result.setflags(write=False)
    return result


def rule_power(rule: LocalRule, m: int) -> np.ndarray:
    """Coefficients of ``T^m`` for offsets ``m*min_dep .. m*max_dep`` (mod a)."""
    if m < 0:
        raise ValueError("T is not assumed invertible; m must be >= 0")
    return _rule_power(rule, int(m))


def _check_modulus(w: WindowConfig, rule: LocalRule):
    if w.a != rule.a:
        raise ValueError(f"window alphabet {w.a} does not match rule alphabet {rule.a}")


def step_once(w: WindowConfig, rule: LocalRule) -> WindowConfig:
    _check_modulus(w, rule)
    span = rule.span
    out_len = len(w) - span
    if out_len <= 0:
        raise WindowTooSmall(
            f"window of length {len(w)} too small for a rule of span {span}"
        )
    x = w.symbols
    acc = np.zeros(out_len, dtype=np.int64)
    for d in range(rule.min_dep, rule.max_dep + 1):
        c = rule.coeff(d)
        if c:
            k = d - rule.min_dep
            acc += c * x[k : k + out_len]
    return WindowConfig(w.lo - rule.min_dep, acc % rule.a, rule.a)


def apply_action(w: WindowConfig, act: ActionIndex, rule: LocalRule) -> WindowConfig:
    """``Phi^act x`` on every coordinate determined by the window."""
    if len(w) <= act.m * rule.span:
        raise WindowTooSmall(
            f"window of length {len(w)} cannot support {act.m} steps of span {rule.span}"
        )
    for _ in range(act.m):
        w = step_once(w, rule)
    return w.relabeled(-act.n)


def eval_coordinate(w: WindowConfig, act: ActionIndex, rule: LocalRule, i: int) -> int:
    """``(Phi^act x)_i`` computed from the coefficients of ``T^m``."""
    _check_modulus(w, rule)
    sup = needed_support(Interval(i, i), act, rule)
    if not w.interval.contains(sup):
        raise WindowTooSmall(f"need {sup}, window is {w.interval}", required=sup)
    kernel = rule_power(rule, act.m)
    seg = w.symbols[sup.lo - w.lo : sup.hi - w.lo + 1]
    return int(np.dot(kernel, seg) % rule.a)


def _orbit_support(cells: Interval, step: ActionIndex, count: int, rule: LocalRule) -> Interval:
    first = needed_support(cells, step, rule)
    last = needed_support(cells, step.scaled(count), rule)
    return first.hull(last)


def orbit_samples(
    w: WindowConfig,
    rule: LocalRule,
    step: ActionIndex,
    cells: Interval,
    count: int,
    packed: bool | None = None,
) -> np.ndarray:
    """Sample ``(Phi^(j*step) x)`` on ``cells`` for ``j = 1..count``.

    Returns an array of shape ``(count, len(cells))``.  The row is stepped in
    place and the shift is absorbed by relabeling, so the cost is one CA
    step per cell per unit of ``step.m``.  For ``a == 2`` the row is
    bit-packed (64 cells per word) unless ``packed=False``.
    """
    _check_modulus(w, rule)
    cells = Interval(*cells)
    if count <= 0:
        return np.zeros((0, len(cells)), dtype=np.int64)
    need = _orbit_support(cells, step, count, rule)
    if not w.interval.contains(need):
        raise WindowTooSmall(f"orbit needs {need}, window is {w.interval}", required=need)
    w = w.restrict(need)  # cells outside the light cone only cost time
    if packed is None:
        packed = rule.a == 2
    if packed and rule.a != 2:
        raise ValueError("bit-packed stepping requires a == 2")
    positions = np.arange(cells.lo - w.lo, cells.hi - w.lo + 1, dtype=np.int64)
    drift = step.m * rule.min_dep + step.n
    offsets = np.array(
        [d - rule.min_dep for d in range(rule.min_dep, rule.max_dep + 1) if rule.coeff(d)],
        dtype=np.int64,
    )
    if packed:
        words = _kernels.pack_bits(w.symbols, spare=rule.span // 64 + 2)
        out = _kernels.packed_walk(words, len(w), offsets, rule.span, step.m, drift,
                                   positions, count)
        return out.astype(np.int64)
    coeffs = np.array([rule.coeff(int(d) + rule.min_dep) for d in offsets], dtype=np.int64)
    cells_buf = np.array(w.symbols, dtype=np.int64)
    return _kernels.generic_walk(cells_buf, rule.a, offsets, coeffs, rule.span, step.m,
                                 drift, positions, count)


def column_trace(
    w: WindowConfig, rule: LocalRule, steps: int, col: int, packed: bool | None = None
) -> np.ndarray:
    """``((T^t x)_col)`` for ``t = 1..steps``; bit-packed when ``a == 2``."""
    return orbit_samples(w, rule, ActionIndex(1, 0), Interval(col, col), steps, packed)[:, 0]
