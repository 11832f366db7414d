"""Exact uniform-Bernoulli probabilities of pulled-back cylinder events.

Every constraint ``(Phi^(m,n) x)_j = s`` is an affine equation over Z_a in
the symbols of ``x`` on a finite set of cells, so an event is a linear system.
For prime ``a`` its solution count is ``a^(|W| - rank)``; otherwise all
``a^|W|`` assignments of the cells ``W`` are enumerated in chunks.
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import BudgetExceeded, ParseError
from .lca import ActionIndex, Interval, LocalRule, needed_support, rule_power

DEFAULT_BUDGET = 2**24
_CHUNK = 1 << 16
_DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class Cylinder:
    """Configurations with ``x[lo + i] == symbols[i]`` for every ``i``."""

    lo: int
    symbols: tuple

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))
        if not self.symbols:
            raise ValueError("a cylinder fixes at least one coordinate")
        if min(self.symbols) < 0:
            raise ValueError("symbols must be nonnegative")

    @property
    def hi(self) -> int:
        return self.lo + len(self.symbols) - 1

    @property
    def interval(self) -> Interval:
        return Interval(self.lo, self.hi)

    def check_alphabet(self, a: int):
        if max(self.symbols) >= a:
            raise ValueError(f"cylinder {self} has symbols outside [0, {a})")

    def shifted(self, by: int) -> "Cylinder":
        return Cylinder(self.lo + by, self.symbols)

    def literal(self) -> str:
        return f"[{self.lo}:" + "".join(_DIGITS[s] for s in self.symbols) + "]"

    def __str__(self):
        return self.literal()


_CYL_RE = re.compile(r"\[(-?\d+):([0-9a-z]+)\]")


def parse_cylinder(text: str) -> Cylinder:
    """Parse ``[<lo>:<sym>...<sym>]``, e.g. ``[0:0]`` or ``[-1:01]``."""
    m = _CYL_RE.fullmatch(text)
    if m is None:
        raise ParseError(f"bad cylinder literal {text!r}")
    return Cylinder(int(m.group(1)), tuple(_DIGITS.index(c) for c in m.group(2)))


@dataclass(frozen=True)
class CylinderPartition:
    """The partition xi(-M, M) of configurations by their values on [-M, M]."""

    M: int
    a: int

    @property
    def interval(self) -> Interval:
        return Interval(-self.M, self.M)

    def __len__(self):
        return self.a ** (2 * self.M + 1)

    def atoms(self) -> Iterator[Cylinder]:
        width = 2 * self.M + 1
        for code in range(len(self)):
            syms = [(code // self.a**i) % self.a for i in range(width)]
            yield Cylinder(-self.M, tuple(syms))


@functools.total_ordering
@dataclass(frozen=True, eq=False)
class ExactProb:
    """The probability ``count / a**w``."""

    count: int
    w: int
    a: int

    def __post_init__(self):
        if self.w < 0 or not 0 <= self.count <= self.a**self.w:
            raise ValueError(f"invalid probability {self.count}/{self.a}^{self.w}")

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.count, self.a**self.w)

    def canonical(self) -> "ExactProb":
        count, w = self.count, self.w
        if count == 0:
            return ExactProb(0, 0, self.a)
        while w and count % self.a == 0:
            count //= self.a
            w -= 1
        return ExactProb(count, w, self.a)

    def __float__(self):
        return self.count / self.a**self.w

    def __mul__(self, other: "ExactProb") -> "ExactProb":
        if other.a != self.a:
            return NotImplemented
        return ExactProb(self.count * other.count, self.w + other.w, self.a)

    def __eq__(self, other):
        if isinstance(other, ExactProb):
            return self.fraction == other.fraction
        if isinstance(other, (int, Fraction)):
            return self.fraction == other
        return NotImplemented

    def __lt__(self, other):
        other = other.fraction if isinstance(other, ExactProb) else Fraction(other)
        return self.fraction < other

    def __hash__(self):
        return hash(self.fraction)

    def __str__(self):
        c = self.canonical()
        return f"{c.count}/{c.a}^{c.w}"

    def __repr__(self):
        return f"ExactProb({self.count}/{self.a}^{self.w})"


@dataclass(frozen=True)
class EventSpec:
    """The event ``intersection over i of Phi^{-(m_i,n_i)} B_i``."""

    constraints: tuple

    def __post_init__(self):
        cons = tuple((act if isinstance(act, ActionIndex) else ActionIndex(*act), cyl)
                     for act, cyl in self.constraints)
        if not cons:
            raise ValueError("an event needs at least one constraint")
        object.__setattr__(self, "constraints", cons)


def cylinder_measure(B: Cylinder, a: int) -> ExactProb:
    B.check_alphabet(a)
    return ExactProb(1, len(B.symbols), a)


def pullback_support(B: Cylinder, act: ActionIndex, rule: LocalRule) -> Interval:
    return needed_support(B.interval, act, rule)


class LinearForms:
    """Rows ``F`` such that observation ``r`` equals ``F[r] . x[cells] mod a``.

    One row per (action, coordinate) pair, in the order given.
    """

    def __init__(self, rule: LocalRule, observations: Sequence[tuple[ActionIndex, Interval]]):
        self.rule = rule
        supports = [needed_support(iv, act, rule) for act, iv in observations]
        cells = sorted({c for s in supports for c in range(s.lo, s.hi + 1)})
        self.cells = cells
        index = {c: i for i, c in enumerate(cells)}
        rows = []
        for act, iv in observations:
            kernel = rule_power(rule, act.m)
            for j in range(iv.lo, iv.hi + 1):
                row = np.zeros(len(cells), dtype=np.int64)
                start = j + act.n + act.m * rule.min_dep
                for d, c in enumerate(kernel):
                    if c:
                        row[index[start + d]] = c
                rows.append(row)
        self.matrix = np.array(rows, dtype=np.int64).reshape(len(rows), len(cells))
        self.supports = supports

    @property
    def hull(self) -> Interval:
        return Interval(self.cells[0], self.cells[-1])

    def assignment_count(self) -> int:
        return self.rule.a ** len(self.cells)

    def check_budget(self, budget: int):
        need = self.assignment_count()
        if need > budget:
            raise BudgetExceeded(
                f"enumeration needs {self.rule.a}^{len(self.cells)} = {need} assignments, "
                f"budget is {budget}",
                needed=need,
                budget=budget,
            )

    def evaluate_chunks(self, chunk: int = _CHUNK) -> Iterator[np.ndarray]:
        """Yield observation values for consecutive blocks of assignments."""
        a = self.rule.a
        nw = len(self.cells)
        total = a**nw
        powers = a ** np.arange(nw, dtype=np.int64)
        ft = self.matrix.T
        for start in range(0, total, chunk):
            idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
            X = (idx[:, None] // powers[None, :]) % a
            yield (X @ ft) % a


def solve_count_mod_p(A: np.ndarray, rhs: np.ndarray, p: int) -> tuple[int, bool]:
    """Rank of ``A`` over GF(p) and whether ``A x = rhs`` is consistent."""
    M = np.concatenate([A % p, (rhs % p)[:, None]], axis=1).astype(np.int64)
    nrows, ncols = M.shape[0], M.shape[1] - 1
    rank = 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, nrows) if M[r, col]), None)
        if pivot is None:
            continue
        if pivot != rank:
            M[[rank, pivot]] = M[[pivot, rank]]
        M[rank] = (M[rank] * pow(int(M[rank, col]), -1, p)) % p
        others = np.nonzero(M[:, col])[0]
        for r in others:
            if r != rank:
                M[r] = (M[r] - M[r, col] * M[rank]) % p
        rank += 1
        if rank == nrows:
            break
    consistent = not np.any((M[rank:, :ncols] == 0).all(axis=1) & (M[rank:, ncols] != 0))
    return rank, bool(consistent)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    f = 2
    while f * f <= n:
        if n % f == 0:
            return False
        f += 1
    return True


def _event_system(E: EventSpec, rule: LocalRule) -> tuple[LinearForms, np.ndarray]:
    for _, cyl in E.constraints:
        cyl.check_alphabet(rule.a)
    forms = LinearForms(rule, [(act, cyl.interval) for act, cyl in E.constraints])
    rhs = np.array([s for _, cyl in E.constraints for s in cyl.symbols], dtype=np.int64)
    return forms, rhs


def event_measure(
    E: EventSpec, rule: LocalRule, budget: int = DEFAULT_BUDGET, method: str = "auto"
) -> ExactProb:
    """Exact measure of the event; ``method`` is ``auto``, ``field`` or ``enumerate``.

    Inconsistent systems give probability 0.  Enumeration raises
    :class:`BudgetExceeded` when ``a**|W|`` exceeds ``budget``.
    """
    forms, rhs = _event_system(E, rule)
    a = rule.a
    nw = len(forms.cells)
    if method == "auto":
        method = "field" if is_prime(a) else "enumerate"
    if method == "field":
        if not is_prime(a):
            raise ValueError(f"field method needs prime a, got {a}")
        rank, ok = solve_count_mod_p(forms.matrix, rhs, a)
        return ExactProb(a ** (nw - rank) if ok else 0, nw, a)
    if method != "enumerate":
        raise ValueError(f"unknown method {method!r}")
    forms.check_budget(budget)
    count = 0
    for vals in forms.evaluate_chunks():
        count += int(np.count_nonzero((vals == rhs[None, :]).all(axis=1)))
    return ExactProb(count, nw, a)
