"""Cone-averaged correlation decay and directional Birkhoff averages."""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .cone import DirectionCone, cone_points, cone_slice
from .errors import BudgetExceeded, WindowTooSmall
from .lca import IDENTITY, ActionIndex, Interval, LocalRule, WindowConfig, needed_support, orbit_samples
from .measure import DEFAULT_BUDGET, Cylinder, EventSpec, LinearForms, cylinder_measure, event_measure

PROBE_M = tuple(range(6))


def correlation_deviation(B: Cylinder, C: Cylinder, act: ActionIndex, rule: LocalRule,
                          budget: int = DEFAULT_BUDGET) -> Fraction:
    """``|mu(Phi^{-act} B  &  C) - mu(B) mu(C)|`` as an exact rational."""
    joint = event_measure(EventSpec(((act, B), (IDENTITY, C))), rule, budget)
    return abs(joint.fraction - cylinder_measure(B, rule.a).fraction
               * cylinder_measure(C, rule.a).fraction)


@dataclass
class DeviationSeries:
    cone: DirectionCone
    B: Cylinder
    C: Cylinder
    ks: list
    cone_sizes: list
    exact: list

    @property
    def values(self) -> list:
        return [float(d) for d in self.exact]

    def rows(self):
        for k, size, d in zip(self.ks, self.cone_sizes, self.exact):
            yield {"k": k, "cone_size": size, "D_k": float(d), "exact": True}


def _slice_deviation(B, C, cone, m, rule, budget) -> Fraction:
    total = Fraction(0)
    for n in cone_slice(cone, m):
        act = ActionIndex(m, n)
        try:
            total += correlation_deviation(B, C, act, rule, budget)
        except BudgetExceeded as exc:
            raise BudgetExceeded(f"cone point {act}: {exc}", exc.needed, exc.budget) from exc
    return total


def cone_average_deviation_exact(B, C, cone, k, rule, budget=DEFAULT_BUDGET) -> Fraction:
    pts = cone_points(cone, k)
    total = sum((_slice_deviation(B, C, cone, m, rule, budget) for m in range(k)), Fraction(0))
    return total / len(pts)


def cone_average_deviation(B, C, cone, k, rule, budget=DEFAULT_BUDGET) -> float:
    """Average of :func:`correlation_deviation` over the first ``k`` cone slices."""
    return float(cone_average_deviation_exact(B, C, cone, k, rule, budget))


def decay_profile(B, C, cone, k_max, rule, budget=DEFAULT_BUDGET) -> DeviationSeries:
    """``D_k`` for ``k = 1..k_max``; each slice is evaluated once and reused."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    ks, sizes, exact = [], [], []
    total = Fraction(0)
    size = 0
    for m in range(k_max):
        total += _slice_deviation(B, C, cone, m, rule, budget)
        size += len(cone_slice(cone, m))
        ks.append(m + 1)
        sizes.append(size)
        exact.append(total / size)
    return DeviationSeries(cone, B, C, ks, sizes, exact)


@dataclass
class IndependenceRow:
    m: int
    n: int
    passed: bool
    boundary: bool
    disjoint: bool


def independence_point_check(M: int, N: int, rule: LocalRule, n_max: int,
                             budget: int = DEFAULT_BUDGET,
                             m_probe: Sequence[int] = PROBE_M) -> list[IndependenceRow]:
    """Exact product-measure test between ``Phi^{-(m,n)} xi(-M,M)`` and ``xi(-N,N)``.

    Rows cover ``n`` from ``N + M`` (the boundary row, reported but not part of
    the claim) up to ``n_max``.  A row passes when every atom pair satisfies
    ``mu(Phi^{-(m,n)} A & B) = mu(Phi^{-(m,n)} A) mu(B)``.
    """
    if not rule.one_sided:
        raise ValueError("independence points are only claimed for one-sided rules")
    rows = []
    wa, wb = 2 * M + 1, 2 * N + 1
    for n in range(N + M, n_max + 1):
        for m in m_probe:
            act = ActionIndex(m, n)
            forms = LinearForms(rule, [(act, Interval(-M, M)), (IDENTITY, Interval(-N, N))])
            forms.check_budget(budget)
            powers_a = rule.a ** np.arange(wa, dtype=np.int64)
            powers_b = rule.a ** np.arange(wb, dtype=np.int64)
            joint: Counter = Counter()
            for vals in forms.evaluate_chunks():
                ca = vals[:, :wa] @ powers_a
                cb = vals[:, wa:] @ powers_b
                uniq, cnt = np.unique(ca * (rule.a**wb) + cb, return_counts=True)
                joint.update(dict(zip(uniq.tolist(), cnt.tolist())))
            left: Counter = Counter()
            right: Counter = Counter()
            for code, c in joint.items():
                left[code // rule.a**wb] += c
                right[code % rule.a**wb] += c
            total = forms.assignment_count()
            passed = len(joint) == len(left) * len(right) and all(
                c * total == left[code // rule.a**wb] * right[code % rule.a**wb]
                for code, c in joint.items()
            )
            sup = forms.supports[0]
            rows.append(IndependenceRow(m, n, passed, n == N + M, sup.lo > N or sup.hi < -N))
    return rows


def derive_seed(master: int, *ids) -> int:
    """64-bit seed for one experiment stream.

    The master seed and the ids are joined with ``/`` and hashed with
    BLAKE2b (8-byte digest, little-endian).
    """
    key = "/".join(str(v) for v in (master, *ids)).encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def sample_config(seed: int, interval: Interval, a: int = 2) -> WindowConfig:
    """I.i.d. uniform symbols on ``interval`` from NumPy's PCG64 seeded by ``seed``."""
    iv = Interval(*interval)
    rng = np.random.default_rng(seed)
    return WindowConfig(iv.lo, rng.integers(0, a, size=len(iv), dtype=np.int64), a)


def orbit_window(direction: ActionIndex, B: Cylinder, N: int, rule: LocalRule) -> Interval:
    """Interval of ``x`` read by the first ``N`` orbit points of ``B``."""
    last = needed_support(B.interval, direction.scaled(max(N - 1, 0)), rule)
    return B.interval.hull(last)


@dataclass
class OrbitStats:
    seed: int | None
    direction: ActionIndex
    N: int
    hits: np.ndarray
    target: Fraction

    @property
    def averages(self) -> np.ndarray:
        return np.cumsum(self.hits) / np.arange(1, self.N + 1)

    @property
    def final(self) -> float:
        return float(self.hits.sum()) / self.N

    @property
    def deviation(self) -> float:
        return abs(self.final - float(self.target))

    def checkpoints(self, per_decade: int = 4) -> list[int]:
        ts = {1, self.N}
        t = 1.0
        while t < self.N:
            ts.add(int(round(t)))
            t *= 10 ** (1 / per_decade)
        return sorted(ts)


def birkhoff_average(x: WindowConfig, direction: ActionIndex, B: Cylinder, N: int,
                     rule: LocalRule, seed: int | None = None) -> OrbitStats:
    """Running averages of ``1_B(Phi^{k*dir} x)`` for ``k = 0..N-1``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    B.check_alphabet(rule.a)
    need = orbit_window(direction, B, N, rule)
    if not x.interval.contains(need):
        raise WindowTooSmall(f"orbit needs {need}, window is {x.interval}", required=need)
    want = np.array(B.symbols, dtype=np.int64)
    first = x.symbols[B.lo - x.lo : B.hi - x.lo + 1]
    hits = np.empty(N, dtype=np.int64)
    hits[0] = int(np.array_equal(first, want))
    if N > 1:
        obs = orbit_samples(x, rule, direction, B.interval, N - 1)
        hits[1:] = (obs == want[None, :]).all(axis=1)
    return OrbitStats(seed, direction, N, hits, cylinder_measure(B, rule.a).fraction)


@dataclass
class OrbitReport:
    tolerance: float
    stats: list = field(default_factory=list)

    @property
    def deviations(self) -> list:
        return [s.deviation for s in self.stats]

    @property
    def within(self) -> int:
        return sum(d < self.tolerance for d in self.deviations)

    @property
    def pass_fraction(self) -> float:
        return self.within / len(self.stats) if self.stats else 0.0


def orbit_frequency_report(seeds: Sequence[int], direction: ActionIndex, B: Cylinder, N: int,
                           rule: LocalRule, tolerance: float = 0.01) -> OrbitReport:
    window = orbit_window(direction, B, N, rule)
    report = OrbitReport(tolerance)
    for s in seeds:
        x = sample_config(s, window, rule.a)
        report.stats.append(birkhoff_average(x, direction, B, N, rule, seed=s))
    return report
