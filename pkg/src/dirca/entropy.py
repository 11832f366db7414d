"""Join-partition entropies along a sequence S of action indices.

The partition is always xi(-M, M).  ``H_l`` is the entropy of the join of
``Phi^{-(m_i,n_i)} xi(-M, M)`` over the identity point ``(0, 0)`` and the
first ``l`` points of S, so ``H_0 = (2M+1) log a``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .cone import SequenceS, validate_sequence
from .errors import HypothesisViolation
from .lca import IDENTITY, Interval, LocalRule
from .measure import DEFAULT_BUDGET, ExactProb, LinearForms


def _codes(vals: np.ndarray, a: int) -> np.ndarray:
    # one integer code per row; base-a digits, first column least significant
    powers = a ** np.arange(vals.shape[1], dtype=np.int64)
    return vals @ powers


def _decode(code: int, a: int, width: int) -> tuple:
    return tuple((code // a**i) % a for i in range(width))


def _code_fits(a: int, width: int) -> bool:
    return width * math.log2(a) < 62


def _observe(points, M: int, rule: LocalRule, extra=()):
    obs = [(p, Interval(-M, M)) for p in points]
    obs.extend(extra)
    return LinearForms(rule, obs)


def _count_labels(forms: LinearForms, width: int, budget: int) -> Counter:
    forms.check_budget(budget)
    a = forms.rule.a
    if not _code_fits(a, width):
        raise ValueError("label space too large to encode; reduce M or the prefix length")
    counts: Counter = Counter()
    for vals in forms.evaluate_chunks():
        uniq, cnt = np.unique(_codes(vals[:, :width], a), return_counts=True)
        counts.update(dict(zip(uniq.tolist(), cnt.tolist())))
    return counts


def entropy_from_counts(counts, a: int, w: int) -> float:
    """``-sum p log p`` (nats) for atom probabilities ``count / a**w``."""
    total = a**w
    s = math.fsum(c * math.log(c) for c in counts)
    return w * math.log(a) - s / total


@dataclass
class JoinAtoms:
    points: tuple
    M: int
    a: int
    w: int
    cells: list
    counts: dict

    @property
    def window(self) -> Interval:
        return Interval(self.cells[0], self.cells[-1])

    def labels(self):
        width = 2 * self.M + 1
        for code in sorted(self.counts):
            flat = _decode(code, self.a, width * len(self.points))
            yield tuple(flat[i * width : (i + 1) * width] for i in range(len(self.points)))

    def probabilities(self) -> dict:
        width = 2 * self.M + 1
        out = {}
        for code in sorted(self.counts):
            flat = _decode(code, self.a, width * len(self.points))
            label = tuple(flat[i * width : (i + 1) * width] for i in range(len(self.points)))
            out[label] = ExactProb(self.counts[code], self.w, self.a)
        return out

    def __len__(self):
        return len(self.counts)

    @property
    def uniform(self) -> bool:
        return len(set(self.counts.values())) <= 1

    def entropy(self) -> float:
        return entropy_from_counts(self.counts.values(), self.a, self.w)

    def total(self) -> int:
        return sum(self.counts.values())


def _points(S, include_identity: bool) -> tuple:
    pts = tuple(S)
    return (IDENTITY,) + pts if include_identity else pts


def join_atoms(
    S: SequenceS,
    M: int,
    rule: LocalRule,
    budget: int = DEFAULT_BUDGET,
    include_identity: bool = True,
) -> JoinAtoms:
    """Enumerate the atoms of the join by brute force over the source cells."""
    points = _points(S, include_identity)
    if not points:
        raise ValueError("join over an empty set of points")
    forms = _observe(points, M, rule)
    width = len(points) * (2 * M + 1)
    counts = _count_labels(forms, width, budget)
    return JoinAtoms(points, M, rule.a, len(forms.cells), forms.cells, dict(counts))


def join_entropy(S, M, rule, budget=DEFAULT_BUDGET, include_identity=True) -> float:
    return join_atoms(S, M, rule, budget, include_identity).entropy()


def limsup_ratio(S: SequenceS) -> tuple[Fraction, int]:
    """Finite-data stand-in for ``limsup m_l / l``.

    Returns the maximum of ``m_l / l`` over ``l`` in the last half of the
    prefix (1-indexed) together with the first ``l`` of that tail.
    """
    if len(S) == 0:
        raise ValueError("empty sequence")
    L = len(S)
    start = L // 2 + 1
    return max(Fraction(S[l - 1].m, l) for l in range(start, L + 1)), start


def closed_form_hS(rule: LocalRule, S: SequenceS, gap_bound: int | None = None) -> float:
    """``2 r log(a) * limsup m_l / l`` once the formula's hypotheses hold."""
    report = validate_sequence(S, gap_bound=gap_bound)
    failed = [f for f in report.failed() if f != "in_cone"]
    if not rule.left_invertible:
        failed.append("left_invertible")
    if not rule.right_invertible:
        failed.append("right_invertible")
    if len(S) == 0:
        failed.append("nonempty")
    if failed:
        raise HypothesisViolation(failed)
    ratio, _ = limsup_ratio(S)
    return 2 * rule.radius * math.log(rule.a) * float(ratio)


@dataclass
class EntropyProfile:
    M: int
    H: list
    atoms: list
    uniform: list
    windows: list
    closed_form: float | None
    tail_start: int | None
    log_base: str = "nats"

    @property
    def normalized(self) -> list:
        return [h / (l + 1) for l, h in enumerate(self.H)]

    def rows(self):
        for l, h in enumerate(self.H):
            yield {
                "l": l,
                "H_nats": h,
                "H_per_step": h / (l + 1),
                "closed_form": self.closed_form,
                "atoms": self.atoms[l],
                "window_lo": self.windows[l].lo,
                "window_hi": self.windows[l].hi,
                "uniform": self.uniform[l],
            }


def hS_profile(S, M, rule, budget=DEFAULT_BUDGET) -> EntropyProfile:
    """``H_l`` for ``l = 0..len(S)`` plus the closed-form target when it applies."""
    H, atoms, uniform, windows = [], [], [], []
    for l in range(len(S) + 1):
        ja = join_atoms(S.prefix(l) if isinstance(S, SequenceS) else SequenceS(S[:l]),
                        M, rule, budget)
        H.append(ja.entropy())
        atoms.append(len(ja))
        uniform.append(ja.uniform)
        windows.append(ja.window)
    try:
        target = closed_form_hS(rule, S)
        _, tail = limsup_ratio(S)
    except HypothesisViolation:
        target, tail = None, None
    return EntropyProfile(M, H, atoms, uniform, windows, target, tail)


def sweep_M(S, Ms, rule, budget=DEFAULT_BUDGET) -> dict:
    return {M: hS_profile(S, M, rule, budget) for M in Ms}


@dataclass
class AtomStructureReport:
    passed: bool
    predicted: Interval
    atoms: int
    expected_atoms: int
    bijective: bool
    uniform: bool
    reason: str = ""
    counterexample: dict = field(default_factory=dict)


def predicted_interval(S: SequenceS, M: int, rule: LocalRule) -> Interval:
    """Cylinder interval the join should coincide with, centred at ``n_l``.

    Under ``Phi^(m,n) = T^m o sigma^n`` the last pullback lives on
    ``[n_l - (r m_l + M), n_l + (r m_l + M)]``.
    """
    if len(S) == 0:
        return Interval(-M, M)
    last = S[len(S) - 1]
    half = rule.radius * last.m + M
    return Interval(last.n - half, last.n + half)


def verify_atom_structure(S, M, rule, budget=DEFAULT_BUDGET) -> AtomStructureReport:
    """Check that the join equals the full cylinder partition of the predicted interval."""
    points = _points(S, True)
    P = predicted_interval(S, M, rule)
    forms = _observe(points, M, rule, extra=[(IDENTITY, P)])
    forms.check_budget(budget)
    a = rule.a
    width = len(points) * (2 * M + 1)
    plen = len(P)
    if not (_code_fits(a, width) and _code_fits(a, plen)):
        raise ValueError("label space too large to encode")
    pairs = set()
    label_counts: Counter = Counter()
    for vals in forms.evaluate_chunks():
        lc = _codes(vals[:, :width], a)
        pc = _codes(vals[:, width:], a)
        uniq, cnt = np.unique(lc, return_counts=True)
        label_counts.update(dict(zip(uniq.tolist(), cnt.tolist())))
        pairs.update(zip(lc.tolist(), pc.tolist()))
    expected = a**plen
    n_labels = len(label_counts)
    uniform = len(set(label_counts.values())) == 1
    bijective = len(pairs) == n_labels == expected
    report = AtomStructureReport(
        passed=bijective and uniform,
        predicted=P,
        atoms=n_labels,
        expected_atoms=expected,
        bijective=bijective,
        uniform=uniform,
    )
    if not bijective:
        by_label: dict = {}
        by_pattern: dict = {}
        for lc, pc in sorted(pairs):
            by_label.setdefault(lc, []).append(pc)
            by_pattern.setdefault(pc, []).append(lc)
        split = next((k for k, v in by_label.items() if len(v) > 1), None)
        merged = next((k for k, v in by_pattern.items() if len(v) > 1), None)
        if split is not None:
            report.reason = "an atom spans several cylinders of the predicted interval"
            report.counterexample = {
                "label": _decode(split, a, width),
                "patterns": [_decode(p, a, plen) for p in by_label[split][:2]],
            }
        elif merged is not None:
            report.reason = "a cylinder of the predicted interval is split across atoms"
            report.counterexample = {
                "pattern": _decode(merged, a, plen),
                "labels": [_decode(c, a, width) for c in by_pattern[merged][:2]],
            }
        else:
            report.reason = f"join has {n_labels} atoms, predicted {expected}"
    elif not uniform:
        report.reason = "atom measures differ"
        lo = min(label_counts, key=label_counts.get)
        hi = max(label_counts, key=label_counts.get)
        report.counterexample = {
            "light": (_decode(lo, a, width), ExactProb(label_counts[lo], len(forms.cells), a)),
            "heavy": (_decode(hi, a, width), ExactProb(label_counts[hi], len(forms.cells), a)),
        }
    return report


@dataclass
class InvarianceResult:
    equal: bool
    first: EntropyProfile
    second: EntropyProfile

    def __bool__(self):
        return self.equal


def _measure_multiset(ja: JoinAtoms) -> tuple:
    return tuple(sorted(Fraction(c, ja.a**ja.w) for c in ja.counts.values()))


def direction_invariance_check(S1, S2, M, rule, budget=DEFAULT_BUDGET) -> InvarianceResult:
    """Compare ``H_l`` along two sequences sharing their first coordinates.

    Equality is decided on the multiset of exact atom measures, so it does not
    depend on floating point.
    """
    if tuple(p.m for p in S1) != tuple(p.m for p in S2):
        raise ValueError("sequences must share the same m_i")
    for S in (S1, S2):
        if not all(p.m > p.n for p in S):
            raise ValueError("sequences must satisfy m_i > n_i")
    equal = True
    for l in range(len(S1) + 1):
        j1 = join_atoms(S1.prefix(l), M, rule, budget)
        j2 = join_atoms(S2.prefix(l), M, rule, budget)
        if _measure_multiset(j1) != _measure_multiset(j2):
            equal = False
            break
    return InvarianceResult(equal, hS_profile(S1, M, rule, budget), hS_profile(S2, M, rule, budget))


@dataclass
class IndependenceResult:
    independent: bool
    join_entropy: float
    marginal_entropies: list
    atoms: int

    def __bool__(self):
        return self.independent


def independence_join_check(
    S, M, rule, budget=DEFAULT_BUDGET, include_identity: bool = False
) -> IndependenceResult:
    """Does the join measure factor into the per-point marginals, atom by atom?

    By default only the points of S are joined, as in the definition of the
    sequence entropy itself.
    """
    ja = join_atoms(S, M, rule, budget, include_identity)
    k = len(ja.points)
    a, w = ja.a, ja.w
    marginals = [Counter() for _ in range(k)]
    labels = list(ja.labels())
    counts = [ja.counts[c] for c in sorted(ja.counts)]
    for label, c in zip(labels, counts):
        for i in range(k):
            marginals[i][label[i]] += c
    independent = len(labels) == math.prod(len(m) for m in marginals)
    if independent:
        scale = a ** (w * (k - 1))
        for label, c in zip(labels, counts):
            if c * scale != math.prod(marginals[i][label[i]] for i in range(k)):
                independent = False
                break
    marg_h = [entropy_from_counts(m.values(), a, w) for m in marginals]
    return IndependenceResult(independent, ja.entropy(), marg_h, len(labels))


def convert_entropy(h_nats: float, base: str, a: int) -> float:
    """Render nats as ``nats``, ``bits`` or base-``a`` units."""
    if base == "nats":
        return h_nats
    if base == "bits":
        return h_nats / math.log(2)
    if base == "a":
        return h_nats / math.log(a)
    raise ValueError(f"unknown log base {base!r}")
