"""Fast exact checks behind ``dirca selftest``.  Each takes well under a second."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from . import binom, entropy, mixing
from .cone import DirectionCone, points_from
from .lca import ActionIndex, Interval, WindowConfig, apply_action, orbit_samples, parse_rule
from .measure import Cylinder, EventSpec, event_measure

RULE90 = "a=2;coeffs=1,0,1"
ONE_SIDED = "a=2;coeffs=0,1,1"


def _entropy_formula():
    rule = parse_rule(RULE90)
    S = points_from((i, 0) for i in range(1, 4))
    prof = entropy.hS_profile(S, 1, rule)
    ok = all(abs(h - (2 * l + 3) * math.log(2)) < 1e-12 for l, h in enumerate(prof.H))
    return ok and all(prof.uniform), f"H={prof.H}"


def _atom_structure():
    rep = entropy.verify_atom_structure(points_from((i, 0) for i in range(1, 4)), 1,
                                        parse_rule(RULE90))
    return rep.passed, rep.reason


def _semigroup():
    rule = parse_rule(RULE90)
    rng = np.random.default_rng(0)
    w = WindowConfig(-20, rng.integers(0, 2, 41), 2)
    a, b = ActionIndex(2, 1), ActionIndex(3, -2)
    lhs = apply_action(apply_action(w, a, rule), b, rule)
    rhs = apply_action(w, a + b, rule)
    common = Interval(max(lhs.lo, rhs.lo), min(lhs.hi, rhs.hi))
    return lhs.restrict(common) == rhs.restrict(common), ""


def _packed_vs_generic():
    rule = parse_rule(ONE_SIDED)
    rng = np.random.default_rng(1)
    w = WindowConfig(0, rng.integers(0, 2, 400), 2)
    p = orbit_samples(w, rule, ActionIndex(1, 1), Interval(0, 3), 150, packed=True)
    g = orbit_samples(w, rule, ActionIndex(1, 1), Interval(0, 3), 150, packed=False)
    return bool(np.array_equal(p, g)), ""


def _field_vs_enumeration():
    rule = parse_rule(RULE90)
    E = EventSpec(((ActionIndex(1, 0), Cylinder(0, (1,))), (ActionIndex(0, 0), Cylinder(0, (0,)))))
    f, e = event_measure(E, rule, method="field"), event_measure(E, rule, method="enumerate")
    return f == e == Fraction(1, 4), f"{f} vs {e}"


def _decay_first_value():
    B = Cylinder(0, (0, 0))
    series = mixing.decay_profile(B, B, DirectionCone(1, 2), 1, parse_rule(ONE_SIDED))
    return series.exact[0] == Fraction(5, 48), str(series.exact[0])


def _independence_points():
    rows = mixing.independence_point_check(1, 1, parse_rule(ONE_SIDED), 5, m_probe=range(3))
    return all(r.passed for r in rows if not r.boundary), ""


def _binom_oracles():
    for k, N in ((2, 1), (3, 2), (5, 3)):
        x = binom.DigitStream.random(k, binom.required_length(N, 200), 7)
        for v in binom.VARIANTS:
            if not binom.engine_vs_lucas_check(x, N, 200, v):
                return False, f"k={k} N={N} {v}"
            if not np.array_equal(binom.sequence_s_jump(x, N, 200, v),
                                  binom.sequence_s_direct(x, N, 200, v)):
                return False, f"jump k={k} N={N} {v}"
    return True, ""


CHECKS = {
    "entropy_formula": _entropy_formula,
    "atom_structure": _atom_structure,
    "semigroup": _semigroup,
    "packed_vs_generic": _packed_vs_generic,
    "field_vs_enumeration": _field_vs_enumeration,
    "decay_first_value": _decay_first_value,
    "independence_points": _independence_points,
    "binom_oracles": _binom_oracles,
}


def run_checks() -> list[tuple[str, bool, str]]:
    out = []
    for name, fn in CHECKS.items():
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed check, not a crashed suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail if not ok else ""))
    return out
