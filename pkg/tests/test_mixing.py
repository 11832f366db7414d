import random
from fractions import Fraction

import numpy as np
import pytest

from dirca.cone import DirectionCone, cone_points
from dirca.errors import WindowTooSmall
from dirca.lca import IDENTITY, ActionIndex, Interval, WindowConfig, parse_rule
from dirca.measure import Cylinder, pullback_support
from dirca.mixing import (
    birkhoff_average, cone_average_deviation, cone_average_deviation_exact,
    correlation_deviation, decay_profile, derive_seed, independence_point_check,
    orbit_frequency_report, orbit_window, sample_config,
)

ZERO = Cylinder(0, (0,))
ZZ = Cylinder(0, (0, 0))


def test_correlation_examples(one_sided):
    assert correlation_deviation(ZZ, ZZ, ActionIndex(1, 0), one_sided) == Fraction(1, 16)
    assert correlation_deviation(ZERO, ZERO, IDENTITY, one_sided) == Fraction(1, 4)
    assert correlation_deviation(ZERO, ZERO, ActionIndex(1, 5), one_sided) == 0


def test_correlation_translation_symmetry(rule90, one_sided):
    for rule in (rule90, one_sided):
        for act in (ActionIndex(1, 0), ActionIndex(2, -1), ActionIndex(1, 2)):
            base = correlation_deviation(ZZ, Cylinder(0, (1, 0)), act, rule)
            for t in (-3, 2):
                moved = correlation_deviation(ZZ.shifted(t), Cylinder(t, (1, 0)), act, rule)
                assert moved == base


def test_disjoint_support_means_zero(one_sided, rule90):
    C = Cylinder(-1, (1, 0, 1))
    for rule in (one_sided, rule90):
        for m in range(4):
            for n in range(-8, 9):
                act = ActionIndex(m, n)
                sup = pullback_support(ZZ, act, rule)
                if sup.hi < C.lo or sup.lo > C.hi:
                    assert correlation_deviation(ZZ, C, act, rule) == 0


def test_cone_average_first_value(one_sided):
    cone = DirectionCone(1, 2)
    assert cone_average_deviation_exact(ZZ, ZZ, cone, 1, one_sided) == Fraction(5, 48)
    assert cone_average_deviation(ZZ, ZZ, cone, 1, one_sided) == pytest.approx(5 / 48)


def test_deviation_bounded_by_half():
    rule = parse_rule("a=2;coeffs=0,1,1")
    for k in (1, 3, 6):
        assert cone_average_deviation(ZERO, ZERO, DirectionCone(0, 3), k, rule) <= 0.5


def test_decay_profile(one_sided):
    series = decay_profile(ZZ, ZZ, DirectionCone(1, 2), 20, one_sided)
    assert series.exact[0] == Fraction(5, 48)
    assert series.exact[-1] < series.exact[0]
    assert all(d >= 0 for d in series.exact)
    assert series.cone_sizes == [len(cone_points(DirectionCone(1, 2), k)) for k in series.ks]
    rows = list(series.rows())
    assert list(rows[0]) == ["k", "cone_size", "D_k", "exact"]


def test_decay_profile_is_order_independent(one_sided):
    cone = DirectionCone(1, 2)
    k = 6
    pts = cone_points(cone, k)
    random.Random(4).shuffle(pts)
    total = sum((correlation_deviation(ZZ, ZZ, p, one_sided) for p in pts), Fraction(0))
    assert total / len(pts) == decay_profile(ZZ, ZZ, cone, k, one_sided).exact[-1]


def test_shift_only_decay():
    # pure shift: only n = 0 correlates, so D_k = (1/4) / #cone
    rule = parse_rule("a=2;coeffs=0,1,1")
    cone = DirectionCone(0, 2)
    series = decay_profile(ZERO, ZERO, cone, 1, rule)
    assert series.exact[0] == Fraction(1, 12)


def test_independence_points(one_sided):
    for M in range(3):
        for N in range(3):
            rows = independence_point_check(M, N, one_sided, N + M + 3, m_probe=range(4))
            assert all(r.passed for r in rows if not r.boundary)
            assert all(r.disjoint for r in rows if not r.boundary)
            assert {r.n for r in rows if r.boundary} == {N + M}
    rows = independence_point_check(0, 0, one_sided, 4)
    assert all(r.passed for r in rows if r.n >= 1)
    with pytest.raises(ValueError):
        independence_point_check(1, 1, parse_rule("a=2;coeffs=1,0,1"), 3)


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(0, "ergodic", 0) == derive_seed(0, "ergodic", 0)
    seeds = {derive_seed(7, "x", i) for i in range(1000)}
    assert len(seeds) == 1000
    assert derive_seed(7, "a", 1) != derive_seed(7, "b", 1)
    assert 0 <= derive_seed(1, 2) < 2**64


def test_sample_config():
    iv = Interval(-3, 100000)
    x, y = sample_config(11, iv), sample_config(11, iv)
    assert x == y and x.interval == iv
    means = [sample_config(derive_seed(0, "mean", s), Interval(0, 99999)).symbols.mean()
             for s in range(100)]
    assert sum(abs(m - 0.5) < 0.01 for m in means) >= 95


def test_birkhoff_examples(rule90, one_sided):
    zeros = WindowConfig(-30, np.zeros(80, dtype=int), 2)
    st = birkhoff_average(zeros, ActionIndex(1, 1), ZERO, 20, rule90)
    assert (st.averages == 1).all()
    alt = WindowConfig(0, [i % 2 for i in range(50)], 2)
    st = birkhoff_average(alt, ActionIndex(0, 1), ZERO, 40, one_sided)
    assert all(st.averages[t - 1] == 0.5 for t in range(2, 41, 2))
    counts = st.averages * np.arange(1, 41)
    assert np.allclose(counts, np.rint(counts)) and np.array_equal(np.rint(counts), np.cumsum(st.hits))
    with pytest.raises(WindowTooSmall) as info:
        birkhoff_average(alt, ActionIndex(1, 1), ZERO, 40, one_sided)
    assert info.value.required == orbit_window(ActionIndex(1, 1), ZERO, 40, one_sided)


def test_birkhoff_matches_direct_evaluation(rule90):
    from dirca.lca import eval_coordinate

    d = ActionIndex(2, -1)
    B = Cylinder(0, (1, 0))
    x = sample_config(5, orbit_window(d, B, 30, rule90))
    st = birkhoff_average(x, d, B, 30, rule90)
    direct = [all(eval_coordinate(x, d.scaled(k), rule90, B.lo + i) == s
                  for i, s in enumerate(B.symbols)) for k in range(30)]
    assert st.hits.tolist() == [int(v) for v in direct]


def test_orbit_report(one_sided):
    rep = orbit_frequency_report([1, 2, 3], ActionIndex(1, 1), ZERO, 10, one_sided)
    assert len(rep.deviations) == 3 and 0 <= rep.pass_fraction <= 1
    one = orbit_frequency_report([9], ActionIndex(1, 1), ZERO, 500, one_sided)
    x = sample_config(9, orbit_window(ActionIndex(1, 1), ZERO, 500, one_sided))
    assert one.stats[0].final == birkhoff_average(x, ActionIndex(1, 1), ZERO, 500, one_sided).final
