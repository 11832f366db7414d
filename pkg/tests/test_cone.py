from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from dirca.cone import (
    DirectionCone, cone_contains, cone_points, cone_slice, make_geometric_sequence,
    make_syndetic_sequence, parse_affine, parse_sequence, points_from, round_half_toward_zero,
    validate_sequence,
)
from dirca.errors import ParseError
from dirca.lca import ActionIndex


def pts(*pairs):
    return [ActionIndex(*p) for p in pairs]


def test_cone_contains():
    half = Fraction(1, 2)
    assert cone_contains(DirectionCone(half, 1), ActionIndex(4, 2))
    assert not cone_contains(DirectionCone(half, 1), ActionIndex(4, 3))
    assert cone_contains(DirectionCone(0, 2), ActionIndex(7, -1))
    with pytest.raises(ValueError):
        DirectionCone(0, 0)


def test_cone_points():
    assert cone_points(DirectionCone(1, 2), 2) == pts((0, -1), (0, 0), (0, 1), (1, 0), (1, 1), (1, 2))
    assert cone_points(DirectionCone(0, 1), 1) == pts((0, 0))
    assert cone_points(DirectionCone(Fraction(1, 3), 5), 1) == pts((0, -2), (0, -1), (0, 0), (0, 1), (0, 2))


cones = st.builds(DirectionCone, st.fractions(-3, 3, max_denominator=7),
                  st.fractions(Fraction(1, 5), 6, max_denominator=5))


@settings(max_examples=80, deadline=None)
@given(cones, st.integers(1, 12))
def test_cone_points_nested_and_members(cone, k):
    small, big = cone_points(cone, k), cone_points(cone, k + 1)
    assert set(small) <= set(big)
    assert all(cone_contains(cone, p) for p in big)
    assert small == sorted(small)
    sizes = [len(cone_slice(cone, m)) for m in range(k + 1)]
    assert max(sizes) - min(sizes) <= 1


def test_syndetic_examples():
    assert list(make_syndetic_sequence(1, 3, parse_affine("0"))) == pts((1, 0), (2, 0), (3, 0))
    assert list(make_syndetic_sequence(2, 3, parse_affine("m/2"))) == pts((2, 1), (4, 2), (6, 3))
    assert list(make_syndetic_sequence(1, 3, parse_affine("m-1"))) == pts((1, 0), (2, 1), (3, 2))
    assert list(make_syndetic_sequence(1, 2, parse_affine("-m/2"))) == pts((1, 0), (2, -1))


def test_geometric_examples():
    assert list(make_geometric_sequence(4, 3, 1)) == pts((4, 4), (16, 16), (64, 64))
    assert list(make_geometric_sequence(2, 2, 0)) == pts((2, 0), (4, 0))
    assert list(make_geometric_sequence(4, 2, Fraction(1, 2))) == pts((4, 2), (16, 8))
    assert list(make_geometric_sequence(2, 1, Fraction(1, 4))) == pts((2, 0))  # 1/2 rounds to 0


def test_rounding_ties_toward_zero():
    assert round_half_toward_zero(Fraction(5, 2)) == 2
    assert round_half_toward_zero(Fraction(-5, 2)) == -2
    assert round_half_toward_zero(Fraction(7, 3)) == 2
    assert round_half_toward_zero(Fraction(-8, 3)) == -3


def test_validate_examples(rule90):
    rep = validate_sequence(points_from([(1, 0), (2, 0), (3, 0)]))
    assert rep.monotone and rep.max_gap == 1 and rep.m_exceeds_n and rep.syndetic
    assert not validate_sequence(points_from([(1, 2), (2, 0)])).m_exceeds_n
    rep = validate_sequence(points_from([(1, 0), (2, 0)]), rule=rule90, M=1)
    assert rep.coverage == "boundary"
    assert rep.coverage_rows == [(1, 2, 5, 5, "boundary")]
    assert validate_sequence(points_from([(1, 0), (3, 0)]), rule=rule90, M=1).coverage == "fail"
    assert not validate_sequence(points_from([(2, 0), (1, 0)])).monotone
    rep = validate_sequence(points_from([(1, 5)]), cone=DirectionCone(1, 2))
    assert rep.in_cone is False and "in_cone" in rep.failed()


def test_validate_gap_bound():
    S = make_geometric_sequence(2, 6, 0)
    assert not validate_sequence(S).syndetic
    assert not validate_sequence(S, gap_bound=8).syndetic
    assert validate_sequence(S, gap_bound=32).syndetic


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(1, 12), st.fractions(-1, Fraction(3, 4), max_denominator=4))
def test_generated_sequences_pass_own_flags(gap, length, slope):
    S = make_syndetic_sequence(gap, length, parse_affine(f"({slope})*m"))
    rep = validate_sequence(S, gap_bound=gap)
    assert rep.monotone and rep.syndetic and rep.max_gap == gap and rep.m_exceeds_n
    assert validate_sequence(S).syndetic


def test_parse_sequence():
    assert list(parse_sequence("syndetic:gap=1,len=6,n=0")) == pts(*[(i, 0) for i in range(1, 7)])
    assert list(parse_sequence("geometric:base=4,len=2,beta=1/2")) == pts((4, 2), (16, 8))
    assert list(parse_sequence("explicit:(2,2);(8,8)")) == pts((2, 2), (8, 8))
    assert list(parse_sequence("syndetic:gap=1,len=3,n=m-1")) == pts((1, 0), (2, 1), (3, 2))
    for bad in ("syndetic:gap=1,len=3,n=m*m", "explicit:(1,2)(3,4)", "spiral:1",
                "syndetic:gap=1,len=3,n=__import__('os')"):
        with pytest.raises((ParseError, ValueError)):
            parse_sequence(bad)
