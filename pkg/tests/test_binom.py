import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dirca.binom import (
    VARIANTS, DigitStream, binom_mod_lucas, binomial_rule, choose_block,
    engine_vs_lucas_check, frequency_report, lucas_row, pascal_row_mod, pascal_rows,
    required_length, sequence_s_direct, sequence_s_engine, sequence_s_jump,
)
from dirca.errors import NotPrime, PrefixTooShort
from dirca.lca import ActionIndex, eval_coordinate


def stream(k, N, n_max, seed=0):
    return DigitStream.random(k, required_length(N, n_max), seed)


def delta(k, N, n_max, head=(1,)):
    d = np.zeros(required_length(N, n_max), dtype=np.int64)
    d[: len(head)] = head
    return DigitStream(k, d)


def test_pascal_examples():
    assert pascal_row_mod(4, 2).tolist() == [1, 0, 0, 0, 1]
    assert pascal_row_mod(0, 7).tolist() == [1]
    assert pascal_row_mod(5, 5).tolist() == [1, 0, 0, 0, 0, 1]


def test_pascal_recurrence_and_symmetry():
    for k in range(2, 7):
        rows = list(pascal_rows(k, 512))
        for n in range(512):
            cur, nxt = rows[n], rows[n + 1]
            assert nxt[0] == 1 and nxt[-1] == 1
            assert ((cur[:-1] + cur[1:]) % k == nxt[1:-1]).all()
            assert (cur == cur[::-1]).all()


def test_lucas_examples():
    assert binom_mod_lucas(10, 3, 2) == 0
    assert binom_mod_lucas(17, 0, 3) == 1
    assert binom_mod_lucas(5, 2, 5) == 0
    with pytest.raises(NotPrime):
        binom_mod_lucas(4, 2, 4)
    with pytest.raises(NotPrime):
        lucas_row(4, 6)


def test_lucas_agrees_with_pascal():
    for p in (2, 3, 5):
        for n, row in enumerate(pascal_rows(p, 512)):
            assert (lucas_row(n, p) == row).all()
            if n % 37 == 0:
                assert [binom_mod_lucas(n, l, p) for l in range(n + 1)] == row.tolist()


def test_engine_examples():
    s = sequence_s_engine(delta(2, 1, 50), 1, 50)
    assert (s == 1).all()
    s = sequence_s_engine(delta(2, 1, 50, (1, 1)), 1, 50)
    assert s.tolist() == [(1 + n) % 2 for n in range(1, 51)]
    assert sequence_s_direct(DigitStream(3, [2, 2, 0]), 1, 1).tolist() == [1]
    x = stream(5, 1, 1)
    assert sequence_s_direct(x, 1, 1)[0] == (x.digits[0] + x.digits[1]) % 5
    with pytest.raises(PrefixTooShort):
        sequence_s_engine(DigitStream(2, [1] * 10), 1, 10)


def test_delta_stream_lucas():
    x = delta(5, 2, 100)
    assert engine_vs_lucas_check(x, 2, 100)
    assert (sequence_s_engine(x, 2, 100) == 1).all()
    with pytest.raises(NotPrime):
        engine_vs_lucas_check(stream(4, 1, 10), 1, 10)


@pytest.mark.parametrize("k", [2, 3, 4, 5])
@pytest.mark.parametrize("N", [1, 2, 3])
@pytest.mark.parametrize("variant", VARIANTS)
def test_engine_direct_equivalence(k, N, variant):
    n_max = 2000 if N == 1 else 700
    x = stream(k, N, n_max, seed=k * 10 + N)
    e = sequence_s_engine(x, N, n_max, variant)
    assert np.array_equal(e, sequence_s_direct(x, N, n_max, variant))
    assert np.array_equal(e, sequence_s_jump(x, N, n_max, variant))


@pytest.mark.parametrize("k,N,n_max", [(2, 1, 2000), (3, 2, 500), (5, 3, 300)])
def test_engine_vs_lucas(k, N, n_max):
    x = stream(k, N, n_max, seed=1)
    for variant in VARIANTS:
        assert engine_vs_lucas_check(x, N, n_max, variant)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 7), st.integers(1, 4), st.integers(1, 120),
       st.sampled_from(VARIANTS), st.integers(0, 2**32), st.sampled_from([None, 2, 3, 4, 8, 27]))
def test_jump_matches_direct(k, N, n_max, variant, seed, block):
    x = stream(k, N, n_max, seed)
    assert np.array_equal(sequence_s_jump(x, N, n_max, variant, block=block),
                          sequence_s_direct(x, N, n_max, variant))


def test_choose_block_is_sparse():
    from dirca.binom import _jump_kernel

    for k, most in ((2, 2), (3, 2), (5, 2), (4, 3), (8, 5), (9, 5)):
        offs, _ = _jump_kernel(choose_block(k), k)
        assert len(offs) <= most


def test_cross_module_identity():
    rule = binomial_rule(2)
    for N in (1, 2, 3):
        x = stream(2, N, 60, seed=N)
        s = sequence_s_engine(x, N, 60, "action")
        w = x.window()
        direct = [eval_coordinate(w, ActionIndex(n * N, n), rule, 0) for n in range(1, 61)]
        assert s.tolist() == direct
        paper = sequence_s_engine(x, N, 60, "paper")
        assert paper.tolist() == [eval_coordinate(w, ActionIndex(n * N, 0), rule, 1)
                                  for n in range(1, 61)]


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.integers(1, 3), st.integers(1, 80), st.sampled_from(VARIANTS),
       st.integers(0, 1000), st.integers(0, 1000))
def test_stream_linearity(k, N, n_max, variant, s1, s2):
    x, y = stream(k, N, n_max, s1), stream(k, N, n_max, s2)
    lhs = sequence_s_engine(x + y, N, n_max, variant)
    rhs = (sequence_s_engine(x, N, n_max, variant) + sequence_s_engine(y, N, n_max, variant)) % k
    assert np.array_equal(lhs, rhs)


def test_packed_and_generic_engine_agree():
    x = stream(2, 1, 3000, seed=3)
    for variant in VARIANTS:
        assert np.array_equal(sequence_s_engine(x, 1, 3000, variant, packed=True),
                              sequence_s_engine(x, 1, 3000, variant, packed=False))


def test_frequency_report():
    rep = frequency_report([1, 0] * 5, 2)
    assert rep.freqs == [0.5, 0.5] and rep.max_dev == 0
    assert frequency_report([1] * 10, 2).max_dev == 0.5
    rep = frequency_report(sequence_s_engine(stream(2, 1, 100000, 1), 1, 100000), 2)
    assert rep.max_dev < 0.01
    with pytest.raises(ValueError):
        frequency_report([], 2)


def test_digit_stream_validation():
    with pytest.raises(ValueError):
        DigitStream(2, [0, 2])
    with pytest.raises(ValueError):
        DigitStream(1, [0])
    x = DigitStream.random(3, 10, 4)
    assert x == x and len(x) == 10 and x.provenance == "seed=4"
