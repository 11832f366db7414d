"""JIT kernels for repeated linear-CA stepping.

Cell ``i`` of the next row only reads cells ``i + d`` with ``d >= 0`` of the
current row (offsets arrive normalized to ``d - min_dep``), so the generic
kernel can overwrite its row in place, left to right.

Packed rows store cell ``i`` in bit ``i & 63`` of word ``i >> 6``.  Bits at or
beyond the valid length are garbage after the first step and are never read.
"""

import numpy as np
from numba import njit


def pack_bits(cells, spare=1):
    """Pack a 0/1 array into little-endian uint64 words plus ``spare`` zero words."""
    cells = np.asarray(cells, dtype=np.uint8)
    nwords = (cells.size + 63) // 64 + spare
    raw = np.packbits(cells, bitorder="little")
    buf = np.zeros(nwords * 8, dtype=np.uint8)
    buf[: raw.size] = raw
    return buf.view("<u8").copy()


def unpack_bits(words, nbits):
    raw = np.ascontiguousarray(words, dtype="<u8").view(np.uint8)
    return np.unpackbits(raw, bitorder="little")[:nbits]


@njit(cache=True)
def _low_word(minpos, drift, j, count):
    # lowest bit any later observation can still depend on
    if drift >= 0:
        low = minpos + j * drift
    else:
        low = minpos + count * drift
    if low < 0:
        return 0
    return low >> 6


# The high half of each shifted word uses two shifts so that a zero bit
# offset contributes nothing without a branch.  Taps within one word
# (offset < 64, i.e. every rule of span < 64) get dedicated loops with scalar
# shifts; a runtime word offset, a variable-length loop over taps, or a loop
# that does not start at a literal 0 keeps LLVM from vectorizing the in-place
# update, so callers pass a view starting at the first live word.


@njit(cache=True, inline="always")
def _tap(words, w, q, r, l):
    return (words[w + q] >> r) | ((words[w + q + 1] << np.uint64(1)) << l)


@njit(cache=True, inline="always")
def _near(words, w, r, l):
    return (words[w] >> r) | ((words[w + 1] << np.uint64(1)) << l)


@njit(cache=True)
def _step1(words, r0, l0, nw):
    for w in range(nw):
        words[w] = _near(words, w, r0, l0)


@njit(cache=True)
def _step2(words, r0, l0, r1, l1, nw):
    for w in range(nw):
        words[w] = _near(words, w, r0, l0) ^ _near(words, w, r1, l1)


@njit(cache=True)
def _step3(words, r0, l0, r1, l1, r2, l2, nw):
    for w in range(nw):
        words[w] = _near(words, w, r0, l0) ^ _near(words, w, r1, l1) ^ _near(words, w, r2, l2)


@njit(cache=True)
def _step_any(words, qs, rs, ls, nw):
    for w in range(nw):
        acc = np.uint64(0)
        for t in range(qs.shape[0]):
            acc ^= _tap(words, w, qs[t], rs[t], ls[t])
        words[w] = acc


@njit(cache=True)
def _packed_step(words, qs, rs, ls, wlo, nw):
    n = qs.shape[0]
    live = words[wlo:]
    count = nw - wlo
    if count <= 0:
        return
    if qs.max() == 0 and n <= 3:
        if n == 1:
            _step1(live, rs[0], ls[0], count)
        elif n == 2:
            _step2(live, rs[0], ls[0], rs[1], ls[1], count)
        else:
            _step3(live, rs[0], ls[0], rs[1], ls[1], rs[2], ls[2], count)
    else:
        _step_any(live, qs, rs, ls, count)


@njit(cache=True)
def packed_walk(words, nbits, offsets, span, m, drift, positions, count):
    """Apply ``m`` XOR-rule steps ``count`` times, sampling bits after each round.

    ``words`` must carry at least ``span // 64 + 2`` spare words past the
    data.  Returns a ``(count, len(positions))`` uint8 array; row ``j`` holds
    the bits at ``positions + (j + 1) * drift`` after ``(j + 1) * m`` steps.
    """
    npos = positions.shape[0]
    out = np.zeros((count, npos), dtype=np.uint8)
    minpos = positions.min() if npos > 0 else 0
    qs = offsets >> 6
    rs = (offsets & 63).astype(np.uint64)
    ls = (63 - (offsets & 63)).astype(np.uint64)
    valid = nbits
    for j in range(count):
        wlo = _low_word(minpos, drift, j + 1, count)
        for _ in range(m):
            valid -= span
            _packed_step(words, qs, rs, ls, wlo, (valid + 63) >> 6)
        for i in range(npos):
            b = positions[i] + (j + 1) * drift
            out[j, i] = np.uint8((words[b >> 6] >> np.uint64(b & 63)) & np.uint64(1))
    return out


@njit(cache=True)
def generic_walk(cells, a, offsets, coeffs, span, m, drift, positions, count):
    """Same contract as :func:`packed_walk` for one symbol per cell, any modulus."""
    npos = positions.shape[0]
    nofs = offsets.shape[0]
    out = np.zeros((count, npos), dtype=np.int64)
    minpos = positions.min() if npos > 0 else 0
    valid = cells.shape[0]
    for j in range(count):
        if drift >= 0:
            lo = minpos + (j + 1) * drift
        else:
            lo = minpos + count * drift
        if lo < 0:
            lo = 0
        for _ in range(m):
            valid -= span
            for i in range(lo, valid):
                acc = 0
                for t in range(nofs):
                    acc += coeffs[t] * cells[i + offsets[t]]
                cells[i] = acc % a
        for i in range(npos):
            out[j, i] = cells[positions[i] + (j + 1) * drift]
    return out


@njit(cache=True)
def _jump2(row, out_len, o1, c0, c1, k):
    mask = k - 1
    if k & mask == 0:
        for i in range(out_len):
            row[i] = (c0 * row[i] + c1 * row[i + o1]) & mask
    else:
        for i in range(out_len):
            row[i] = (c0 * row[i] + c1 * row[i + o1]) % k


@njit(cache=True)
def sparse_jump(row, out_len, offsets, coeffs, k):
    """``row[i] <- sum_t coeffs[t] * row[i + offsets[t]] mod k`` for ``i < out_len``, in place.

    ``offsets`` is increasing, so reading ahead of ``i`` never sees an updated cell.
    """
    nofs = offsets.shape[0]
    if nofs == 2 and offsets[0] == 0:
        _jump2(row, out_len, offsets[1], coeffs[0], coeffs[1], k)
        return
    mask = k - 1
    pow2 = k & mask == 0
    for i in range(out_len):
        acc = 0
        for t in range(nofs):
            acc += coeffs[t] * row[i + offsets[t]]
        row[i] = acc & mask if pow2 else acc % k
