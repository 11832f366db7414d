"""Digit frequencies of ``s_n = sum_l C(nN, l) x_{l+1} mod k``.

Three independent routes compute the sequence:

* the engine steps the CA ``x_0 + x_1 mod k`` one row at a time and reads a
  single column (bit-packed when ``k == 2``);
* the direct oracle streams Pascal rows mod ``k`` and takes dot products;
* for prime ``k``, Lucas' theorem gives every coefficient digit by digit.

A fourth route, :func:`sequence_s_jump`, jumps ``B`` rows at a time using
the sparsity of ``(1 + t)^B mod k`` for prime-power ``B``; it is what makes
100-seed runs at ``n_max = 10^5`` practical.

``variant="paper"`` reads ``sum_l C(nN, l) x_{l+1}``.  ``variant="action"``
reads ``sum_l C(nN, l) x_{n+l}``, i.e. ``(T^{nN} x)_n``.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from . import _kernels
from .errors import NotPrime, PrefixTooShort
from .lca import ActionIndex, Interval, LocalRule, WindowConfig, orbit_samples, validate_rule
from .measure import is_prime

VARIANTS = ("paper", "action")


def binomial_rule(k: int) -> LocalRule:
    """The rule ``x_0 + x_1 mod k`` (coefficients ``0,1,1``)."""
    return validate_rule(k, (0, 1, 1))


def pascal_rows(k: int, n_max: int) -> Iterator[np.ndarray]:
    """Rows ``0..n_max`` of Pascal's triangle mod ``k`` by additive updates."""
    row = np.ones(1, dtype=np.int64)
    yield row
    for _ in range(n_max):
        nxt = np.empty(row.size + 1, dtype=np.int64)
        nxt[0] = row[0]
        nxt[-1] = row[-1]
        nxt[1:-1] = row[1:] + row[:-1]
        row = nxt % k
        yield row


def pascal_row_mod(n: int, k: int) -> np.ndarray:
    if n < 0 or k < 2:
        raise ValueError("need n >= 0 and k >= 2")
    for row in pascal_rows(k, n):
        pass
    return row


def _digits(n: int, p: int) -> list[int]:
    out = []
    while n:
        n, r = divmod(n, p)
        out.append(r)
    return out


def binom_mod_lucas(n: int, l: int, p: int) -> int:
    if not is_prime(p):
        raise NotPrime(f"{p} is not prime")
    if not 0 <= l <= n:
        raise ValueError("need 0 <= l <= n")
    result = 1
    nd, ld = _digits(n, p), _digits(l, p)
    for i, ni in enumerate(nd):
        li = ld[i] if i < len(ld) else 0
        if li > ni:
            return 0
        result = result * math.comb(ni, li) % p
    return result


def lucas_row(n: int, p: int) -> np.ndarray:
    """``C(n, l) mod p`` for ``l = 0..n`` via base-``p`` digits, vectorized."""
    if not is_prime(p):
        raise NotPrime(f"{p} is not prime")
    table = np.array([[math.comb(i, j) % p for j in range(p)] for i in range(p)], dtype=np.int64)
    l = np.arange(n + 1, dtype=np.int64)
    out = np.ones(n + 1, dtype=np.int64)
    for ni in _digits(n, p):
        out = out * table[ni, l % p] % p
        l //= p
    return out


@dataclass(frozen=True)
class DigitStream:
    """Digits ``x_1, x_2, ...`` of a base-``k`` expansion (finite prefix)."""

    k: int
    digits: np.ndarray
    provenance: str = "explicit"

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("base must be >= 2")
        arr = np.array(self.digits, dtype=np.int64).reshape(-1)
        if arr.size and (arr.min() < 0 or arr.max() >= self.k):
            raise ValueError(f"digits must lie in [0, {self.k})")
        arr.setflags(write=False)
        object.__setattr__(self, "digits", arr)

    @classmethod
    def random(cls, k: int, length: int, seed: int) -> "DigitStream":
        rng = np.random.default_rng(seed)
        return cls(k, rng.integers(0, k, size=length, dtype=np.int64), f"seed={seed}")

    def __len__(self):
        return self.digits.size

    def __add__(self, other: "DigitStream") -> "DigitStream":
        n = min(len(self), len(other))
        return DigitStream(self.k, (self.digits[:n] + other.digits[:n]) % self.k, "sum")

    def window(self) -> WindowConfig:
        """Digit ``x_i`` placed at coordinate ``i``."""
        return WindowConfig(1, self.digits, self.k)


def required_length(N: int, n_max: int) -> int:
    return n_max * N + n_max + 1


def _check(x: DigitStream, N: int, n_max: int, variant: str):
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if N < 1 or n_max < 1:
        raise ValueError("N and n_max must be >= 1")
    need = required_length(N, n_max)
    if len(x) < need:
        raise PrefixTooShort(f"need {need} digits for N={N}, n_max={n_max}; have {len(x)}")


def sequence_s_engine(x: DigitStream, N: int, n_max: int, variant: str = "paper",
                      packed: bool | None = None) -> np.ndarray:
    """``s_1..s_{n_max}`` by stepping one CA row and reading one column."""
    _check(x, N, n_max, variant)
    rule = binomial_rule(x.k)
    if variant == "paper":
        step, cell = ActionIndex(N, 0), Interval(1, 1)
    else:
        step, cell = ActionIndex(N, 1), Interval(0, 0)
    w = x.window()
    return orbit_samples(w, rule, step, cell, n_max, packed=packed)[:, 0]


def _offset(variant: str, n: int) -> int:
    # index into the digit array of x_{l+1} (paper) or x_{n+l} (action) at l = 0
    return 0 if variant == "paper" else n - 1


def sequence_s_direct(x: DigitStream, N: int, n_max: int, variant: str = "paper") -> np.ndarray:
    """Oracle: Pascal rows mod ``k`` dotted with the digit window for each ``n``."""
    _check(x, N, n_max, variant)
    out = np.empty(n_max, dtype=np.int64)
    d = x.digits
    n = 1
    for M, row in enumerate(pascal_rows(x.k, n_max * N)):
        if M == n * N:
            start = _offset(variant, n)
            out[n - 1] = int(np.dot(row, d[start : start + M + 1]) % x.k)
            n += 1
    return out


def sequence_s_lucas(x: DigitStream, N: int, n_max: int, variant: str = "paper") -> np.ndarray:
    _check(x, N, n_max, variant)
    p = x.k
    d = x.digits
    out = np.empty(n_max, dtype=np.int64)
    for n in range(1, n_max + 1):
        M = n * N
        start = _offset(variant, n)
        out[n - 1] = int(np.dot(lucas_row(M, p), d[start : start + M + 1]) % p)
    return out


def engine_vs_lucas_check(x: DigitStream, N: int, n_max: int, variant: str = "paper") -> bool:
    """Termwise agreement of engine, direct oracle and Lucas sums (prime ``k`` only)."""
    if not is_prime(x.k):
        raise NotPrime(f"{x.k} is not prime")
    e = sequence_s_engine(x, N, n_max, variant)
    return bool(np.array_equal(e, sequence_s_direct(x, N, n_max, variant))
                and np.array_equal(e, sequence_s_lucas(x, N, n_max, variant)))


def _prime_factors(k: int) -> list[int]:
    out, f = [], 2
    while f * f <= k:
        if k % f == 0:
            out.append(f)
            while k % f == 0:
                k //= f
        f += 1
    if k > 1:
        out.append(k)
    return out


def _jump_kernel(B: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    coeffs = pascal_row_mod(B, k)
    offs = np.nonzero(coeffs)[0]
    return offs.astype(np.int64), coeffs[offs]


@lru_cache(maxsize=None)
def choose_block(k: int, lo: int = 256, hi: int = 2200) -> int:
    """Jump length with the sparsest ``(1+t)^B mod k``; ties go to the larger ``B``."""
    cands = set()
    for p in _prime_factors(k):
        q = p
        while q <= hi:
            if q >= lo:
                cands.add(q)
            q *= p
    if not cands:
        cands = {1024}
    return min(sorted(cands), key=lambda B: (len(_jump_kernel(B, k)[0]), -B))


@lru_cache(maxsize=32)
def _jump_plan(k: int, N: int, B: int, variant: str):
    """Jump kernel plus, per residue of ``qB mod N``, the reading matrix."""
    offs, coeffs = _jump_kernel(B, k)
    table = np.zeros((B, B), dtype=np.float64)
    for s, row in enumerate(pascal_rows(k, B - 1)):
        table[s, : s + 1] = row
    patterns = {}
    for r in sorted({(q * B) % N for q in range(N)}):
        s_list = [s for s in range(B) if (r + s) % N == 0]
        if variant == "paper":
            delta = [0] * len(s_list)
        else:
            delta = [(s - s_list[0]) // N for s in s_list]
        width = (delta[-1] if delta else 0) + B
        A = np.zeros((len(s_list), width), dtype=np.float64)
        for i, (s, dl) in enumerate(zip(s_list, delta)):
            A[i, dl : dl + B] = table[s]
        patterns[r] = (np.array(s_list, dtype=np.int64), A, width)
    return offs, coeffs, patterns


def sequence_s_jump(x: DigitStream, N: int, n_max: int, variant: str = "paper",
                    block: int | None = None) -> np.ndarray:
    """``s_1..s_{n_max}`` in blocks of ``B`` CA rows.

    Row ``qB`` of the space-time diagram is advanced to row ``(q+1)B`` with the
    few nonzero coefficients of ``(1+t)^B mod k``; readings inside a block are
    one matrix product of the block's window with Pascal rows ``0..B-1``.
    """
    _check(x, N, n_max, variant)
    k = x.k
    B = block or choose_block(k)
    t_max = n_max * N
    offs, coeffs, patterns = _jump_plan(k, N, B, variant)
    need = t_max + 1 if variant == "paper" else t_max + n_max
    row = np.array(x.digits[:need], dtype=np.int64)
    length = row.size

    windows = {r: [] for r in patterns}
    starts = {r: [] for r in patterns}
    q = 0
    while q * B <= t_max:
        r = (q * B) % N
        s_list, A, width = patterns[r]
        if s_list.size:
            t0 = q * B + int(s_list[0])
            start = 0 if variant == "paper" else t0 // N - 1
            win = np.zeros(width, dtype=np.float64)
            lead = max(0, -start)  # n = 0 in the first block sits left of x_1
            seg = row[start + lead : start + width]
            win[lead : lead + seg.size] = seg
            windows[r].append(win)
            starts[r].append(q * B)
        if (q + 1) * B > t_max:
            break
        length -= B
        _kernels.sparse_jump(row, length, offs, coeffs, k)
        row = row[:length]
        q += 1

    out = np.empty(n_max, dtype=np.int64)
    for r, (s_list, A, _) in patterns.items():
        if not windows[r]:
            continue
        vals = np.rint(np.stack(windows[r]) @ A.T).astype(np.int64) % k
        t = np.array(starts[r], dtype=np.int64)[:, None] + s_list[None, :]
        n = t // N
        keep = (n >= 1) & (n <= n_max)
        out[n[keep] - 1] = vals[keep]
    return out


@dataclass
class FreqReport:
    k: int
    counts: list
    n_max: int
    max_dev: float
    variant: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def freqs(self) -> list:
        return [c / self.n_max for c in self.counts]


def frequency_report(s, k: int, variant: str | None = None) -> FreqReport:
    s = np.asarray(s, dtype=np.int64)
    if s.size == 0:
        raise ValueError("empty sequence")
    counts = np.bincount(s, minlength=k)[:k].tolist()
    dev = max(abs(c / s.size - 1 / k) for c in counts)
    return FreqReport(k, counts, int(s.size), dev, variant)


METHODS = {
    "engine": sequence_s_engine,
    "direct": sequence_s_direct,
    "jump": sequence_s_jump,
    "lucas": sequence_s_lucas,
}


def frequency_run(k: int, N: int, n_max: int, seeds, variant: str = "paper",
                  method: str = "jump") -> list[FreqReport]:
    """One :class:`FreqReport` per seed over fresh uniform digit streams."""
    fn = METHODS[method]
    reports = []
    for seed in seeds:
        x = DigitStream.random(k, required_length(N, n_max), seed)
        rep = frequency_report(fn(x, N, n_max, variant), k, variant)
        rep.extra["seed"] = seed
        reports.append(rep)
    return reports
