"""Owen's nested uniform scrambling and the random digital shift.

The permutation attached to a node of the digit tree is never materialized as
a table.  For the node reached by the digit prefix ``(a_1, ..., a_{r-1})`` of
coordinate j, a keyed 64-bit mixer assigns a pseudo-random label to every
digit value ``t``; the permutation sends ``t`` to its rank among the labels.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .core import PointSet, RngStream
from .sequences import (
    ONE_MINUS_ULP,
    DigitExpansion,
    digits_to_unit,
    faure_base,
    faure_digits,
    index_capacity,
)

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TAIL = np.uint64(0xD1B54A32D192ED03)
_SHIFT_TAG = np.uint64(0x8CB92BA72F3D8DD7)


def mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer, vectorized over uint64 arrays (wrapping arithmetic)."""
    z = np.asarray(x, dtype=np.uint64) + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _combine(h, v):
    return mix64(np.asarray(h, dtype=np.uint64) ^ mix64(v))


def _to_unit(h: np.ndarray) -> np.ndarray:
    return (h >> np.uint64(11)).astype(np.float64) * 2.0**-53


@dataclass(frozen=True)
class ScrambleKey:
    """Randomness for a scramble of ``dimension`` coordinates in base ``base``.

    ``identity=True`` forces every permutation (and shift) to the identity and
    disables the random tail.  It exists for tests.
    """

    stream: RngStream
    base: int
    depth: int
    dimension: int
    identity: bool = False

    @cached_property
    def key(self) -> np.uint64:
        return np.uint64(self.stream.key64())


def _check(digits: DigitExpansion, key: ScrambleKey):
    if digits.base != key.base:
        raise ValueError(f"digit base {digits.base} does not match key base {key.base}")
    if digits.depth != key.depth:
        raise ValueError(f"digit depth {digits.depth} does not match key depth {key.depth}")
    if digits.d != key.dimension:
        raise ValueError(f"digit dimension {digits.d} does not match key dimension {key.dimension}")


def _factorial(b: int) -> int:
    out = 1
    for i in range(2, b + 1):
        out *= i
    return out


@lru_cache(maxsize=None)
def lehmer_table(b: int) -> np.ndarray:
    """All b! permutations of range(b), row c being the one with Lehmer code c."""
    rows = []
    for code in range(_factorial(b)):
        free = list(range(b))
        perm = []
        for i in range(b):
            q, code = divmod(code, _factorial(b - 1 - i))
            perm.append(free.pop(q))
        rows.append(perm)
    table = np.array(rows, dtype=np.int64)
    table.setflags(write=False)
    return table


def permute_digits(node: np.ndarray, a: np.ndarray, b: int) -> np.ndarray:
    """Apply the node permutations to the digits ``a``.

    Each node hash is reduced mod b! and read as a Lehmer code, which
    selects one of the b! permutations of {0, ..., b-1}.
    """
    if b == 2:
        return a ^ (node & np.uint64(1)).astype(np.int64)
    if b <= 7:
        code = (node % np.uint64(_factorial(b))).astype(np.int64)
        return lehmer_table(b)[code, a]
    # Large bases: decode the Lehmer code digit by digit.
    n = a.shape[0]
    code = node % np.uint64(_factorial(b))
    used = np.zeros((n, b), dtype=bool)
    rows = np.arange(n)
    out = np.empty(n, dtype=np.int64)
    for i in range(int(a.max(initial=0)) + 1):
        radix = np.uint64(_factorial(b - 1 - i))
        c = (code // radix).astype(np.int64)
        code = code % radix
        free = ~used
        rank = np.cumsum(free, axis=1) - 1
        v = np.argmax(free & (rank == c[:, None]), axis=1)
        hit = a == i
        out[hit] = v[hit]
        used[rows, v] = True
    return out


def nested_scramble_digits(digits: DigitExpansion, key: ScrambleKey) -> tuple[np.ndarray, np.ndarray]:
    """Scrambled digits and the per-point uniform tails below b**-depth."""
    _check(digits, key)
    b, depth = key.base, key.depth
    dig = digits.digits
    n = dig.shape[0]
    out = dig.copy()
    tails = np.zeros((n, key.dimension))
    if key.identity or n == 0:
        return out, tails
    ub = np.uint64(b)
    with np.errstate(over="ignore"):
        dims = _combine(key.key, np.arange(1, key.dimension + 1, dtype=np.uint64))
        for j in range(key.dimension):
            levels = _combine(dims[j], np.arange(1, depth + 1, dtype=np.uint64))
            prefix = np.zeros(n, dtype=np.uint64)
            for r in range(depth):
                a = dig[:, j, r]
                out[:, j, r] = permute_digits(_combine(levels[r], prefix), a, b)
                prefix = prefix * ub + a.astype(np.uint64)
            tails[:, j] = _to_unit(_combine(_combine(dims[j], _TAIL), prefix))
    return out, tails


def _assemble(digits: np.ndarray, tails: np.ndarray, b: int) -> np.ndarray:
    depth = digits.shape[-1]
    vals = digits_to_unit(digits, b) + tails * float(b) ** -depth
    return np.minimum(vals, ONE_MINUS_ULP)


def nested_uniform_scramble(digits: DigitExpansion, key: ScrambleKey) -> PointSet:
    """Owen scrambling of a batch of digit expansions.

    Digit r of a coordinate is replaced by ``pi(a_r)`` where ``pi`` is the node
    permutation selected by the preceding input digits.  Positions below the
    retained depth receive an independent uniform tail.
    """
    out, tails = nested_scramble_digits(digits, key)
    pts = _assemble(out, tails, key.base)
    return PointSet(pts, {"method": "nested_uniform_scramble", "base": key.base, "depth": key.depth})


def shift_digits(key: ScrambleKey) -> np.ndarray:
    """The (dimension, depth) random digit vector of a digital shift."""
    if key.identity:
        return np.zeros((key.dimension, key.depth), dtype=np.int64)
    with np.errstate(over="ignore"):
        h = _combine(key.key, _SHIFT_TAG)
        j = np.arange(key.dimension, dtype=np.uint64)[:, None]
        r = np.arange(key.depth, dtype=np.uint64)[None, :]
        labels = _combine(_combine(h, j + np.uint64(1)), r + np.uint64(1))
    return (labels % np.uint64(key.base)).astype(np.int64)


def digital_shift(digits: DigitExpansion, key: ScrambleKey) -> PointSet:
    """Add one random digit vector per coordinate, digit-wise mod b."""
    _check(digits, key)
    shift = shift_digits(key)
    out = (digits.digits + shift[None, :, :]) % key.base
    tails = np.zeros((digits.n, key.dimension))
    if not key.identity:
        with np.errstate(over="ignore"):
            tail = _combine(_combine(key.key, _TAIL), np.arange(key.dimension, dtype=np.uint64))
        tails[:] = _to_unit(tail)[None, :]
    pts = _assemble(out, tails, key.base)
    return PointSet(pts, {"method": "digital_shift", "base": key.base, "depth": key.depth})


class ScrambledSequenceStream:
    """Randomized Faure sequence whose points are fixed once the key is.

    Point i is a pure function of (i, key), so ``points(m)`` is always a
    prefix of ``points(n)`` for m <= n.
    """

    def __init__(self, d: int, stream: RngStream, base: int | None = None,
                 method: str = "nested", depth: int | None = None, identity: bool = False):
        if method not in ("nested", "shift"):
            raise ValueError(f"unknown randomization {method!r}")
        self.d = d
        self.base = faure_base(d) if base is None else base
        self.depth = index_capacity(self.base) if depth is None else depth
        self.method = method
        self.key = ScrambleKey(stream, self.base, self.depth, d, identity=identity)
        self._cache = np.empty((0, d))

    def batch(self, start: int, stop: int) -> np.ndarray:
        dig = faure_digits(np.arange(start, stop), self.d, self.base, self.depth)
        if self.method == "nested":
            return nested_uniform_scramble(dig, self.key).points
        return digital_shift(dig, self.key).points

    def points(self, n: int) -> np.ndarray:
        have = self._cache.shape[0]
        if n > have:
            self._cache = np.vstack([self._cache, self.batch(have, n)])
        return self._cache[:n]

    def point_set(self, n: int) -> PointSet:
        return PointSet(self.points(n), {
            "method": "scrambled_faure", "randomization": self.method,
            "base": self.base, "d": self.d, "n": n,
        })

    def __iter__(self):
        i = 0
        while True:
            yield self.points(i + 1)[i]
            i += 1


def scrambled_sequence_stream(d: int, b: int | None, key: RngStream, **kw) -> ScrambledSequenceStream:
    return ScrambledSequenceStream(d, key, base=b, **kw)
