"""Deterministic low-discrepancy point sets.

All digit-based constructions work on integer base-b digits and convert to
doubles once, in :meth:`DigitExpansion.to_unit`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import PointSet

ONE_MINUS_ULP = np.nextafter(1.0, 0.0)


def is_prime(b: int) -> bool:
    if b < 2:
        return False
    if b < 4:
        return True
    if b % 2 == 0:
        return False
    r = int(math.isqrt(b))
    return all(b % f for f in range(3, r + 1, 2))


def first_primes(count: int) -> list[int]:
    out, c = [], 2
    while len(out) < count:
        if is_prime(c):
            out.append(c)
        c += 1
    return out


def next_prime(m: int) -> int:
    """Smallest prime >= m."""
    c = max(2, int(m))
    while not is_prime(c):
        c += 1
    return c


def digit_depth(b: int) -> int:
    """Number of base-b digits that exhausts double precision."""
    return math.ceil(53 / math.log2(b))


def index_capacity(b: int, bits: int = 32) -> int:
    """Number of base-b digits that covers every index below 2**bits."""
    return math.ceil(bits / math.log2(b))


def _require_prime(b: int):
    if not is_prime(b):
        raise ValueError(f"base must be prime, got {b}")


def integer_digits(i, b: int, depth: int) -> np.ndarray:
    """Base-b digits of non-negative integers, least significant first.

    Returns an int64 array of shape ``i.shape + (depth,)``.
    """
    i = np.asarray(i, dtype=np.int64)
    if np.any(i < 0):
        raise ValueError("indices must be non-negative")
    out = np.empty(i.shape + (depth,), dtype=np.int64)
    rest = i.copy()
    for j in range(depth):
        out[..., j] = rest % b
        rest //= b
    if np.any(rest):
        raise ValueError(f"index does not fit in {depth} base-{b} digits")
    return out


@dataclass(frozen=True)
class DigitExpansion:
    """Base-b digit expansions of a batch of points.

    ``digits[i, j, r]`` is digit r+1 after the radix point of coordinate j of
    point i, so the coordinate value is ``sum_r digits[i, j, r] * b**-(r+1)``.
    """

    base: int
    digits: np.ndarray

    def __post_init__(self):
        dig = np.asarray(self.digits, dtype=np.int64)
        if dig.ndim != 3:
            raise ValueError("digits must have shape (n, d, depth)")
        if dig.size and (dig.min() < 0 or dig.max() >= self.base):
            raise ValueError(f"digits must lie in [0, {self.base})")
        object.__setattr__(self, "digits", dig)

    @property
    def n(self) -> int:
        return self.digits.shape[0]

    @property
    def d(self) -> int:
        return self.digits.shape[1]

    @property
    def depth(self) -> int:
        return self.digits.shape[2]

    def to_unit(self) -> np.ndarray:
        return digits_to_unit(self.digits, self.base)


def digits_to_unit(digits: np.ndarray, b: int) -> np.ndarray:
    """Convert radical-inverse-order digits (last axis) to reals in [0, 1)."""
    depth = digits.shape[-1]
    # Exact integer accumulation while b**depth fits comfortably in int64.
    chunk = max(1, int(62 // math.log2(b)))
    value = np.zeros(digits.shape[:-1], dtype=np.float64)
    scale = 1.0
    for start in range(0, depth, chunk):
        part = digits[..., start:start + chunk]
        width = part.shape[-1]
        acc = np.zeros(digits.shape[:-1], dtype=np.int64)
        for r in range(width):
            acc = acc * b + part[..., r]
        scale_here = scale / float(b) ** width
        value += acc.astype(np.float64) * scale_here
        scale = scale_here
    return np.minimum(value, ONE_MINUS_ULP)


def radical_inverse(i, b: int) -> np.ndarray | float:
    """Mirror the base-b digits of ``i`` about the radix point."""
    _require_prime(b)
    scalar = np.ndim(i) == 0
    arr = np.asarray(i, dtype=np.int64)
    if np.any(arr < 0):
        raise ValueError("index must be non-negative")
    depth = max(1, int(np.max(arr, initial=0)).bit_length())
    depth = min(depth, max(1, math.ceil(63 / math.log2(b))))
    out = digits_to_unit(integer_digits(arr, b, depth), b)
    return float(out) if scalar else out


def van_der_corput(n: int, b: int = 2, start: int = 0) -> np.ndarray:
    return np.asarray(radical_inverse(np.arange(start, start + n), b))


def halton(n: int, d: int) -> PointSet:
    """Halton points with indices 1..n in the first d prime bases."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    idx = np.arange(1, n + 1)
    bases = first_primes(d)
    pts = np.column_stack([radical_inverse(idx, b) for b in bases])
    return PointSet(pts, {"method": "halton", "n": n, "d": d, "bases": bases})


def hammersley(n: int, d: int) -> PointSet:
    if n < 1:
        raise ValueError("n must be positive")
    if d < 2:
        raise ValueError("Hammersley point sets need d >= 2")
    idx = np.arange(n)
    bases = first_primes(d - 1)
    cols = [idx / n] + [radical_inverse(idx, b) for b in bases]
    return PointSet(np.column_stack(cols), {"method": "hammersley", "n": n, "d": d})


@lru_cache(maxsize=None)
def pascal_power(b: int, power: int, depth: int) -> np.ndarray:
    """The ``power``-th power of the upper-triangular Pascal matrix mod b.

    Entry (r, c) is binom(c, r) * power**(c - r) mod b.
    """
    m = np.zeros((depth, depth), dtype=np.int64)
    for c in range(depth):
        for r in range(c + 1):
            m[r, c] = (math.comb(c, r) * pow(power, c - r, b)) % b
    m.setflags(write=False)
    return m


def faure_digits(indices, d: int, base: int | None = None, depth: int | None = None) -> DigitExpansion:
    """Digit expansions of Faure points for arbitrary indices.

    The construction is index-local: point i does not depend on how many
    points are requested, which gives the prefix property for free.
    """
    b = faure_base(d) if base is None else base
    _require_prime(b)
    if b < d:
        raise ValueError(f"Faure sequences in dimension {d} need a prime base >= {d}")
    depth = index_capacity(b) if depth is None else depth
    idx = np.asarray(indices, dtype=np.int64).ravel()
    a = integer_digits(idx, b, depth)
    out = np.empty((idx.size, d, depth), dtype=np.int64)
    out[:, 0, :] = a
    af = a.astype(np.float64)
    for j in range(1, d):
        # Float products are exact here: every partial sum is below depth * b**2.
        prod = af @ pascal_power(b, j, depth).T.astype(np.float64)
        out[:, j, :] = np.rint(prod).astype(np.int64) % b
    return DigitExpansion(b, out)


def faure_base(d: int) -> int:
    return next_prime(d)


def faure(n: int, d: int, base: int | None = None) -> PointSet:
    """First n points (indices 0..n-1) of the Faure (0, d)-sequence."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    dig = faure_digits(np.arange(n), d, base)
    return PointSet(dig.to_unit(), {"method": "faure", "n": n, "d": d, "base": dig.base})


@dataclass(frozen=True)
class LatticeRule:
    n: int
    z: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "z", tuple(int(v) for v in self.z))
        if self.n < 1:
            raise ValueError("n must be positive")
        for zj in self.z:
            if math.gcd(zj, self.n) != 1:
                raise ValueError(f"generator component {zj} is not coprime to n={self.n}")

    @property
    def d(self) -> int:
        return len(self.z)


def rank1_lattice(rule: LatticeRule) -> PointSet:
    i = np.arange(rule.n, dtype=np.int64)[:, None]
    z = np.asarray(rule.z, dtype=np.int64)[None, :]
    pts = ((i * z) % rule.n) / rule.n
    return PointSet(pts, {"method": "lattice", "n": rule.n, "z": list(rule.z)})


def fibonacci_numbers(upto: int) -> list[int]:
    fib = [1, 1]
    while fib[-1] < upto:
        fib.append(fib[-1] + fib[-2])
    return fib


def fibonacci(k: int) -> int:
    """F_k with F_1 = F_2 = 1."""
    a, b = 1, 1
    for _ in range(k - 1):
        a, b = b, a + b
    return a


def fibonacci_rule(k: int) -> LatticeRule:
    return LatticeRule(fibonacci(k), (1, fibonacci(k - 1)))


def korobov_vector(n: int, a: int, d: int) -> tuple[int, ...]:
    return tuple(pow(a, j, n) for j in range(d))


@lru_cache(maxsize=256)
def best_korobov(n: int, d: int) -> int:
    """Korobov multiplier in [2, n/2] minimizing the L2 star discrepancy."""
    from .discrepancy import l2_star_discrepancy

    best_a, best_val = 1, np.inf
    for a in range(2, max(2, n // 2) + 1):
        if math.gcd(a, n) != 1:
            continue
        rule = LatticeRule(n, korobov_vector(n, a, d))
        val = l2_star_discrepancy(rank1_lattice(rule))
        if val < best_val:
            best_a, best_val = a, val
    return best_a


def default_lattice(n: int, d: int, a: int | None = None) -> LatticeRule:
    """Fibonacci rule for d = 2 when n is Fibonacci, Korobov rule otherwise."""
    if d == 1:
        return LatticeRule(n, (1,))
    if a is None and d == 2 and n in fibonacci_numbers(n) and n > 2:
        fib = fibonacci_numbers(n)
        return LatticeRule(n, (1, fib[fib.index(n) - 1]))
    if a is None:
        a = best_korobov(n, d) if n > 3 else 1
    return LatticeRule(n, korobov_vector(n, a, d))
