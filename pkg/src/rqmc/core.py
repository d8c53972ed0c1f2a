"""Shared domain types and reproducible random streams.

Every random quantity in the package is drawn from an :class:`RngStream`,
addressed by a master seed and a path of ``(label, index)`` pairs.  Streams
are derived by hashing the path (``numpy.random.SeedSequence``) into the key
of a counter-based Philox generator, so the value of a stream never depends on
the order in which other streams were consumed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

SEED_MAX = 2**64 - 1

_MASK32 = 0xFFFFFFFF


class BudgetExceeded(RuntimeError):
    """A request needs more work or memory than the configured guard allows."""

    def __init__(self, message: str, required: float, limit: float):
        super().__init__(f"{message} (required {required:.4g}, limit {limit:.4g})")
        self.required = required
        self.limit = limit


def _check_seed(value: int) -> int:
    value = int(value)
    if not 0 <= value <= SEED_MAX:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {value}")
    return value


def _encode_path(path) -> list[int]:
    # Fixed-width 32-bit words make the encoding injective.
    words: list[int] = []
    for label, index in path:
        raw = label.encode("utf-8")
        words.append(len(raw))
        padded = raw + b"\0" * (-len(raw) % 4)
        words.extend(int.from_bytes(padded[i:i + 4], "little") for i in range(0, len(padded), 4))
        index = int(index)
        if not 0 <= index <= SEED_MAX:
            raise ValueError(f"path index must fit in 64 bits, got {index}")
        words.append(index & _MASK32)
        words.append(index >> 32)
    return words


@dataclass(frozen=True)
class RngStream:
    """A pure, addressable source of randomness.

    ``RngStream(key, path).generator()`` always returns a generator in the same
    state, so calling it twice replays the same draws.  Use :meth:`child` to
    obtain independent sub-streams.
    """

    key: int
    path: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "key", _check_seed(self.key))
        object.__setattr__(self, "path", tuple((str(a), int(b)) for a, b in self.path))

    def child(self, label: str, index: int = 0) -> "RngStream":
        return RngStream(self.key, self.path + ((label, index),))

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(entropy=self.key, spawn_key=_encode_path(self.path))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(self.seed_sequence()))

    def key64(self) -> np.uint64:
        """A 64-bit key for the hash-based permutation families."""
        return self.generator().integers(0, 2**64, dtype=np.uint64, endpoint=False)


def derive_stream(master: int, path=()) -> RngStream:
    return RngStream(master, tuple(path))


def uniform01(stream: RngStream, count: int) -> np.ndarray:
    """``count`` reproducible uniforms in [0, 1) from ``stream``."""
    if count < 0:
        raise ValueError("count must be non-negative")
    return stream.generator().random(count)


@dataclass(frozen=True)
class PointSet:
    """``n`` points in the half-open unit cube with provenance metadata."""

    points: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise ValueError("points must be an (n, d) array")
        if pts.size and (pts.min() < 0.0 or pts.max() >= 1.0):
            raise ValueError("point coordinates must lie in [0, 1)")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n


@dataclass(frozen=True)
class Integrand:
    """An integrand on [0, 1]^d with its exact integral.

    ``integrability`` is the critical exponent p*: the function lies in L^p for
    p < p* (and for p = p* only when p* is infinite).  ``tolerance`` bounds the
    error of ``exact_integral`` including any bias from clamping at the
    boundary.
    """

    name: str
    dimension: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    exact_integral: float
    integrability: float = np.inf
    lp_norm: Optional[Callable[[float], float]] = None
    tags: frozenset = frozenset()
    tolerance: float = 1e-12
    params: dict = field(default_factory=dict)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, self.dimension)
        if x.shape[1] != self.dimension:
            raise ValueError(f"{self.name} expects dimension {self.dimension}, got {x.shape[1]}")
        return self.evaluate(x)

    def in_lp(self, p: float) -> bool:
        return p < self.integrability or np.isinf(self.integrability)


@dataclass(frozen=True)
class EstimateRecord:
    n: int
    value: float
    evaluations_used: int
    replication_index: int = 0
    seed: int = 0
    extra: dict[str, Any] = field(default_factory=dict)
