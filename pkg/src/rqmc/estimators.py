"""Estimators built on the point constructions, the median modification and
the bound calculators for median amplification and almost sure convergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import EstimateRecord, Integrand, PointSet, RngStream
from .frolov import enumerate_points, frolov_generator, randomize_dilation
from .randomize import Rotation, cranley_patterson, latin_hypercube
from .scramble import ScrambledSequenceStream
from .sequences import default_lattice, faure, halton, hammersley, rank1_lattice

METHODS = ("iid", "lhs", "scrambled_net", "cranley_patterson", "frolov", "negative_control")
SUBSTRATES = ("lattice", "halton", "hammersley", "faure")
PREFIX_METHODS = ("iid", "scrambled_net")


@dataclass(frozen=True)
class EstimatorSpec:
    """Which randomized method to run, in dimension ``d``.

    Parameters by method: ``scrambled_net`` takes ``base`` and
    ``randomization`` ("nested" or "shift"); ``cranley_patterson`` takes
    ``substrate`` (lattice, halton, hammersley or faure) and optionally the
    Korobov multiplier ``a``; ``negative_control`` takes ``m``.
    """

    method: str
    d: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.d < 1:
            raise ValueError("d must be positive")
        if self.method == "cranley_patterson":
            sub = self.params.get("substrate", "lattice")
            if sub not in SUBSTRATES:
                raise ValueError(f"unknown substrate {sub!r}")
            if sub == "hammersley" and self.d < 2:
                raise ValueError("hammersley substrate needs d >= 2")
        if self.method == "negative_control" and int(self.params.get("m", 3)) < 1:
            raise ValueError("negative control needs m >= 1")

    @property
    def label(self) -> str:
        if self.method == "cranley_patterson":
            return f"cp_{self.params.get('substrate', 'lattice')}"
        if self.method == "negative_control":
            return f"negative_control_m{self.params.get('m', 3)}"
        return self.method

    @property
    def equal_weight(self) -> bool:
        return self.method != "frolov"

    @property
    def prefix_consistent(self) -> bool:
        return self.method in PREFIX_METHODS


@dataclass(frozen=True)
class MedianConfig:
    k: int = 1

    def __post_init__(self):
        check_odd(self.k)


def check_odd(k: int) -> int:
    if int(k) != k or k < 1 or k % 2 == 0:
        raise ValueError(f"median order k must be an odd positive integer, got {k}")
    return int(k)


@dataclass(frozen=True)
class Sample:
    """A realized randomized point set with its normalizing weight.

    The estimate of f is ``sum(f(points)) / denominator``; ``denominator`` is
    n for equal-weight methods and |det A| for Frolov.
    """

    points: np.ndarray
    denominator: float
    extra: dict = field(default_factory=dict)

    @property
    def evaluations(self) -> int:
        return self.points.shape[0]

    def estimate(self, f: Integrand) -> float:
        if self.points.shape[0] == 0:
            return 0.0
        return float(np.sum(f(self.points)) / self.denominator)


def draw(spec: EstimatorSpec, n: int, stream: RngStream) -> Sample:
    """All randomness of one realization of S_n, drawn from ``stream``.

    Calling draw twice with the same stream replays the same realization,
    which is how coupled (shared-randomness) comparisons are made.
    """
    if n < 1:
        raise ValueError("n must be positive")
    d, p = spec.d, spec.params
    m = spec.method
    if m == "iid":
        return Sample(stream.generator().random((n, d)), n)
    if m == "lhs":
        return Sample(latin_hypercube(n, d, stream).points, n)
    if m == "scrambled_net":
        seq = ScrambledSequenceStream(d, stream, base=p.get("base"),
                                      method=p.get("randomization", "nested"))
        return Sample(seq.points(n), n)
    if m == "cranley_patterson":
        base = substrate_points(p.get("substrate", "lattice"), n, d, p.get("a"))
        return Sample(cranley_patterson(base, Rotation.draw(d, stream)).points, n)
    if m == "frolov":
        gen = frolov_generator(d)
        dil = randomize_dilation(gen, n, stream)
        ws = enumerate_points(dil)
        return Sample(ws.points, ws.detA, {"N": ws.N, "detA": ws.detA})
    if m == "negative_control":
        mm = int(p.get("m", 3))
        Y = stream.generator().random((mm, d))
        return Sample(Y[np.arange(1, n + 1) % mm], n, {"m": mm})
    raise AssertionError(m)


def substrate_points(substrate: str, n: int, d: int, a: Optional[int] = None) -> PointSet:
    if substrate == "lattice":
        return rank1_lattice(default_lattice(n, d, a))
    if substrate == "halton":
        return halton(n, d)
    if substrate == "hammersley":
        return hammersley(n, d)
    if substrate == "faure":
        return faure(n, d)
    raise ValueError(f"unknown substrate {substrate!r}")


def mean_estimate(f: Integrand, points) -> float:
    """Equal-weight average of f over a point set."""
    x = points.points if isinstance(points, PointSet) else np.atleast_2d(points)
    if x.shape[0] == 0:
        raise ValueError("cannot average over an empty point set")
    if x.shape[1] != f.dimension:
        raise ValueError("integrand dimension does not match the points")
    return float(np.mean(f(x)))


def realize(spec: EstimatorSpec, f: Integrand, n: int, stream: RngStream,
            replication_index: int = 0) -> EstimateRecord:
    if f.dimension != spec.d:
        raise ValueError(f"integrand dimension {f.dimension} does not match spec d={spec.d}")
    s = draw(spec, n, stream)
    return EstimateRecord(n, s.estimate(f), s.evaluations, replication_index, stream.key, dict(s.extra))


def median_stream(stream: RngStream, i: int) -> RngStream:
    """Stream of the i-th copy inside a median; copy 0 is the stream itself."""
    return stream if i == 0 else stream.child("median", i)


def median_of_k(spec: EstimatorSpec, f: Integrand, n: int, cfg: MedianConfig | int,
                stream: RngStream,
                realize_fn: Optional[Callable[[int, RngStream], float]] = None) -> float:
    """Median of k independent realizations of S_n f.

    ``realize_fn(i, stream)`` replaces the i-th realization (a test hook).
    """
    k = check_odd(cfg.k if isinstance(cfg, MedianConfig) else cfg)
    if realize_fn is None:
        def realize_fn(i, s):
            return realize(spec, f, n, s).value
    vals = [realize_fn(i, median_stream(stream, i)) for i in range(k)]
    return median_odd(vals)


def median_odd(values: Sequence[float]) -> float:
    vals = np.sort(np.asarray(values, dtype=np.float64))
    check_odd(vals.size)
    return float(vals[vals.size // 2])


def negative_control(m: int, f: Integrand, n: int, stream: RngStream) -> float:
    """Recycled-sample estimator: X_j = Y_(j mod m), averaged over j = 1..n."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    spec = EstimatorSpec("negative_control", f.dimension, {"m": m})
    return draw(spec, n, stream).estimate(f)


def _ratio(p: float) -> float:
    # 2/(p - 1) rounded so that decimal inputs like p = 1.4 give exactly 5.
    return round(2.0 / (p - 1.0), 9)


def required_k(p: float) -> int:
    """Smallest odd k with k > 2/(p - 1)."""
    if not 1.0 < p < 2.0:
        raise ValueError("required_k needs 1 < p < 2; for p >= 2 use p slightly below 2")
    t = _ratio(p)
    k = math.floor(t) + 1
    if k % 2 == 0:
        k += 1
    return k


def median_failure_bound(alpha: float, k: int) -> float:
    """min(1, 2**k * alpha**(k/2)): failure bound of the median of k copies."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    check_odd(k)
    if alpha == 0.0:
        return 0.0
    return float(min(1.0, math.exp(k * math.log(2.0) + 0.5 * k * math.log(alpha))))


def lp_constant(p: float, c: float) -> float:
    return 2.0 ** (2.0 / p - 1.0) * c ** (1.0 - 1.0 / p)


def slln_error_bound(p: float, c: float, norm_f_p: float, eps: float, n, k: int):
    """2**k (c_p ||f||_p / eps)**(p k / 2) * n**(-(p - 1) k / 2)."""
    if not 1.0 < p < 2.0:
        raise ValueError("p must lie in (1, 2)")
    check_odd(k)
    if eps <= 0 or c <= 0:
        raise ValueError("eps and c must be positive")
    n = np.asarray(n, dtype=np.float64)
    if np.any(n < 1):
        raise ValueError("n must be >= 1")
    cp = lp_constant(p, c)
    logb = k * math.log(2.0) + 0.5 * p * k * math.log(cp * norm_f_p / eps)
    out = np.exp(logb - 0.5 * (p - 1.0) * k * np.log(n))
    return float(out) if out.ndim == 0 else out


def schedule_exponent(p: float) -> int:
    if p <= 1.0 or p > 2.0:
        raise ValueError("subsequence schedule needs p in (1, 2]")
    return math.ceil(_ratio(p))


def subsequence_schedule(p: float, count: int) -> list[int]:
    """n_j = j**s with s = ceil(2/(p - 1)), j = 1..count."""
    s = schedule_exponent(p)
    return [j**s for j in range(1, count + 1)]
