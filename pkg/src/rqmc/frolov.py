"""Randomized Frolov cubature.

The lattice is built from the Vandermonde matrix of the roots of
``p(x) = prod_{j=1..d} (x - (2j - 1)) - 1``.  A random dilation
``A = diag(u) * c * B`` with ``u_i ~ U[1, 2]`` and a uniform shift U give the
point set ``{A^{-1}(m + U) : m in Z^d}`` restricted to [0, 1)^d.  The scale c
makes ``E|det A| = n``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import BudgetExceeded, Integrand, RngStream

MAX_DIMENSION = 6
EXPECTED_COUNT_BUDGET = 10**6
CANDIDATE_BUDGET = 5 * 10**7


class RootRefinementError(RuntimeError):
    pass


@dataclass(frozen=True)
class FrolovGenerator:
    d: int
    poly_coeffs: tuple[int, ...]
    roots: np.ndarray
    B: np.ndarray
    detB: float


@dataclass(frozen=True)
class RandomizedDilation:
    u: np.ndarray
    c: float
    A: np.ndarray
    detA: float
    shift: np.ndarray


@dataclass(frozen=True)
class WeightedSample:
    points: np.ndarray
    detA: float

    @property
    def N(self) -> int:
        return self.points.shape[0]


def frolov_polynomial(d: int) -> np.ndarray:
    """Integer coefficients of p, highest degree first."""
    coeffs = np.array([1], dtype=object)
    for j in range(1, d + 1):
        coeffs = np.convolve(coeffs, np.array([1, -(2 * j - 1)], dtype=object))
    coeffs[-1] -= 1
    return coeffs


def _horner(coeffs, x):
    val = np.zeros_like(x)
    der = np.zeros_like(x)
    for c in coeffs:
        der = der * x + val
        val = val * x + float(c)
    return val, der


def frolov_generator(d: int, tol: float = 1e-10) -> FrolovGenerator:
    if not 1 <= d <= MAX_DIMENSION:
        raise ValueError(f"Frolov generator supports 1 <= d <= {MAX_DIMENSION}, got {d}")
    coeffs = frolov_polynomial(d)
    raw = np.roots(np.array(coeffs, dtype=np.float64))
    if np.max(np.abs(raw.imag), initial=0.0) > 1e-6:
        raise RootRefinementError(f"polynomial has non-real roots: {raw}")
    roots = np.sort(raw.real)
    for _ in range(50):
        val, der = _horner(coeffs, roots)
        step = val / der
        roots = roots - step
        if np.max(np.abs(step)) < 1e-15 * max(1.0, np.max(np.abs(roots))):
            break
    val, _ = _horner(coeffs, roots)
    # Residual relative to the size of the terms being cancelled.
    scale, _ = _horner([abs(float(c)) for c in coeffs], np.abs(roots))
    resid = np.max(np.abs(val) / scale)
    if resid > tol:
        raise RootRefinementError(f"relative root residual {resid:.3g} exceeds {tol}")
    if d > 1 and np.min(np.diff(roots)) <= 1e-8:
        raise RootRefinementError("roots are not separated")
    B = np.vander(roots, d, increasing=True)
    return FrolovGenerator(d, tuple(int(c) for c in coeffs), roots, B, float(np.linalg.det(B)))


def dilation_scale(gen: FrolovGenerator, n: float) -> float:
    return (n / (1.5**gen.d * abs(gen.detB))) ** (1.0 / gen.d)


def randomize_dilation(gen: FrolovGenerator, n: int, stream: RngStream,
                       u: Optional[np.ndarray] = None) -> RandomizedDilation:
    """Draw the dilation and shift.  ``u`` overrides the random factors (tests)."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = stream.generator()
    draw_u = rng.uniform(1.0, 2.0, gen.d)
    shift = rng.random(gen.d)
    u = draw_u if u is None else np.asarray(u, dtype=np.float64)
    c = dilation_scale(gen, n)
    A = (u[:, None] * c) * gen.B
    detA = float(np.prod(u) * c**gen.d * abs(gen.detB))
    return RandomizedDilation(u, c, A, detA, shift)


def enumerate_points(dil: RandomizedDilation, budget: float = EXPECTED_COUNT_BUDGET) -> WeightedSample:
    A, U = dil.A, dil.shift
    d = A.shape[0]
    if dil.detA > budget:
        raise BudgetExceeded("expected Frolov point count exceeds budget", dil.detA, budget)
    corners = np.array(list(itertools.product((0.0, 1.0), repeat=d)))
    images = corners @ A.T - U
    lo = np.floor(images.min(axis=0)).astype(np.int64)
    hi = np.ceil(images.max(axis=0)).astype(np.int64)
    extent = hi - lo + 1
    total = float(np.prod(extent.astype(np.float64)))
    if total > CANDIDATE_BUDGET:
        raise BudgetExceeded("Frolov candidate box too large", total, CANDIDATE_BUDGET)
    Ainv = np.linalg.inv(A)
    found = []
    # Enumerate along the last axis in bulk, loop over the rest.
    inner = np.arange(lo[-1], hi[-1] + 1)
    for outer in itertools.product(*(range(lo[j], hi[j] + 1) for j in range(d - 1))):
        m = np.empty((inner.size, d))
        m[:, :d - 1] = outer
        m[:, d - 1] = inner
        y = (m + U) @ Ainv.T
        ok = np.all((y >= 0.0) & (y < 1.0), axis=1)
        if ok.any():
            found.append(y[ok])
    pts = np.vstack(found) if found else np.empty((0, d))
    return WeightedSample(pts, dil.detA)


def frolov_estimate(f: Integrand, sample: WeightedSample) -> float:
    if sample.points.shape[1] != f.dimension:
        raise ValueError("integrand dimension does not match the sample")
    if sample.N == 0:
        return 0.0
    return float(np.sum(f(sample.points)) / sample.detA)
