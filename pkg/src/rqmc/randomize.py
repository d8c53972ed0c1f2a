"""Cranley-Patterson rotation and Latin hypercube sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PointSet, RngStream
from .sequences import ONE_MINUS_ULP


@dataclass(frozen=True)
class Rotation:
    U: np.ndarray

    @classmethod
    def draw(cls, d: int, stream: RngStream) -> "Rotation":
        return cls(stream.generator().random(d))

    @property
    def d(self) -> int:
        return np.size(self.U)


def cranley_patterson(points: PointSet, rotation: Rotation) -> PointSet:
    U = np.atleast_1d(np.asarray(rotation.U, dtype=np.float64))
    if U.size != points.d:
        raise ValueError(f"rotation has dimension {U.size}, points have {points.d}")
    shifted = points.points + U[None, :]
    shifted = np.where(shifted >= 1.0, shifted - 1.0, shifted)
    shifted = np.minimum(shifted, ONE_MINUS_ULP)
    prov = dict(points.provenance)
    prov["rotation"] = "cranley_patterson"
    return PointSet(shifted, prov)


def latin_hypercube(n: int, d: int, stream: RngStream, jitter: bool = True) -> PointSet:
    """Latin hypercube sample of n points in [0, 1)^d.

    Each coordinate is ``(pi_j(i) + eta_ij) / n`` with an independent uniform
    permutation per dimension.  ``jitter=False`` places points at stratum
    midpoints, which is biased and only kept for comparison runs.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    rng = stream.generator()
    perms = rng.permuted(np.tile(np.arange(n), (d, 1)), axis=1).T
    eta = rng.random((n, d)) if jitter else np.full((n, d), 0.5)
    pts = (perms + eta) / n
    # Rounding must not push a coordinate out of its stratum.
    lo = perms / n
    hi = np.nextafter((perms + 1) / n, 0.0)
    pts = np.clip(pts, lo, hi)
    return PointSet(pts, {"method": "lhs", "n": n, "d": d, "jitter": jitter})


def strata_counts(points) -> np.ndarray:
    """Per-dimension occupancy of the n equal strata, shape (d, n)."""
    x = points.points if isinstance(points, PointSet) else np.atleast_2d(points)
    n, d = x.shape
    edges = np.arange(n + 1) / n
    return np.stack([np.histogram(x[:, j], bins=edges)[0] for j in range(d)])
