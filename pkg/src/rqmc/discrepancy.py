"""Star discrepancy (exact, desk scale) and L2 star discrepancy (Warnock)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import BudgetExceeded, PointSet

GRID_BUDGET = 10**7


@dataclass(frozen=True)
class DiscrepancyReport:
    n: int
    d: int
    l2star: float
    star: Optional[float] = None
    witness_box: Optional[tuple[float, ...]] = None


def _as_array(points) -> np.ndarray:
    if isinstance(points, PointSet):
        return points.points
    x = np.asarray(points, dtype=np.float64)
    return x[:, None] if x.ndim == 1 else x


def star_discrepancy_exact(points, budget: int = GRID_BUDGET) -> DiscrepancyReport:
    """Exact D* over the critical grid of point coordinates and 1.

    At every grid corner y both the open count #{x < y} and the closed count
    #{x <= y} are compared with the volume of [0, y).
    """
    x = _as_array(points)
    n, d = x.shape
    if n == 0:
        raise ValueError("empty point set")
    grids, ranks = [], []
    for j in range(d):
        g = np.unique(np.append(x[:, j], 1.0))
        grids.append(g)
        ranks.append(np.searchsorted(g, x[:, j]))
    shape = tuple(len(g) for g in grids)
    size = float(np.prod([float(s) for s in shape]))
    if size > budget:
        raise BudgetExceeded("exact star discrepancy grid too large", size, budget)

    closed = np.zeros(shape, dtype=np.int32)
    np.add.at(closed, tuple(ranks), 1)
    opened = np.zeros(shape, dtype=np.int32)
    shifted = [r + 1 for r in ranks]
    keep = np.all([s < m for s, m in zip(shifted, shape)], axis=0)
    np.add.at(opened, tuple(s[keep] for s in shifted), 1)
    for ax in range(d):
        np.cumsum(closed, axis=ax, out=closed)
        np.cumsum(opened, axis=ax, out=opened)

    vol = grids[0]
    for g in grids[1:]:
        vol = np.multiply.outer(vol, g)
    vol = np.asarray(vol)
    local = np.maximum(vol - opened / n, closed / n - vol)
    flat = int(np.argmax(local))
    star = float(local.flat[flat])
    corner = np.unravel_index(flat, shape)
    witness = tuple(float(grids[j][corner[j]]) for j in range(d))
    return DiscrepancyReport(n, d, l2_star_discrepancy(x), star, witness)


def l2_star_discrepancy(points, chunk: int = 512) -> float:
    """Warnock's closed form for the L2 star discrepancy."""
    x = _as_array(points)
    n, d = x.shape
    if d < 1:
        raise ValueError("dimension must be at least 1")
    if n == 0:
        raise ValueError("empty point set")
    term1 = 3.0 ** -d
    term2 = 2.0 ** (1 - d) / n * np.prod(1.0 - x**2, axis=1).sum()
    total = 0.0
    for start in range(0, n, chunk):
        block = x[start:start + chunk]
        prod = np.prod(1.0 - np.maximum(block[:, None, :], x[None, :, :]), axis=2)
        total += prod.sum()
    sq = term1 - term2 + total / n**2
    return float(np.sqrt(max(sq, 0.0)))


def local_discrepancy(points, anchors) -> np.ndarray:
    """vol([0, y)) - #{x in [0, y)}/n for each anchor y."""
    x = _as_array(points)
    y = np.atleast_2d(np.asarray(anchors, dtype=np.float64))
    out = np.empty(len(y))
    for start in range(0, len(y), 4096):
        yb = y[start:start + 4096]
        inside = np.all(x[None, :, :] < yb[:, None, :], axis=2).mean(axis=1)
        out[start:start + 4096] = np.prod(yb, axis=1) - inside
    return out


def discrepancy_report(points, star_budget: int = GRID_BUDGET) -> DiscrepancyReport:
    """Report with the exact D* when the grid fits in the budget."""
    try:
        return star_discrepancy_exact(points, star_budget)
    except BudgetExceeded:
        x = _as_array(points)
        return DiscrepancyReport(x.shape[0], x.shape[1], l2_star_discrepancy(x))
