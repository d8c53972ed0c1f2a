import numpy as np
import pytest
from scipy import integrate
from scipy.stats import qmc

from rqmc.core import BudgetExceeded, RngStream
from rqmc.discrepancy import (
    discrepancy_report,
    l2_star_discrepancy,
    local_discrepancy,
    star_discrepancy_exact,
)
from rqmc.randomize import Rotation, cranley_patterson
from rqmc.sequences import fibonacci_rule, halton, hammersley, rank1_lattice


def closed_form_1d(x):
    x = np.sort(np.ravel(x))
    n = x.size
    i = np.arange(1, n + 1)
    return np.max(np.maximum(np.abs(x - (i - 1) / n), np.abs(x - i / n)))


def test_single_point():
    assert star_discrepancy_exact(np.array([[0.5]])).star == 0.5


def test_matches_1d_closed_form():
    rng = np.random.default_rng(0)
    for _ in range(100):
        x = rng.random(rng.integers(1, 40))
        assert abs(star_discrepancy_exact(x).star - closed_form_1d(x)) <= 1e-12


def test_matches_dense_grid_scan_2d():
    rng = np.random.default_rng(1)
    x = rng.random((8, 2))
    rep = star_discrepancy_exact(x)
    g = (np.arange(400) + 1) / 400
    Y = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    scan = np.abs(local_discrepancy(x, Y)).max()
    # grid scan is a lower bound that comes within the grid resolution
    assert scan <= rep.star + 1e-12
    assert rep.star - scan <= 2 / 400 + 1e-9
    assert len(rep.witness_box) == 2


def test_warnock_single_point_quadrature():
    for x in (0.5, 0.1, 0.9, 0.0):
        quad, _ = integrate.quad(lambda y: ((y - (x < y)) ** 2), 0, 1, points=[x], epsabs=1e-13)
        assert abs(l2_star_discrepancy(np.array([[x]])) ** 2 - quad) <= 1e-10
        assert abs(l2_star_discrepancy(np.array([[x]])) ** 2 - (1 / 3 - (1 - x**2) + (1 - x))) <= 1e-12


def test_warnock_matches_monte_carlo_oracle():
    x = hammersley(16, 2).points
    y = RngStream(3).generator().random((10**6, 2))
    mc = np.mean(local_discrepancy(x, y) ** 2)
    assert abs(l2_star_discrepancy(x) ** 2 - mc) <= 1e-3


def test_warnock_matches_scipy():
    x = halton(50, 3).points
    assert l2_star_discrepancy(x) == pytest.approx(qmc.discrepancy(x, method="L2-star"), rel=1e-9)


def test_report_ordering():
    for x in (halton(30, 2).points, RngStream(2).generator().random((20, 3))):
        r = star_discrepancy_exact(x)
        assert 0 <= r.l2star <= r.star + 1e-12 and r.star <= 1


def test_budget_guard():
    x = RngStream(0).generator().random((300, 3))
    with pytest.raises(BudgetExceeded) as err:
        star_discrepancy_exact(x)
    assert err.value.required > 10**7
    assert discrepancy_report(x).star is None


@pytest.mark.parametrize("family", ["halton", "hammersley", "fibonacci"])
def test_discrepancy_decreases_along_n(family):
    if family == "fibonacci":
        sets = [rank1_lattice(fibonacci_rule(k)).points for k in (7, 10, 13, 16)]  # 13 .. 987
    else:
        gen = halton if family == "halton" else hammersley
        sets = [gen(n, 2).points for n in (2**4, 2**6, 2**8, 2**10)]
    l2 = [l2_star_discrepancy(x) for x in sets]
    star = [star_discrepancy_exact(x).star for x in sets]
    assert all(b < a for a, b in zip(l2, l2[1:]))
    assert all(b < a for a, b in zip(star, star[1:]))


def test_cp_rotation_discrepancy_stability():
    ps = rank1_lattice(fibonacci_rule(10))
    base = star_discrepancy_exact(ps).star
    for s in range(50):
        rot = cranley_patterson(ps, Rotation.draw(2, RngStream(s)))
        assert star_discrepancy_exact(rot).star <= 4 * base
