import numpy as np
import pytest
from scipy import stats

from rqmc.core import PointSet, RngStream
from rqmc.randomize import Rotation, cranley_patterson, latin_hypercube, strata_counts
from rqmc.sequences import fibonacci_rule, rank1_lattice


def circular_gap(a, b):
    g = np.abs(a - b) % 1.0
    return np.minimum(g, 1.0 - g)


def test_cp_arithmetic():
    out = cranley_patterson(PointSet([[0.75]]), Rotation(np.array([0.5])))
    assert out.points[0, 0] == 0.25
    ps = rank1_lattice(fibonacci_rule(8))
    np.testing.assert_array_equal(cranley_patterson(ps, Rotation(np.zeros(2))).points, ps.points)


def test_cp_dimension_mismatch():
    with pytest.raises(ValueError):
        cranley_patterson(PointSet([[0.1, 0.2]]), Rotation(np.array([0.5])))


def test_cp_preserves_pairwise_differences():
    ps = rank1_lattice(fibonacci_rule(9))
    x = ps.points
    for s in range(20):
        y = cranley_patterson(ps, Rotation.draw(2, RngStream(s))).points
        before = (x[:, None, :] - x[None, :, :]) % 1.0
        after = (y[:, None, :] - y[None, :, :]) % 1.0
        assert circular_gap(before, after).max() <= 1e-12


def test_cp_fixed_point_marginally_uniform():
    ps = PointSet([[0.3, 0.9]])
    x = np.array([cranley_patterson(ps, Rotation.draw(2, RngStream(s))).points[0] for s in range(4000)])
    for j in range(2):
        assert stats.chisquare(np.histogram(x[:, j], bins=20, range=(0, 1))[0]).pvalue > 0.001


def test_lhs_single_point():
    x = latin_hypercube(1, 4, RngStream(1)).points
    assert x.shape == (1, 4) and x.min() >= 0 and x.max() < 1


@pytest.mark.parametrize("n, d", [(10, 3), (64, 5), (1000, 5), (7, 1)])
def test_lhs_stratification_exact(n, d):
    for s in range(10):
        ps = latin_hypercube(n, d, RngStream(s))
        assert np.all(strata_counts(ps) == 1)


def test_lhs_marginals_uniform_and_midpoint_variant_is_not():
    jit = np.concatenate([latin_hypercube(10, 2, RngStream(s)).points[:, 0] for s in range(500)])
    mid = np.concatenate([latin_hypercube(10, 2, RngStream(s), jitter=False).points[:, 0] for s in range(500)])
    bins = dict(bins=100, range=(0, 1))
    assert stats.chisquare(np.histogram(jit, **bins)[0]).pvalue > 0.001
    assert stats.chisquare(np.histogram(mid, **bins)[0]).pvalue < 0.001


def test_lhs_reduces_variance_on_additive_integrand():
    # iid oracle: Var[sum_j x_j^2] = d * (1/5 - 1/9); LHS removes additive variance.
    n, d, R = 64, 3, 2000
    est = np.array([
        np.mean(np.sum(latin_hypercube(n, d, RngStream(5, (("r", r),))).points ** 2, axis=1))
        for r in range(R)
    ])
    iid_var = d * (1 / 5 - 1 / 9) / n
    upper = est.var(ddof=1) * (R - 1) / stats.chi2.ppf(0.05, R - 1)
    assert upper < iid_var
