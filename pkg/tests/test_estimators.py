import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rqmc.core import Integrand, PointSet, RngStream
from rqmc.estimators import (
    EstimatorSpec,
    MedianConfig,
    draw,
    mean_estimate,
    median_failure_bound,
    median_of_k,
    negative_control,
    realize,
    required_k,
    schedule_exponent,
    slln_error_bound,
    subsequence_schedule,
)
from rqmc.testfunctions import additive_quadratic, box_indicator, constant, exp_sum, half_cube, singular

SPECS = [
    EstimatorSpec("iid", 2),
    EstimatorSpec("lhs", 2),
    EstimatorSpec("scrambled_net", 2),
    EstimatorSpec("scrambled_net", 2, {"randomization": "shift"}),
    EstimatorSpec("cranley_patterson", 2, {"substrate": "lattice"}),
    EstimatorSpec("cranley_patterson", 2, {"substrate": "halton"}),
    EstimatorSpec("cranley_patterson", 2, {"substrate": "hammersley"}),
    EstimatorSpec("cranley_patterson", 2, {"substrate": "faure"}),
    EstimatorSpec("frolov", 2),
    EstimatorSpec("negative_control", 2, {"m": 3}),
]
IDS = [s.label + "_" + s.params.get("randomization", "") for s in SPECS]


def combo(f, g, a, b):
    return Integrand("combo", f.dimension, lambda x: a * f(x) + b * g(x),
                     a * f.exact_integral + b * g.exact_integral)


def absolute(f):
    return Integrand("abs", f.dimension, lambda x: np.abs(f(x)), math.nan)


def test_mean_estimate_examples():
    assert mean_estimate(constant(2, 3.5), RngStream(0).generator().random((17, 2))) == 3.5
    ind = Integrand("h", 2, lambda x: (x[:, 0] < 0.5).astype(float), 0.5)
    assert mean_estimate(ind, PointSet([[0.25, 0.5], [0.75, 0.5]])) == 0.5
    with pytest.raises(ValueError):
        mean_estimate(ind, np.empty((0, 2)))
    with pytest.raises(ValueError):
        mean_estimate(constant(3), PointSet([[0.1, 0.2]]))


def test_spec_validation():
    with pytest.raises(ValueError):
        EstimatorSpec("bogus", 2)
    with pytest.raises(ValueError):
        EstimatorSpec("cranley_patterson", 1, {"substrate": "hammersley"})
    with pytest.raises(ValueError):
        EstimatorSpec("negative_control", 1, {"m": 0})
    with pytest.raises(ValueError):
        realize(EstimatorSpec("iid", 2), constant(3), 4, RngStream(0))


@pytest.mark.parametrize("spec", SPECS, ids=IDS)
def test_realize_constant_and_determinism(spec):
    f = constant(2)
    a = realize(spec, f, 64, RngStream(3))
    b = realize(spec, f, 64, RngStream(3))
    assert a == b
    if spec.equal_weight:
        assert a.value == 1.0 and a.evaluations_used == 64
    else:
        assert a.value == pytest.approx(a.extra["N"] / a.extra["detA"])


@pytest.mark.parametrize("spec", SPECS, ids=IDS)
@settings(max_examples=15, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5), seed=st.integers(0, 2**32 - 1),
       pair=st.sampled_from([(0, 1), (1, 2), (2, 3), (0, 3), (3, 4)]))
def test_linearity_and_monotonicity_replay(spec, a, b, seed, pair):
    fs = [exp_sum(2), box_indicator(2), additive_quadratic(2), half_cube(2), singular(2, 0.5)]
    f, g = fs[pair[0]], fs[pair[1]]
    s = draw(spec, 64, RngStream(seed))
    lhs = s.estimate(combo(f, g, a, b))
    assert abs(lhs - (a * s.estimate(f) + b * s.estimate(g))) <= 1e-12 * max(1.0, abs(a) + abs(b)) * 10
    h = combo(f, g, a, b)
    assert abs(s.estimate(h)) <= s.estimate(absolute(h))


def test_lhs_unit_realization():
    assert realize(EstimatorSpec("lhs", 3), constant(3), 37, RngStream(1)).value == 1.0


def test_iid_exp_sum_within_analytic_sd():
    f = exp_sum(2)
    var = ((math.e**2 - 1) / 2) ** 2 - (math.e - 1) ** 4
    r = realize(EstimatorSpec("iid", 2), f, 10**4, RngStream(11))
    assert abs(r.value - f.exact_integral) <= 5 * math.sqrt(var / 10**4)


def test_median_basics():
    spec, f = EstimatorSpec("iid", 1), exp_sum(1)
    st_ = RngStream(4)
    assert median_of_k(spec, f, 32, MedianConfig(1), st_) == realize(spec, f, 32, st_).value
    forced = [0.1, 0.9, 0.4]
    assert median_of_k(spec, f, 32, 3, st_, realize_fn=lambda i, s: forced[i]) == 0.4
    for k in (0, 2, 4, -1):
        with pytest.raises(ValueError):
            MedianConfig(k)
        with pytest.raises(ValueError):
            median_of_k(spec, f, 32, k, st_)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.sampled_from([1, 3, 5, 7]))
def test_median_lies_between_realizations(seed, k):
    spec, f = EstimatorSpec("lhs", 1), singular(1, 0.7)
    seen = []
    med = median_of_k(spec, f, 16, k, RngStream(seed),
                      realize_fn=lambda i, s: seen.append(realize(spec, f, 16, s).value) or seen[-1])
    assert min(seen) <= med <= max(seen)
    assert med in seen


def test_median_copies_are_distinct():
    spec, f = EstimatorSpec("iid", 1), exp_sum(1)
    vals = []
    median_of_k(spec, f, 8, 5, RngStream(2), realize_fn=lambda i, s: vals.append(realize(spec, f, 8, s).value) or 0.0)
    assert len(set(vals)) == 5


def test_median_amplification_iid_singular():
    # plain iid sampling: P[|S_{n,5} - I| > 0.2] < P[|S_n - I| > 0.2]
    f = singular(1, 0.7)
    spec = EstimatorSpec("iid", 1)
    R, k = 5000, 5
    vals = np.array([[realize(spec, f, 256, RngStream(7, (("r", r),)) if i == 0 else
                              RngStream(7, (("r", r),)).child("median", i)).value for i in range(k)]
                     for r in range(R)])
    fail1 = np.mean(np.abs(vals[:, 0] - f.exact_integral) > 0.2)
    fail5 = np.mean(np.abs(np.median(vals, axis=1) - f.exact_integral) > 0.2)
    assert fail5 < fail1


def test_negative_control_examples():
    f = exp_sum(2)
    s = RngStream(9)
    Y = s.generator().random((3, 2))
    assert negative_control(3, f, 300, s) == pytest.approx(np.mean(f(Y)), rel=1e-15)
    Y1 = s.generator().random((1, 2))
    assert negative_control(1, f, 50, s) == pytest.approx(f(Y1)[0], rel=1e-15)
    x = draw(EstimatorSpec("negative_control", 2, {"m": 3}), 7, s).points
    np.testing.assert_array_equal(x, Y[[1, 2, 0, 1, 2, 0, 1]])


def test_negative_control_one_eighth():
    g = half_cube(3)
    hits = sum(negative_control(3, g, 300, RngStream(1, (("r", r),))) == 1.0 for r in range(10**4))
    assert abs(hits / 10**4 - 0.125) <= 0.02


def test_required_k():
    assert required_k(1.5) == 5
    assert required_k(1.9) == 3
    assert required_k(1.1) == 21
    assert required_k(1.4) == 7
    for p in (1.0, 2.0, 0.5, 2.5):
        with pytest.raises(ValueError):
            required_k(p)


@given(st.floats(1.001, 1.999))
def test_required_k_property(p):
    k = required_k(p)
    assert k % 2 == 1 and k > 2 / (p - 1) and k - 2 <= 2 / (p - 1)


def test_median_failure_bound():
    assert median_failure_bound(0.0, 3) == 0.0
    assert median_failure_bound(1 / 16, 3) == pytest.approx(1 / 8, rel=1e-14)
    assert median_failure_bound(1.0, 1) == 1.0
    for alpha in (0.01, 0.1, 0.2, 0.249):
        b = [median_failure_bound(alpha, k) for k in range(1, 22, 2)]
        assert all(y <= x for x, y in zip(b, b[1:]))
    with pytest.raises(ValueError):
        median_failure_bound(0.1, 2)
    with pytest.raises(ValueError):
        median_failure_bound(1.5, 3)


def test_slln_error_bound():
    p, k = 1.5, 5
    assert (p - 1) * k / 2 > 1
    n = np.arange(1, 10**6 + 1)
    terms = slln_error_bound(p, 1.0, 2.0, 0.1, n, k)
    partial = np.cumsum(terms)
    # integral comparison for a tail decaying like n^-1.25
    m = 10**5
    assert partial[-1] - partial[m - 1] <= terms[m - 1] * m / ((p - 1) * k / 2 - 1)
    assert np.all(np.diff(terms) <= 0)
    assert slln_error_bound(p, 1.0, 2.0, 0.1, 1, k) >= slln_error_bound(p, 1.0, 2.0, 0.1, 2, k)
    with pytest.raises(ValueError):
        slln_error_bound(2.0, 1.0, 1.0, 0.1, 10, 3)
    with pytest.raises(ValueError):
        slln_error_bound(1.5, 1.0, 1.0, 0.1, 10, 4)


def test_slln_constant():
    # c_p = 2^(2/p - 1) c^(1 - 1/p); with c = 1, p = 1.5, ||f|| = eps: bound = 2^k (2^(1/3))^(p k / 2) n^(-(p-1)k/2)
    p, k = 1.5, 3
    expected = 2**k * (2 ** (1 / 3)) ** (p * k / 2) * 4.0 ** (-(p - 1) * k / 2)
    assert slln_error_bound(p, 1.0, 0.3, 0.3, 4, k) == pytest.approx(expected, rel=1e-14)


def test_subsequence_schedule():
    assert subsequence_schedule(1.5, 4) == [1, 16, 81, 256]
    assert subsequence_schedule(2.0, 3) == [1, 4, 9]
    assert schedule_exponent(1.4) == 5
    with pytest.raises(ValueError):
        subsequence_schedule(1.0, 3)
    nj = np.array(subsequence_schedule(1.5, 10**4), dtype=np.float64)
    partial = np.cumsum(nj ** -0.5)
    # partial sums of j^-2 are Cauchy: the increment after 10^3 terms is below 1/10^3
    assert partial[-1] - partial[999] < 1e-3
    assert partial[-1] < math.pi**2 / 6
