import json
import math

import mpmath
import numpy as np
import pytest

from rqmc.core import RngStream
from rqmc.testfunctions import (
    CLAMP,
    box_indicator,
    bump,
    bump_factor_moment,
    get,
    manifest,
    names,
    registry,
    singular,
    verify_entry,
    write_manifest,
)


def test_registry_contents():
    assert names() == ["const", "box", "half_cube", "exp_sum", "singular_0.5", "singular_0.7", "quadratic", "bump"]
    for d in (1, 2, 5):
        assert all(f.dimension == d for f in registry(d))
    with pytest.raises(ValueError):
        registry(0)


def test_known_values():
    assert box_indicator(3, 0.5).exact_integral == 0.125
    s = singular(2, 0.5)
    assert s.exact_integral == 4.0 and s.integrability == 2.0
    assert s.in_lp(1.9) and not s.in_lp(2.0)
    assert get("exp_sum", 2).exact_integral == pytest.approx((math.e - 1) ** 2)
    assert get("quadratic", 4).exact_integral == pytest.approx(4 / 3)
    assert get("singular_0.7", 1).integrability == pytest.approx(1 / 0.7)
    assert get("singular", 1, gamma=0.3).params["gamma"] == 0.3
    with pytest.raises(KeyError):
        get("nope", 1)


def test_bump_dual_quadrature():
    mpmath.mp.dps = 30
    ref = mpmath.quad(lambda t: mpmath.exp(-1 / (t * (1 - t))), [0, 0.5, 1])
    assert abs(bump_factor_moment(1.0) - float(ref)) <= 1e-9
    assert abs(bump(1).exact_integral - float(ref)) <= 1e-9
    ref2 = mpmath.quad(lambda t: mpmath.exp(-2 / (t * (1 - t))), [0, 0.5, 1])
    assert bump(2).lp_norm(2) == pytest.approx(float(ref2), rel=1e-9)


def test_bump_vanishes_on_boundary():
    f = bump(2)
    x = np.array([[0.0, 0.5], [0.5, 0.0], [0.5, 0.5]])
    v = f(x)
    assert v[0] == 0 and v[1] == 0 and v[2] == pytest.approx(math.exp(-8))


def test_singular_clamped_and_finite():
    for g in (0.5, 0.7):
        f = singular(3, g)
        v = f(np.array([[0.0, 0.0, 0.0], [0.5, 0.5, 0.5]]))
        assert np.all(np.isfinite(v))
        assert v[0] == pytest.approx(CLAMP ** (-3 * g))
        loss = g * CLAMP ** (1 - g) / (1 - g)
        assert singular(1, g).tolerance == pytest.approx(loss, rel=1e-12)
        if g <= 0.5:
            assert loss < 1e-7


def test_lp_norms_against_quadrature():
    for f in registry(1):
        if "singular" in f.tags:
            g = f.params["gamma"]
            for p in (1.0, 1.2):
                # substitute t = s**20 to remove the endpoint singularity
                ref = mpmath.quad(lambda s: 20 * s ** (19 - 20 * g * p), [0, 1])
                assert f.lp_norm(p) == pytest.approx(float(ref) ** (1 / p), rel=1e-9)
            continue
        for p in (1.0, 1.2) if f.name != "quadratic" else (1.0, 2.0):
            ref = mpmath.quad(lambda t: abs(float(f(np.array([[float(t)]]))[0])) ** p, [0, 0.5, 1])
            assert f.lp_norm(p) == pytest.approx(float(ref) ** (1 / p), rel=1e-6), f.name


def test_manifest_roundtrip(tmp_path):
    path = tmp_path / "m.json"
    write_manifest(path, dims=(1, 2))
    data = json.loads(path.read_text())
    assert data["schema_version"] == 1 and len(data["integrands"]) == 16
    row = next(r for r in manifest(2) if r["name"] == "singular_0.5")
    assert row["p_star"] == 2.0 and row["exact_integral"] == 4.0


@pytest.mark.parametrize("d", [1, 2, 3])
def test_verify_entries(d):
    for f in registry(d):
        ok, est, se = verify_entry(f, stream=RngStream(17, (("d", d),)))
        assert ok, (f.name, d, est, f.exact_integral, se)
