"""Registry of integrands with known integrals and integrability classes."""

from __future__ import annotations

import json
import math
from functools import lru_cache

import numpy as np
from scipy import integrate

from .core import Integrand, RngStream

CLAMP = 2.0**-53


def _bump_factor(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    inside = (x > 0.0) & (x < 1.0)
    xi = x[inside]
    out[inside] = np.exp(-1.0 / (xi * (1.0 - xi)))
    return out


@lru_cache(maxsize=None)
def bump_factor_moment(p: float = 1.0) -> float:
    """int_0^1 bump(x)**p dx by adaptive Gauss-Kronrod quadrature."""
    val, err = integrate.quad(lambda t: float(_bump_factor(t)) ** p, 0.0, 1.0,
                              epsabs=1e-14, epsrel=1e-12, limit=200)
    return val


def constant(d: int, c: float = 1.0) -> Integrand:
    return Integrand(
        "const", d, lambda x: np.full(x.shape[0], float(c)), float(c),
        integrability=np.inf, lp_norm=lambda p: abs(c), tags=frozenset({"smooth"}),
        params={"c": c},
    )


def box_indicator(d: int, a: float = 0.5) -> Integrand:
    return Integrand(
        "box", d, lambda x: np.all(x < a, axis=1).astype(np.float64), a**d,
        integrability=np.inf, lp_norm=lambda p: a ** (d / p),
        tags=frozenset({"indicator"}), params={"a": a},
    )


def half_cube(d: int) -> Integrand:
    """Indicator of [0, 1/2] x [0, 1]^(d-1)."""
    return Integrand(
        "half_cube", d, lambda x: (x[:, 0] <= 0.5).astype(np.float64), 0.5,
        integrability=np.inf, lp_norm=lambda p: 0.5 ** (1 / p),
        tags=frozenset({"indicator", "negative-control-target"}),
    )


def exp_sum(d: int) -> Integrand:
    def norm(p):
        return (((math.exp(p) - 1.0) / p) ** d) ** (1.0 / p)

    return Integrand(
        "exp_sum", d, lambda x: np.exp(x.sum(axis=1)), (math.e - 1.0) ** d,
        integrability=np.inf, lp_norm=norm, tags=frozenset({"smooth"}),
    )


def singular(d: int, gamma: float) -> Integrand:
    """prod_j x_j**-gamma, in L^p exactly for p < 1/gamma."""
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")

    def f(x):
        return np.prod(np.maximum(x, CLAMP) ** -gamma, axis=1)

    def norm(p):
        if p * gamma >= 1:
            return math.inf
        return ((1.0 - gamma * p) ** -d) ** (1.0 / p)

    # Per factor the clamp removes gamma * CLAMP**(1 - gamma) / (1 - gamma) of
    # mass; to first order the product loses d times that, scaled by the rest.
    clamp_bias = d * gamma * CLAMP ** (1 - gamma) * (1 - gamma) ** -d
    return Integrand(
        f"singular_{gamma:g}", d, f, (1.0 - gamma) ** -d, integrability=1.0 / gamma,
        lp_norm=norm, tags=frozenset({"singular"}), tolerance=max(clamp_bias, 1e-12),
        params={"gamma": gamma},
    )


def additive_quadratic(d: int) -> Integrand:
    def norm(p):
        if p == 1:
            return d / 3.0
        if p == 2:
            return math.sqrt(d / 5.0 + d * (d - 1) / 9.0)
        raise NotImplementedError("additive quadratic norm only for p in {1, 2}")

    return Integrand(
        "quadratic", d, lambda x: np.sum(x**2, axis=1), d / 3.0, integrability=np.inf,
        lp_norm=norm, tags=frozenset({"additive", "smooth"}),
    )


def bump(d: int) -> Integrand:
    """prod_j exp(-1/(x_j (1 - x_j))); smooth with compact support in (0,1)^d."""
    i1 = bump_factor_moment(1.0)

    def norm(p):
        return bump_factor_moment(float(p)) ** (d / p)

    return Integrand(
        "bump", d, lambda x: np.prod(_bump_factor(x), axis=1), i1**d, integrability=np.inf,
        lp_norm=norm, tags=frozenset({"smooth"}), tolerance=1e-12 * d * i1**d,
    )


def registry(d: int) -> list[Integrand]:
    if d < 1:
        raise ValueError("d must be positive")
    return [
        constant(d),
        box_indicator(d, 0.5),
        half_cube(d),
        exp_sum(d),
        singular(d, 0.5),
        singular(d, 0.7),
        additive_quadratic(d),
        bump(d),
    ]


def get(name: str, d: int, **params) -> Integrand:
    builders = {
        "const": constant, "box": box_indicator, "half_cube": half_cube,
        "exp_sum": exp_sum, "quadratic": additive_quadratic, "bump": bump,
    }
    if name.startswith("singular"):
        gamma = params.pop("gamma", None)
        if gamma is None:
            gamma = float(name.split("_", 1)[1]) if "_" in name else 0.5
        return singular(d, gamma)
    if name not in builders:
        raise KeyError(f"unknown integrand {name!r}; known: {sorted(builders) + ['singular_<gamma>']}")
    return builders[name](d, **params)


def names() -> list[str]:
    return [f.name for f in registry(1)]


def manifest(d: int) -> list[dict]:
    return [
        {
            "name": f.name, "d": f.dimension, "exact_integral": f.exact_integral,
            "p_star": None if np.isinf(f.integrability) else f.integrability,
            "tolerance": f.tolerance, "tags": sorted(f.tags),
        }
        for f in registry(d)
    ]


def write_manifest(path, dims=(1, 2, 3)):
    rows = [row for d in dims for row in manifest(d)]
    with open(path, "w") as fh:
        json.dump({"schema_version": 1, "integrands": rows}, fh, indent=2)


def verify_entry(f: Integrand, samples: int = 10**7, stream: RngStream | None = None,
                 chunk: int = 10**6) -> tuple[bool, float, float]:
    """Check ``exact_integral`` against an iid Monte Carlo average.

    Returns (ok, estimate, standard_error); ok means within 5 standard errors.
    Integrands without a finite variance are checked with product quadrature.
    """
    if not f.in_lp(2.0):
        gamma = f.params["gamma"]
        factor, _ = integrate.quad(lambda t: 1.0, 0.0, 1.0, weight="alg", wvar=(-gamma, 0.0))
        est = factor**f.dimension
        return abs(est - f.exact_integral) <= 1e-9 * f.exact_integral, est, 0.0
    stream = stream or RngStream(20240601, (("verify", 0),))
    rng = stream.generator()
    s1 = s2 = 0.0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        v = f(rng.random((m, f.dimension)))
        s1 += v.sum()
        s2 += (v * v).sum()
        done += m
    mean = s1 / samples
    var = max(s2 / samples - mean**2, 0.0)
    se = math.sqrt(var / samples)
    return abs(mean - f.exact_integral) <= 5 * se + f.tolerance, mean, se
