"""Acceptance suite: each criterion is a function returning a :class:`Verdict`.

The same functions back ``rqmc verify`` and ``tests/test_acceptance.py``.
Sizes, seeds and tolerances are fixed here so that a verdict is reproducible.
"""

from __future__ import annotations

import itertools
import math
import tempfile
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import stats

from . import testfunctions
from .core import RngStream
from .discrepancy import l2_star_discrepancy, local_discrepancy, star_discrepancy_exact
from .estimators import EstimatorSpec, draw, negative_control, required_k
from .frolov import enumerate_points, frolov_generator, randomize_dilation
from .harness import (
    StudyConfig,
    amplification_study,
    mean_error_trend,
    replicate,
    slln_trajectory,
)
from .randomize import strata_counts
from .scramble import ScrambleKey, nested_uniform_scramble
from .sequences import faure, faure_digits, halton, hammersley, index_capacity


@dataclass
class Verdict:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number:>2} {self.title}: {self.detail} ({self.seconds:.1f}s)"

    def as_dict(self) -> dict:
        return asdict(self)


def all_specs(d: int) -> list[EstimatorSpec]:
    """Every method (and every substrate or scrambling variant) valid in dimension d."""
    specs = [
        EstimatorSpec("iid", d),
        EstimatorSpec("lhs", d),
        EstimatorSpec("scrambled_net", d, {"randomization": "nested"}),
        EstimatorSpec("scrambled_net", d, {"randomization": "shift"}),
    ]
    subs = ["lattice", "halton", "faure"] + (["hammersley"] if d >= 2 else [])
    specs += [EstimatorSpec("cranley_patterson", d, {"substrate": s}) for s in subs]
    specs += [EstimatorSpec("frolov", d), EstimatorSpec("negative_control", d, {"m": 3})]
    return specs


def spec_name(spec: EstimatorSpec) -> str:
    if spec.method == "scrambled_net":
        return f"scrambled_{spec.params.get('randomization', 'nested')}"
    return spec.label


def _rep_stream(seed: int, *path) -> RngStream:
    return RngStream(seed, tuple(path))


def elementary_interval_counts(points: np.ndarray, b: int, k: int) -> dict:
    """Counts of points in every elementary interval of volume b**-k.

    Returns {shape: counts array}, one entry per exponent vector summing to k.
    """
    n, d = points.shape
    out = {}
    for shape in itertools.product(range(k + 1), repeat=d):
        if sum(shape) != k:
            continue
        cell = np.zeros(n, dtype=np.int64)
        for j, kj in enumerate(shape):
            cell = cell * b**kj + np.floor(points[:, j] * b**kj).astype(np.int64)
        out[shape] = np.bincount(cell, minlength=b**k)
    return out


def is_net(points: np.ndarray, b: int, k: int) -> bool:
    """True when every elementary interval of volume b**-k holds exactly one point."""
    return all(np.all(c == 1) for c in elementary_interval_counts(points, b, k).values())


# -- criteria -----------------------------------------------------------------

def c01_negative_control(seed: int = 0) -> tuple[bool, str]:
    g = testfunctions.half_cube(3)
    R = 10**4
    hits = sum(negative_control(3, g, 300, _rep_stream(seed + 101, ("rep", r))) == 1.0 for r in range(R))
    p = hits / R
    return 0.105 <= p <= 0.145, f"P[S_n g = 1] = {p:.4f} (target 0.125, band [0.105, 0.145])"


def _unbiasedness(specs_for_d, names, R=2000, n=64, seed=202) -> list[str]:
    failures = []
    for d in (1, 2, 3):
        fs = [testfunctions.get(name, d) for name in names]
        for spec in specs_for_d(d):
            vals = np.empty((R, len(fs)))
            for r in range(R):
                s = draw(spec, n, _rep_stream(seed, ("d", d), ("rep", r)))
                vals[r] = [s.estimate(f) for f in fs]
            mean = vals.mean(axis=0)
            se = vals.std(axis=0, ddof=1) / math.sqrt(R)
            for f, m, e in zip(fs, mean, se):
                # 1e-12 relative floor covers estimators with zero sample variance
                if abs(m - f.exact_integral) > 4 * e + 1e-12 * abs(f.exact_integral):
                    failures.append(f"{spec_name(spec)}/{f.name}/d={d}: |{m:.6g} - {f.exact_integral:.6g}| > 4*{e:.3g}")
    return failures


def c02_unbiasedness(seed: int = 0) -> tuple[bool, str]:
    failures = _unbiasedness(all_specs, ["exp_sum", "box", "quadratic"], seed=seed + 202)
    count = sum(len(all_specs(d)) * 3 for d in (1, 2, 3))
    if failures:
        return False, f"{len(failures)}/{count} pairs outside 4 SE: " + "; ".join(failures[:5])
    return True, f"all {count} (method, integrand, d) triples within 4 SE of I(f)"


def c03_axioms(seed: int = 0) -> tuple[bool, str]:
    rng = np.random.default_rng(seed + 303)
    worst = 0.0
    mono_fail = []
    for spec_index in range(len(all_specs(2))):
        for trial in range(100):
            d = int(rng.integers(1, 4))
            specs = all_specs(d)
            if spec_index >= len(specs):
                d, specs = 2, all_specs(2)
            spec = specs[spec_index]
            reg = testfunctions.registry(d)
            f, g = (reg[i] for i in rng.choice(len(reg), 2, replace=True))
            a, b = rng.uniform(-2, 2, 2)
            s = draw(spec, 64, _rep_stream(seed + 303, ("spec", spec_index), ("trial", trial)))
            if s.evaluations == 0:
                continue
            fx, gx = f(s.points), g(s.points)
            h = a * fx + b * gx
            lhs = float(np.sum(h) / s.denominator)
            rhs = a * float(np.sum(fx) / s.denominator) + b * float(np.sum(gx) / s.denominator)
            worst = max(worst, abs(lhs - rhs))
            if not abs(lhs) <= float(np.sum(np.abs(h)) / s.denominator):
                mono_fail.append(spec_name(spec))
    ok = worst <= 1e-12 and not mono_fail
    return ok, f"max linearity residual {worst:.3g} (limit 1e-12); monotonicity violations: {len(mono_fail)}"


def c04_operator_norm(seed: int = 0) -> tuple[bool, str]:
    d, R = 2, 500
    reg = testfunctions.registry(d)
    failures, checked = [], 0
    for spec in all_specs(d):
        for n in (16, 256):
            vals = np.empty((R, len(reg)))
            for r in range(R):
                s = draw(spec, n, _rep_stream(seed + 404, ("n", n), ("rep", r)))
                vals[r] = [abs(s.estimate(f)) for f in reg]
            mean = vals.mean(axis=0)
            se = vals.std(axis=0, ddof=1) / math.sqrt(R)
            for f, m, e in zip(reg, mean, se):
                checked += 1
                norm1 = f.lp_norm(1.0)
                if m > norm1 + 4 * e + 1e-12 * norm1:
                    failures.append(f"{spec_name(spec)}/{f.name}/n={n}: {m:.6g} > {norm1:.6g} + 4*{e:.3g}")
    if failures:
        return False, f"{len(failures)}/{checked} violations: " + "; ".join(failures[:5])
    return True, f"E|S_n f| <= ||f||_1 + 4 SE for all {checked} (method, integrand, n)"


def c05_net_property(seed: int = 0) -> tuple[bool, str]:
    b, d = 3, 2
    bad = []
    for m in (2, 3):
        n = b**m
        if not is_net(faure(n, d, base=b).points, b, m):
            bad.append(f"unscrambled n={n}")
        dig = faure_digits(np.arange(n), d, b, index_capacity(b))
        for rep in range(100):
            key = ScrambleKey(_rep_stream(seed + 505, ("seed", rep)), b, dig.depth, d)
            if not is_net(nested_uniform_scramble(dig, key).points, b, m):
                bad.append(f"n={n} seed={rep}")
    return not bad, "net property holds for n=9, 27 before and after 100 scramblings" if not bad \
        else "violations: " + ", ".join(bad[:5])


def c06_lhs_strata(seed: int = 0) -> tuple[bool, str]:
    bad = []
    for n in (10, 64, 1000):
        for rep in range(20):
            x = draw(EstimatorSpec("lhs", 5), n, _rep_stream(seed + 606, ("n", n), ("seed", rep)))
            if not np.all(strata_counts(x.points) == 1):
                bad.append(f"n={n} seed={rep}")
    return not bad, "every stratum holds one point, n in {10, 64, 1000}, d=5, 20 runs each" if not bad \
        else "violations: " + ", ".join(bad[:5])


def c07_frolov_expectations(seed: int = 0) -> tuple[bool, str]:
    gen = frolov_generator(2)
    n = 256
    dets = np.array([randomize_dilation(gen, n, _rep_stream(seed + 707, ("det", r))).detA for r in range(10**4)])
    rel = abs(dets.mean() - n) / n
    counts = np.array([enumerate_points(randomize_dilation(gen, n, _rep_stream(seed + 707, ("count", r)))).N
                       for r in range(2000)])
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    ok = rel <= 0.01 and abs(counts.mean() - n) <= 4 * se
    return ok, (f"mean |det A| = {dets.mean():.3f} (rel. dev. {rel:.2%}); "
                f"mean N = {counts.mean():.3f}, |N - n| / SE = {abs(counts.mean() - n) / se:.2f}")


def c08_frolov_variance(seed: int = 0) -> tuple[bool, str]:
    cfg = StudyConfig(EstimatorSpec("frolov", 2), "bump", tuple(2**j for j in range(6, 13)),
                      R=200, eps=1e-3, master_seed=seed + 808)
    res = replicate(cfg)
    slope = res.variance_slope
    return slope is not None and slope <= -0.8, f"variance slope {slope:.3f} (limit -0.8)"


def c09_amplification(seed: int = 0) -> tuple[bool, str]:
    cfg = StudyConfig(EstimatorSpec("scrambled_net", 1), "singular_0.7", (4096,), R=2000, eps=0.2,
                      k_list=(1, 3, 5, 7), master_seed=seed + 909)
    tab = amplification_study(cfg)
    precondition = tab.alpha_upper < 0.25
    rows = ", ".join(f"k={r.k}: {r.fail_prob:.4f} (bound {r.bound:.4f})" for r in tab.rows)
    ok = precondition and tab.passed
    return ok, f"n={tab.n}, eps={tab.eps}, alpha_bar={tab.alpha_upper:.4f}; {rows}; monotone={tab.monotone}"


def c10_trend(seed: int = 0) -> tuple[bool, str]:
    grid = tuple(2**j for j in range(4, 13))
    bad = []
    parts = []
    for spec in all_specs(1):
        if spec.method == "negative_control":
            continue
        v = mean_error_trend(StudyConfig(spec, "singular_0.5", grid, R=500, eps=0.1, master_seed=seed + 1010))
        parts.append(f"{spec_name(spec)} {v.slope:.2f}")
        if not v.passed:
            bad.append(spec_name(spec))
    neg = mean_error_trend(StudyConfig(EstimatorSpec("negative_control", 1, {"m": 3}), "box", grid,
                                       R=500, eps=0.1, master_seed=seed + 1010))
    ok = not bad and not neg.passed
    detail = f"slopes: {', '.join(parts)}; negative control slope {neg.slope:.2f} passed={neg.passed}"
    if bad:
        detail = f"failing consistent methods: {bad}; " + detail
    return ok, detail


def c11_slln(seed: int = 0) -> tuple[bool, str]:
    k = 11
    # tail over n in [2^10, 2^14]; 2^10 is the median of the grid
    grid = tuple(2**j for j in range(6, 15))
    res = slln_trajectory(EstimatorSpec("scrambled_net", 1), testfunctions.get("singular_0.7", 1),
                          1.4, grid, k=k, seed=seed + 1111, eps=0.1, seeds=50, N=2**10)
    frac = res.fraction_below
    return frac >= 0.95, (f"k={k} (formula gives required_k(1.4)={required_k(1.4)}), N={res.N}: "
                          f"{frac:.0%} of 50 seeds have tail sup below 0.1 (median tail sup "
                          f"{np.median(res.tail_sup):.3f})")


def c12_discrepancy(seed: int = 0) -> tuple[bool, str]:
    x = hammersley(16, 2).points
    y = RngStream(seed + 1212).generator().random((10**6, 2))
    mc = float(np.mean(local_discrepancy(x, y) ** 2))
    warnock = l2_star_discrepancy(x) ** 2
    ok_l2 = abs(warnock - mc) <= 1e-3
    rng = np.random.default_rng(seed + 1212)
    worst = 0.0
    for _ in range(100):
        pts = rng.random(int(rng.integers(1, 50)))
        srt = np.sort(pts)
        i = np.arange(1, srt.size + 1)
        closed = np.max(np.maximum(np.abs(srt - (i - 1) / srt.size), np.abs(srt - i / srt.size)))
        worst = max(worst, abs(star_discrepancy_exact(pts[:, None]).star - closed))
    star = [star_discrepancy_exact(halton(n, 2)).star for n in (16, 64, 256)]
    dec = star[0] > star[1] > star[2]
    ok = ok_l2 and worst <= 1e-12 and dec
    return ok, (f"Warnock {warnock:.6f} vs MC {mc:.6f}; 1-D max deviation {worst:.2g}; "
                f"Halton D* {', '.join(f'{v:.4f}' for v in star)}")


def c13_determinism(seed: int = 0) -> tuple[bool, str]:
    from .cli import main

    with tempfile.TemporaryDirectory() as tmp:
        outs = []
        for w in (1, 4):
            out = Path(tmp) / f"w{w}"
            code = main(["experiment", "--method", "lhs", "--integrand", "exp_sum", "--d", "2",
                         "--n-grid", "16,64", "--R", "40", "--k-list", "1,3", "--seed", str(seed + 1313),
                         "--workers", str(w), "--out", str(out)])
            if code != 0:
                return False, f"experiment exited with {code} at workers={w}"
            outs.append((out.with_suffix(".csv")).read_bytes())
    same = outs[0] == outs[1]
    return same, "CSV byte-identical for workers 1 and 4" if same else "CSV differs between worker counts"


def planted_lhs_marginals(seed: int = 0) -> tuple[bool, str]:
    """Coordinates of LHS points, pooled over runs, must look uniform on 100 bins."""
    ps = [draw(EstimatorSpec("lhs", 2), 10, _rep_stream(seed + 1414, ("rep", r))).points for r in range(500)]
    x = np.concatenate(ps)
    pvals = [stats.chisquare(np.histogram(x[:, j], bins=100, range=(0.0, 1.0))[0]).pvalue for j in range(2)]
    return min(pvals) > 1e-3, f"chi-square p-values {', '.join(f'{p:.3g}' for p in pvals)} (level 0.001)"


CRITERIA: list[tuple[int, str, Callable[[], tuple[bool, str]], bool]] = [
    (1, "negative-control exactness", c01_negative_control, True),
    (2, "unbiasedness", c02_unbiasedness, True),
    (3, "linearity and monotonicity", c03_axioms, True),
    (4, "operator norm", c04_operator_norm, True),
    (5, "net property under scrambling", c05_net_property, True),
    (6, "LHS stratification", c06_lhs_strata, True),
    (7, "Frolov expectation identities", c07_frolov_expectations, True),
    (8, "Frolov variance decay", c08_frolov_variance, False),
    (9, "median amplification", c09_amplification, False),
    (10, "convergence-in-mean trend", c10_trend, False),
    (11, "SLLN trajectory", c11_slln, False),
    (12, "discrepancy oracles", c12_discrepancy, True),
    (13, "determinism across workers", c13_determinism, True),
    (14, "LHS marginal uniformity (planted)", planted_lhs_marginals, True),
]


def run_criterion(number: int, seed: int = 0) -> Verdict:
    for num, title, fn, _ in CRITERIA:
        if num == number:
            t0 = time.perf_counter()
            try:
                ok, detail = fn(seed)
            except Exception as exc:  # a crash is a failed criterion, not a crashed suite
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            return Verdict(num, title, bool(ok), detail, time.perf_counter() - t0)
    raise KeyError(number)


def suite(name: str) -> list[int]:
    if name == "quick":
        return [num for num, _, _, quick in CRITERIA if quick]
    if name == "full":
        return [num for num, *_ in CRITERIA]
    raise ValueError(f"unknown suite {name!r}; choose quick or full")


def run_suite(name: str, report: Callable[[Verdict], None] | None = None,
              seed: int = 0) -> list[Verdict]:
    """Run a suite; ``seed`` offsets every criterion's fixed seed (0 is the reference run)."""
    out = []
    for num in suite(name):
        v = run_criterion(num, seed)
        if report:
            report(v)
        out.append(v)
    return out
