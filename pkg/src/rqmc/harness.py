"""Replication studies: finite-sample certificates for consistency properties.

Every realization is keyed by ``(n, replication)`` through derived streams,
and results are reduced in index order, so the output does not depend on the
number of worker processes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import testfunctions
from .core import Integrand, RngStream
from .estimators import (
    EstimatorSpec,
    check_odd,
    median_failure_bound,
    median_stream,
    realize,
    required_k,
    subsequence_schedule,
)
from .scramble import ScrambledSequenceStream

SCHEMA_VERSION = 1
CSV_COLUMNS = [
    "schema_version", "method", "integrand", "d", "n", "k", "R", "mean", "mean_abs_error",
    "variance", "fail_prob", "fail_lo", "fail_hi", "mean_evals", "seed",
]


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials <= 0:
        raise ValueError("trials must be positive")
    z = stats.norm.ppf(0.5 + confidence / 2.0)
    phat = successes / trials
    denom = 1.0 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


def loglog_slope(x, y) -> Optional[float]:
    """Least-squares slope of log2 y against log2 x; None if undefined."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    ok = (x > 0) & (y > 0) & np.isfinite(y)
    if ok.sum() < 3:
        return None
    return float(np.polyfit(np.log2(x[ok]), np.log2(y[ok]), 1)[0])


@dataclass(frozen=True)
class StudyConfig:
    spec: EstimatorSpec
    integrand: str
    n_grid: tuple[int, ...]
    R: int = 100
    eps: Optional[float] = None
    k_list: tuple[int, ...] = (1,)
    master_seed: int = 0
    integrand_params: dict = field(default_factory=dict)

    def __post_init__(self):
        grid = tuple(int(v) for v in self.n_grid)
        object.__setattr__(self, "n_grid", grid)
        object.__setattr__(self, "k_list", tuple(check_odd(k) for k in self.k_list))
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 1:
            raise ValueError("n_grid must be a strictly increasing list of positive budgets")
        if self.R < 2:
            raise ValueError("R must be at least 2")

    def function(self) -> Integrand:
        return testfunctions.get(self.integrand, self.spec.d, **dict(self.integrand_params))

    def root(self) -> RngStream:
        return RngStream(self.master_seed, (("study", 0),))


@dataclass
class ResultRow:
    n: int
    k: int
    R: int
    mean: float
    mean_abs_error: float
    variance: float
    fail_prob: float
    fail_lo: float
    fail_hi: float
    mean_evals: float


@dataclass
class ExperimentResult:
    method: str
    integrand: str
    d: int
    exact: float
    eps: float
    seed: int
    rows: list[ResultRow]
    variance_slope: Optional[float] = None
    mean_error_slope: Optional[float] = None
    estimates: dict = field(default_factory=dict)

    def row(self, n: int, k: int = 1) -> ResultRow:
        for r in self.rows:
            if r.n == n and r.k == k:
                return r
        raise KeyError((n, k))

    def to_json(self) -> str:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "method": self.method, "integrand": self.integrand, "d": self.d,
            "exact": self.exact, "eps": self.eps, "seed": self.seed,
            "slopes": {"variance": self.variance_slope, "mean_abs_error": self.mean_error_slope},
            "rows": [asdict(r) for r in self.rows],
        }
        return json.dumps(_finite(payload), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([
                SCHEMA_VERSION, self.method, self.integrand, self.d, r.n, r.k, r.R,
                fmt(r.mean), fmt(r.mean_abs_error), fmt(r.variance), fmt(r.fail_prob),
                fmt(r.fail_lo), fmt(r.fail_hi), fmt(r.mean_evals), self.seed,
            ])
        return buf.getvalue()


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _finite(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite(v) for v in obj]
    return obj


def _task(args):
    spec, fname, fparams, n, reps, kmax, root = args
    f = testfunctions.get(fname, spec.d, **fparams)
    vals = np.empty((len(reps), kmax))
    evals = np.empty((len(reps), kmax))
    for a, r in enumerate(reps):
        s_rep = root.child("n", n).child("rep", r)
        for i in range(kmax):
            rec = realize(spec, f, n, median_stream(s_rep, i), r)
            vals[a, i] = rec.value
            evals[a, i] = rec.evaluations_used
    return vals, evals


def realizations(config: StudyConfig, n: int, workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """(R, kmax) arrays of estimates and evaluation counts at budget n.

    Column i holds copy i of the median; column 0 is the plain estimator.
    """
    kmax = max(config.k_list)
    fparams = dict(config.integrand_params)
    root = config.root()
    reps = list(range(config.R))
    if workers <= 1:
        return _task((config.spec, config.integrand, fparams, n, reps, kmax, root))
    chunks = [reps[i::workers] for i in range(workers)]
    chunks = [c for c in chunks if c]
    vals = np.empty((config.R, kmax))
    evals = np.empty((config.R, kmax))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        jobs = [(config.spec, config.integrand, fparams, n, c, kmax, root) for c in chunks]
        for c, (v, e) in zip(chunks, pool.map(_task, jobs)):
            vals[c] = v
            evals[c] = e
    return vals, evals


def default_eps(config: StudyConfig, f: Integrand) -> float:
    """0.25 times the pilot standard deviation at the smallest budget."""
    pilot_root = config.root().child("pilot", 0)
    n0 = config.n_grid[0]
    vals = [realize(config.spec, f, n0, pilot_root.child("rep", r)).value for r in range(64)]
    sd = float(np.std(vals, ddof=1))
    return max(0.25 * sd, 1e-12)


def summarize(values: np.ndarray, evals: np.ndarray, exact: float, eps: float, n: int, k: int) -> ResultRow:
    R = values.size
    err = values - exact
    fails = int(np.count_nonzero(np.abs(err) > eps))
    lo, hi = wilson_interval(fails, R)
    return ResultRow(
        n=n, k=k, R=R, mean=float(values.mean()), mean_abs_error=float(np.mean(np.abs(err))),
        variance=float(values.var(ddof=1)), fail_prob=fails / R, fail_lo=lo, fail_hi=hi,
        mean_evals=float(evals.mean()),
    )


def replicate(config: StudyConfig, workers: int = 1, keep_estimates: bool = False) -> ExperimentResult:
    f = config.function()
    eps = config.eps if config.eps is not None else default_eps(config, f)
    rows = []
    kept = {}
    for n in config.n_grid:
        vals, evals = realizations(config, n, workers)
        if keep_estimates:
            kept[n] = vals
        for k in sorted(config.k_list):
            med = np.sort(vals[:, :k], axis=1)[:, k // 2]
            rows.append(summarize(med, evals[:, :k].sum(axis=1), f.exact_integral, eps, n, k))
    base = [r for r in rows if r.k == min(config.k_list)]
    result = ExperimentResult(
        method=config.spec.label, integrand=f.name, d=config.spec.d, exact=f.exact_integral,
        eps=eps, seed=config.master_seed, rows=rows, estimates=kept,
    )
    if len(base) >= 3:
        result.variance_slope = loglog_slope([r.n for r in base], [r.variance for r in base])
        result.mean_error_slope = loglog_slope([r.n for r in base], [r.mean_abs_error for r in base])
    return result


@dataclass
class TrendVerdict:
    slope: Optional[float]
    first_error: float
    last_error: float
    passed: bool
    note: str = "pass iff slope < 0 and final error < half the initial error (engineering threshold)"


def mean_error_trend(config: StudyConfig, result: ExperimentResult | None = None,
                     workers: int = 1) -> TrendVerdict:
    if len(config.n_grid) < 4:
        raise ValueError("mean_error_trend needs at least 4 grid points")
    if result is None:
        result = replicate(config, workers)
    rows = sorted((r for r in result.rows if r.k == min(config.k_list)), key=lambda r: r.n)
    errs = [r.mean_abs_error for r in rows]
    slope = loglog_slope([r.n for r in rows], errs)
    passed = slope is not None and slope < 0 and errs[-1] < errs[0] / 2
    return TrendVerdict(slope, errs[0], errs[-1], bool(passed))


@dataclass
class AmplificationRow:
    k: int
    fail_prob: float
    fail_lo: float
    fail_hi: float
    bound: float
    within_bound: bool
    point_bound: float


@dataclass
class AmplificationTable:
    n: int
    eps: float
    alpha_hat: float
    alpha_upper: float
    rows: list[AmplificationRow]
    monotone: bool

    @property
    def passed(self) -> bool:
        return self.monotone and all(r.within_bound for r in self.rows)


def amplification_study(config: StudyConfig, n: Optional[int] = None, workers: int = 1,
                        result: ExperimentResult | None = None) -> AmplificationTable:
    """Compare median failure rates with 2**k * alpha_bar**(k/2).

    alpha_bar is the Wilson upper bound of the k = 1 failure rate; an
    empirical rate passes when its Wilson lower bound does not exceed the
    theoretical bound.  ``point_bound`` uses the raw rate instead.
    """
    ks = sorted(set(config.k_list) | {1})
    cfg = StudyConfig(config.spec, config.integrand, (n or config.n_grid[-1],), config.R,
                      config.eps, tuple(ks), config.master_seed, dict(config.integrand_params))
    if result is None:
        result = replicate(cfg, workers)
    n = cfg.n_grid[0]
    base = result.row(n, 1)
    alpha_upper = base.fail_hi
    rows = []
    for k in ks:
        r = result.row(n, k)
        bound = median_failure_bound(alpha_upper, k)
        rows.append(AmplificationRow(k, r.fail_prob, r.fail_lo, r.fail_hi, bound, r.fail_lo <= bound,
                                     median_failure_bound(base.fail_prob, k)))
    probs = [r.fail_prob for r in rows]
    monotone = all(b <= a for a, b in zip(probs, probs[1:]))
    return AmplificationTable(n, result.eps, base.fail_prob, alpha_upper, rows, monotone)


def _prefix_estimates(spec: EstimatorSpec, f: Integrand, n_max: int, stream: RngStream) -> np.ndarray:
    """Running means S_1 f, ..., S_{n_max} f along one prefix-consistent trajectory."""
    if spec.method == "iid":
        x = stream.generator().random((n_max, spec.d))
    elif spec.method == "scrambled_net":
        p = spec.params
        x = ScrambledSequenceStream(spec.d, stream, base=p.get("base"),
                                    method=p.get("randomization", "nested")).points(n_max)
    else:
        raise ValueError(
            f"{spec.label} draws a fresh point set for every n and has no single trajectory; "
            "use subsequence_study instead")
    return np.cumsum(f(x)) / np.arange(1, n_max + 1)


@dataclass
class SllnResult:
    n_grid: tuple[int, ...]
    N: int
    k: int
    eps: float
    tail_sup: np.ndarray
    trajectories: np.ndarray

    @property
    def fraction_below(self) -> float:
        return float(np.mean(self.tail_sup < self.eps))


def slln_trajectory(spec: EstimatorSpec, f: Integrand, p: float, n_grid: Sequence[int], k: int,
                    seed: int, eps: float = 0.1, seeds: int = 50,
                    N: Optional[int] = None) -> SllnResult:
    """Median-of-k trajectories along nested prefixes.

    For each seed, S_{n,k} f is computed for every n up to max(n_grid); the
    tail supremum of |S_{n,k} f - I(f)| is taken over all n in
    [N, max(n_grid)], with N the median of the grid unless given.
    """
    check_odd(k)
    if 1.0 < p < 2.0 and k < required_k(p):
        raise ValueError(f"k={k} is below required_k({p})={required_k(p)}")
    if not spec.prefix_consistent:
        raise ValueError(
            f"{spec.label} is not prefix-consistent; use subsequence_study instead")
    grid = sorted(int(v) for v in n_grid)
    n_max = grid[-1]
    N = int(np.median(grid)) if N is None else int(N)
    root = RngStream(seed, (("slln", 0),))
    sups = np.empty(seeds)
    traj = np.empty((seeds, len(grid)))
    idx = np.asarray(grid) - 1
    for s in range(seeds):
        sr = root.child("seed", s)
        runs = np.stack([_prefix_estimates(spec, f, n_max, sr.child("copy", i)) for i in range(k)])
        med = np.sort(runs, axis=0)[k // 2]
        err = np.abs(med - f.exact_integral)
        sups[s] = err[N - 1:].max()
        traj[s] = med[idx]
    return SllnResult(tuple(grid), N, k, eps, sups, traj)


@dataclass
class SubsequenceResult:
    schedule: list[int]
    estimates: list[float]
    errors: list[float]


def subsequence_study(spec: EstimatorSpec, f: Integrand, p: float, count: int, seed: int) -> SubsequenceResult:
    """Single realizations of S_{n_j} f along n_j = j**s (independent per j)."""
    sched = subsequence_schedule(p, count)
    root = RngStream(seed, (("subsequence", 0),))
    ests = [realize(spec, f, nj, root.child("j", j)).value for j, nj in enumerate(sched)]
    return SubsequenceResult(sched, ests, [abs(e - f.exact_integral) for e in ests])
