"""Command-line interface.

Exit codes: 0 success, 1 acceptance failure, 2 usage error, 3 budget refusal.
The default seed comes from ``RQMC_SEED`` (0 if unset) and ``--seed``
overrides it.  ``--config FILE`` reads ``key=value`` lines whose keys are the
long flag names without dashes; explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, testfunctions
from .acceptance import run_suite
from .core import BudgetExceeded, RngStream
from .discrepancy import discrepancy_report, star_discrepancy_exact
from .estimators import METHODS, SUBSTRATES, EstimatorSpec, check_odd, draw, median_stream
from .harness import SCHEMA_VERSION, StudyConfig, amplification_study, fmt, mean_error_trend, replicate
from .sequences import default_lattice, faure, halton, hammersley, rank1_lattice

DETERMINISTIC = ("halton", "hammersley", "faure", "lattice")
PRESETS = ("replicate", "amplification", "trend")


class UsageError(Exception):
    pass


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _odd(text: str) -> int:
    try:
        return check_odd(int(text))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _odd_list(text: str) -> tuple[int, ...]:
    vals = _int_list(text)
    for v in vals:
        _odd(str(v))
    return vals


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _method_flags(p: argparse.ArgumentParser, choices):
    p.add_argument("--method", choices=choices)
    p.add_argument("--d", type=_positive)
    p.add_argument("--seed", type=int)
    p.add_argument("--substrate", choices=SUBSTRATES)
    p.add_argument("--base", type=int)
    p.add_argument("--randomization", choices=("nested", "shift"))
    p.add_argument("--m", type=_positive, help="recycled sample size of the negative control")
    p.add_argument("--a", type=int, help="Korobov multiplier for lattice substrates")
    p.add_argument("--config", type=Path, help="key=value file supplying defaults for these flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rqmc", description="Randomized quasi-Monte Carlo toolkit")
    parser.add_argument("--version", action="version", version=f"rqmc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("points", help="write a point set")
    _method_flags(p, METHODS + DETERMINISTIC)
    p.add_argument("--n", type=_positive)
    p.add_argument("--out", type=Path)
    p.add_argument("--format", choices=("csv", "json"))

    p = sub.add_parser("integrate", help="one (median-of-k) estimate")
    _method_flags(p, METHODS)
    p.add_argument("--integrand")
    p.add_argument("--n", type=_positive)
    p.add_argument("--k", type=_odd)

    p = sub.add_parser("experiment", help="replication study writing JSON and CSV")
    _method_flags(p, METHODS)
    p.add_argument("--integrand")
    p.add_argument("--n-grid", type=_int_list)
    p.add_argument("--R", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--k-list", type=_odd_list)
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--workers", type=_positive)
    p.add_argument("--out", type=Path, help="output prefix; writes PREFIX.json and PREFIX.csv")

    p = sub.add_parser("discrepancy", help="discrepancy of a generated point set")
    _method_flags(p, METHODS + DETERMINISTIC)
    p.add_argument("--n", type=_positive)
    p.add_argument("--exact", action="store_true", help="fail with exit 3 if exact D* is over budget")

    p = sub.add_parser("integrands", help="write the integrand manifest")
    p.add_argument("--dims", type=_int_list, default=(1, 2, 3))
    p.add_argument("--out", type=Path)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--suite", choices=("quick", "full"), default="quick")
    p.add_argument("--seed", type=int, default=0, help="offset added to every criterion's seed")
    p.add_argument("--out", type=Path, default=Path("rqmc-verdict.json"))
    return parser


DEFAULTS = {
    "method": None, "d": 1, "substrate": "lattice", "base": None, "randomization": "nested", "m": 3,
    "a": None, "n": None, "out": None, "format": "csv", "integrand": None, "k": 1,
    "n_grid": None, "R": 100, "eps": None, "k_list": (1,), "preset": "replicate", "workers": 1,
}
CONVERTERS = {
    "d": _positive, "base": int, "m": _positive, "a": int, "n": _positive, "out": Path,
    "k": _odd, "n_grid": _int_list, "R": int, "eps": float, "k_list": _odd_list, "workers": _positive,
    "seed": int,
}


def read_config(path: Path, parser: argparse.ArgumentParser, args: argparse.Namespace) -> dict:
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}")
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        attr = key.replace("-", "_")
        if attr in ("command", "config") or not hasattr(args, attr):
            raise UsageError(f"{path}:{no}: unknown key {key!r}")
        try:
            out[attr] = CONVERTERS.get(attr, str)(value)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"{path}:{no}: bad value for {key}: {exc}")
        allowed = _choices(parser, args.command, attr)
        if allowed is not None and out[attr] not in allowed:
            raise UsageError(f"{path}:{no}: {key} must be one of {list(allowed)}")
    return out


def _choices(parser: argparse.ArgumentParser, command: str, attr: str):
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for action in sub.choices[command]._actions:
        if action.dest == attr:
            return action.choices
    return None


def resolve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> argparse.Namespace:
    """Fill unset flags from the config file, then the environment, then defaults."""
    conf = read_config(args.config, parser, args) if getattr(args, "config", None) else {}
    for key, default in DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, conf.get(key, default))
    if hasattr(args, "seed") and args.seed is None:
        if "seed" in conf:
            args.seed = conf["seed"]
        else:
            env = os.environ.get("RQMC_SEED")
            try:
                args.seed = int(env) if env else 0
            except ValueError:
                raise UsageError(f"RQMC_SEED must be an integer, got {env!r}")
    if hasattr(args, "method") and args.method is None:
        raise UsageError("--method is required")
    return args


def make_spec(args) -> EstimatorSpec:
    params = {}
    if args.method == "scrambled_net":
        params = {"randomization": args.randomization}
        if args.base is not None:
            params["base"] = args.base
    elif args.method == "cranley_patterson":
        params = {"substrate": args.substrate}
        if args.a is not None:
            params["a"] = args.a
    elif args.method == "negative_control":
        params = {"m": args.m}
    try:
        return EstimatorSpec(args.method, args.d, params)
    except ValueError as exc:
        raise UsageError(str(exc))


def provenance(args, **extra) -> dict:
    out = dict(extra)
    out.update({"schema_version": SCHEMA_VERSION, "rqmc_version": __version__, "method": args.method,
                "d": args.d, "seed": args.seed})
    return out


def generate(args) -> tuple[np.ndarray, dict]:
    if args.method in DETERMINISTIC:
        if args.method == "halton":
            ps = halton(args.n, args.d)
        elif args.method == "hammersley":
            if args.d < 2:
                raise UsageError("hammersley needs --d >= 2")
            ps = hammersley(args.n, args.d)
        elif args.method == "faure":
            ps = faure(args.n, args.d, args.base)
        else:
            ps = rank1_lattice(default_lattice(args.n, args.d, args.a))
        return ps.points, dict(ps.provenance)
    spec = make_spec(args)
    s = draw(spec, args.n, RngStream(args.seed))
    info = {"params": spec.params, "denominator": s.denominator, **s.extra}
    return s.points, info


def _write(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", newline="") as fh:
            fh.write(text)


def cmd_points(args) -> int:
    if args.n is None:
        raise UsageError("--n is required")
    x, info = generate(args)
    prov = provenance(args, **{**info, "n": args.n})
    if args.format == "json":
        text = json.dumps({"schema_version": SCHEMA_VERSION, "provenance": prov,
                           "points": x.tolist()}, sort_keys=True) + "\n"
    else:
        lines = [f"# schema_version={SCHEMA_VERSION}", "# provenance=" + json.dumps(prov, sort_keys=True),
                 ",".join(f"x{j + 1}" for j in range(x.shape[1]))]
        lines += [",".join(fmt(v) for v in row) for row in x]
        text = "\n".join(lines) + "\n"
    _write(text, args.out)
    return 0


def cmd_integrate(args) -> int:
    if args.n is None or args.integrand is None:
        raise UsageError("--n and --integrand are required")
    spec = make_spec(args)
    f = _integrand(args.integrand, args.d)
    root = RngStream(args.seed)
    samples = [draw(spec, args.n, median_stream(root, i)) for i in range(args.k)]
    vals = [s.estimate(f) for s in samples]
    est = float(np.sort(vals)[args.k // 2])
    out = {"schema_version": SCHEMA_VERSION, "method": spec.label, "integrand": f.name, "d": args.d,
           "n": args.n, "k": args.k, "seed": args.seed, "estimate": est,
           "evaluations": int(sum(s.evaluations for s in samples)), "exact": f.exact_integral,
           "error": est - f.exact_integral}
    if spec.method == "frolov":
        Ns = [s.extra["N"] for s in samples]
        dets = [s.extra["detA"] for s in samples]
        out["N"], out["detA"] = (Ns[0], dets[0]) if args.k == 1 else (Ns, dets)
    print(json.dumps(out, sort_keys=True))
    return 0


def _integrand(name: str, d: int):
    try:
        return testfunctions.get(name, d)
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc))


def cmd_experiment(args) -> int:
    missing = [k for k in ("integrand", "n_grid") if getattr(args, k) is None]
    if missing:
        raise UsageError("missing required settings: " + ", ".join("--" + m.replace("_", "-") for m in missing))
    spec = make_spec(args)
    _integrand(args.integrand, args.d)
    grid = args.n_grid
    if args.preset == "amplification":
        grid = grid[-1:]
    try:
        cfg = StudyConfig(spec, args.integrand, grid, args.R, args.eps, args.k_list, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc))
    result = replicate(cfg, workers=args.workers)
    payload = json.loads(result.to_json())
    if args.preset == "amplification":
        tab = amplification_study(cfg, result=result)
        payload["amplification"] = {
            "n": tab.n, "alpha_hat": tab.alpha_hat, "alpha_upper": tab.alpha_upper,
            "monotone": tab.monotone, "passed": tab.passed,
            "rows": [vars(r) for r in tab.rows],
        }
    elif args.preset == "trend":
        v = mean_error_trend(cfg, result=result)
        payload["trend"] = {"slope": v.slope, "first_error": v.first_error, "last_error": v.last_error,
                            "passed": v.passed, "note": v.note}
    json_text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out is None:
        sys.stdout.write(result.to_csv())
        return 0
    prefix = Path(args.out)
    _write(json_text, prefix.with_suffix(".json"))
    _write(result.to_csv(), prefix.with_suffix(".csv"))
    return 0


def cmd_discrepancy(args) -> int:
    if args.n is None:
        raise UsageError("--n is required")
    x, _ = generate(args)
    rep = star_discrepancy_exact(x) if args.exact else discrepancy_report(x)
    print(json.dumps({"schema_version": SCHEMA_VERSION, "method": args.method, "n": rep.n, "d": rep.d,
                      "seed": args.seed, "l2star": rep.l2star, "star": rep.star,
                      "witness_box": rep.witness_box}, sort_keys=True))
    return 0


def cmd_integrands(args) -> int:
    rows = [row for d in args.dims for row in testfunctions.manifest(d)]
    _write(json.dumps({"schema_version": SCHEMA_VERSION, "integrands": rows}, indent=2) + "\n", args.out)
    return 0


def cmd_verify(args) -> int:
    print(f"rqmc verify: {args.suite} suite, seed offset {args.seed}", flush=True)
    verdicts = run_suite(args.suite, report=lambda v: print(v.line(), flush=True), seed=args.seed)
    failed = [v for v in verdicts if not v.passed]
    _write(json.dumps({"schema_version": SCHEMA_VERSION, "suite": args.suite, "seed": args.seed,
                       "passed": not failed, "criteria": [v.as_dict() for v in verdicts]},
                      indent=2) + "\n", args.out)
    if failed:
        print("failed criteria: " + ", ".join(str(v.number) for v in failed), file=sys.stderr)
        return 1
    return 0


COMMANDS = {
    "points": cmd_points, "integrate": cmd_integrate, "experiment": cmd_experiment,
    "discrepancy": cmd_discrepancy, "integrands": cmd_integrands, "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command != "verify" and args.command != "integrands":
            resolve(args, parser)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"rqmc: error: {exc}", file=sys.stderr)
        return 2
    except BudgetExceeded as exc:
        print(f"rqmc: refused: {exc} (required {exc.required:.3g}, limit {exc.limit:.3g})", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
