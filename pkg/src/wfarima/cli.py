"""Command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
Every subcommand accepts ``--config FILE`` (JSON or YAML mapping of option
names to values); explicit flags override the file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from . import __version__
from .errors import FarimaError, InvalidParameterError
from .harness import ExperimentConfig, TimingConfig, run_monte_carlo, run_timing, timing_to_csv
from .inference import CURVATURE_MODES, MIN_FIT_LENGTH, closed_form_J, subsample_size
from .model import ParamVector
from .pipeline import FIT_METHODS, fit_series
from .simulate import NoiseSpec, SimConfig, check_simulable, simulate_farima

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# helpers


def _floats(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def read_series(path, column: Optional[int] = None) -> np.ndarray:
    """Read one numeric column from a CSV file; a non-numeric first row is a header."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}")
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise UsageError(f"{path}: no data")
    col = 0 if column is None else column
    if column is None and len(rows[0]) > 1:
        raise UsageError(f"{path}: {len(rows[0])} columns found; choose one with --column")

    def num(row):
        return float(row[col])

    try:
        num(rows[0])
        start = 0
    except (ValueError, IndexError):
        start = 1
    try:
        values = np.array([num(r) for r in rows[start:]], dtype=float)
    except (ValueError, IndexError) as exc:
        raise UsageError(f"{path}: non-numeric entry in column {col}: {exc}")
    if values.size == 0 or not np.all(np.isfinite(values)):
        raise UsageError(f"{path}: column {col} must contain finite numbers")
    return values


def _theta_from_args(args) -> ParamVector:
    ar = list(args.ar)
    ma = list(args.ma)
    if args.p is not None and args.p != len(ar):
        if ar or args.p < 0:
            raise UsageError(f"--p {args.p} does not match {len(ar)} AR coefficients")
        ar = [0.0] * args.p
    if args.q is not None and args.q != len(ma):
        if ma or args.q < 0:
            raise UsageError(f"--q {args.q} does not match {len(ma)} MA coefficients")
        ma = [0.0] * args.q
    try:
        return ParamVector(ar, ma, args.d)
    except InvalidParameterError as exc:
        raise UsageError(str(exc))


def _add_model_args(p, d_default=0.3):
    p.add_argument("--ar", "--a", type=_floats, default=[], metavar="A1,A2,..", help="AR coefficients a_1..a_p")
    p.add_argument("--ma", "--b", type=_floats, default=[], metavar="B1,B2,..", help="MA coefficients b_1..b_q")
    p.add_argument("--d", type=float, default=d_default, help="memory parameter d (default %(default)s)")
    p.add_argument("--p", type=int, default=None, help="AR order (inferred from --ar)")
    p.add_argument("--q", type=int, default=None, help="MA order (inferred from --ma)")


def _add_noise_args(p, default="strong_gaussian"):
    p.add_argument("--noise", choices=["strong_gaussian", "weak_product"], default=default)
    p.add_argument("--sigma", type=float, default=1.0, help="std dev of the Gaussian driver (default 1)")
    p.add_argument("--burnin", type=int, default=1000)


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _param_names(p: int, q: int) -> list[str]:
    return [f"a{i + 1}" for i in range(p)] + [f"b{j + 1}" for j in range(q)] + ["d"]


def format_fit_text(doc: dict) -> str:
    names = _param_names(doc["p"], doc["q"])
    lines = [
        f"method        {doc['method']}",
        f"n             {doc['n']}",
        f"m_used        {doc['m_used']}",
        f"sigma2        {doc['sigma2']:.6g}",
        f"curvature     {doc['curvature_mode']}",
        f"wall_time_s   {doc['wall_time']:.4f}",
        "",
        f"{'param':<8}{'estimate':>14}{'std_error':>14}",
    ]
    for name, v, s in zip(names, doc["theta"], doc["std_errors"]):
        lines.append(f"{name:<8}{v:>14.6f}{s:>14.6f}")
    for w in doc["warnings"]:
        lines.append(f"warning: {w}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    theta = _theta_from_args(args)
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    if args.burnin < 0:
        raise UsageError("--burnin must be >= 0")
    try:
        noise = NoiseSpec(args.noise, args.sigma, args.seed)
        check_simulable(theta)
    except ValueError as exc:
        raise UsageError(str(exc))
    x = simulate_farima(SimConfig(theta, args.n, args.burnin, noise))
    _write("x\n" + "".join(f"{v!r}\n" for v in x.tolist()), args.out)
    return EXIT_OK


def cmd_fit(args) -> int:
    if not (0.5 < args.delta <= 1.0):
        raise UsageError(f"--delta must satisfy 1/2 < delta <= 1 (interval (1/2, 1]), got {args.delta}")
    if args.p < 0 or args.q < 0:
        raise UsageError("--p and --q must be nonnegative")
    x = read_series(args.input, args.column)
    transform = "returns_squared_centered" if args.transform == "returns" else "none"
    if transform != "none" and np.any(x <= 0):
        raise UsageError("--transform returns needs strictly positive prices")
    fit = fit_series(x, args.p, args.q, args.method, args.delta, args.curvature, transform)
    doc = fit.to_dict()
    text = json.dumps(doc, indent=2) + "\n" if args.format == "json" else format_fit_text(doc)
    _write(text, args.out)
    return EXIT_OK


def _workers(args) -> int:
    if args.workers is not None:
        return args.workers
    env = os.environ.get("FARIMA_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"FARIMA_WORKERS must be an integer, got {env!r}")
    return 1


def cmd_mc(args) -> int:
    theta = _theta_from_args(args)
    if not (0.5 < args.delta <= 1.0):
        raise UsageError(f"--delta must satisfy 1/2 < delta <= 1, got {args.delta}")
    try:
        check_simulable(theta)
        cfg = ExperimentConfig(
            M=args.M,
            sim=SimConfig(theta, args.n, args.burnin, NoiseSpec(args.noise, args.sigma, 0)),
            delta=args.delta,
            methods=tuple(args.methods),
            curvature_mode=args.curvature,
            master_seed=args.seed,
            workers=_workers(args),
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    result = run_monte_carlo(cfg)
    prefix = Path(args.out)
    if prefix.parent and not prefix.parent.exists():
        prefix.parent.mkdir(parents=True)
    result.to_csv(f"{prefix}.csv")
    result.to_json(f"{prefix}.json")
    sys.stdout.write(json.dumps(result.summary_document(), indent=2) + "\n")
    return EXIT_OK


def cmd_timing(args) -> int:
    theta = _theta_from_args(args)
    sizes = list(args.sizes)
    if sizes != sorted(sizes) or not sizes:
        raise UsageError("--sizes must be a nonempty ascending list")
    if args.repetitions < 3:
        raise UsageError("--repetitions must be at least 3")
    if any(not (0.5 < d <= 1.0) for d in args.deltas):
        raise UsageError("every --deltas value must satisfy 1/2 < delta <= 1")
    if min(subsample_size(sizes[0], d) for d in args.deltas) < MIN_FIT_LENGTH:
        raise UsageError(f"smallest size {sizes[0]} leaves fewer than {MIN_FIT_LENGTH} subsample points")
    try:
        check_simulable(theta)
        cfg = TimingConfig(
            theta0=theta,
            noise=NoiseSpec(args.noise, args.sigma, 0),
            burnin=args.burnin,
            repetitions=args.repetitions,
            deltas=tuple(args.deltas),
            include_lse=not args.no_lse,
            curvature_mode=args.curvature,
            master_seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    rows = run_timing(sizes, cfg)
    if args.out:
        timing_to_csv(rows, args.out)
    lines = [f"{'n':>8}  {'method':<18}{'median_s':>12}"]
    lines += [f"{r['n']:>8}  {r['method']:<18}{r['median_time']:>12.4f}" for r in rows]
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_jmatrix(args) -> int:
    theta = _theta_from_args(args)
    if not args.sigma2 > 0:
        raise UsageError("--sigma2 must be positive")
    if args.N < 1:
        raise UsageError("--N must be >= 1")
    J = closed_form_J(theta, args.sigma2, args.N)
    if args.format == "json":
        doc = {"theta": theta.flat.tolist(), "p": theta.order.p, "q": theta.order.q,
               "sigma2": args.sigma2, "N": args.N, "J": J.tolist()}
        sys.stdout.write(json.dumps(doc, indent=2) + "\n")
    else:
        names = _param_names(theta.order.p, theta.order.q)
        lines = [f"closed-form J (N={args.N}, sigma2={args.sigma2:g})", " " * 6 + "".join(f"{s:>14}" for s in names)]
        for name, row in zip(names, J):
            lines.append(f"{name:<6}" + "".join(f"{v:>14.6f}" for v in row))
        sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(max_workers=args.max_workers, max_points=args.max_points)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> tuple[_Parser, dict[str, _Parser]]:
    parser = _Parser(
        prog="wfarima",
        description="Least-squares and one-step calibration of weak FARIMA(p,d,q) models.",
        epilog="Environment: FARIMA_WORKERS sets the default worker count for `mc`.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    subs = {}

    def add(name, help_text, **kw):
        p = sub.add_parser(name, help=help_text, description=help_text, **kw)
        p.add_argument("--config", metavar="FILE", help="JSON or YAML file of option defaults")
        subs[name] = p
        return p

    p = add("simulate", "Simulate a FARIMA path and write it as a one-column CSV.")
    _add_model_args(p)
    _add_noise_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = add("fit", "Fit a FARIMA(p,d,q) model to a series read from CSV.")
    p.add_argument("input", help="CSV with one numeric column (optional header)")
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--method", choices=FIT_METHODS, default="onestep")
    p.add_argument("--delta", type=float, default=0.9, help="subsample exponent, 1/2 < delta <= 1")
    p.add_argument("--curvature", choices=CURVATURE_MODES, default="outer_product")
    p.add_argument("--column", type=int, default=None, help="0-based column index for multi-column CSV")
    p.add_argument("--transform", choices=["none", "returns"], default="none",
                   help="'returns': treat the column as prices and fit centered squared log-returns")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out", help="write the result document here (default stdout)")
    p.set_defaults(func=cmd_fit)

    p = add("mc", "Run a Monte Carlo experiment; writes PREFIX.csv and PREFIX.json.")
    _add_model_args(p)
    _add_noise_args(p)
    p.add_argument("--M", type=int, default=100, help="replications")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--delta", type=float, default=0.9)
    p.add_argument("--methods", type=lambda s: [m for m in s.split(",") if m],
                   default=["lse_full", "lse_subsample", "onestep"])
    p.add_argument("--curvature", choices=CURVATURE_MODES, default="outer_product")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--workers", type=int, default=None, help="process count (default $FARIMA_WORKERS or 1)")
    p.add_argument("--out", default="mc", help="output prefix (default %(default)s)")
    p.set_defaults(func=cmd_mc)

    p = add("timing", "Median wall-clock time of LSE and one-step fits by sample size.")
    _add_model_args(p)
    _add_noise_args(p, default="weak_product")
    p.add_argument("--sizes", type=_ints, default=[1000, 2000, 5000])
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--deltas", type=_floats, default=[0.7, 0.9])
    p.add_argument("--no-lse", action="store_true", help="skip the full-sample LSE")
    p.add_argument("--curvature", choices=CURVATURE_MODES, default="outer_product")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV output path")
    p.set_defaults(func=cmd_timing)

    p = add("jmatrix", "Print the closed-form curvature matrix J(theta).")
    _add_model_args(p)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--N", type=int, default=100_000, help="number of series terms")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_jmatrix)

    p = add("serve", "Run the HTTP fitting service.")
    p.add_argument("--host", default=os.environ.get("FARIMA_HOST", "127.0.0.1"))
    p.add_argument("--port", type=int, default=int(os.environ.get("FARIMA_PORT", "8000")))
    p.add_argument("--max-workers", type=int, default=None, help="concurrent fits (default: CPU count)")
    p.add_argument("--max-points", type=int, default=1_000_000, help="largest accepted series")
    p.set_defaults(func=cmd_serve)
    return parser, subs


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror or exc}")
    try:
        if path.endswith((".yml", ".yaml")):
            import yaml

            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except Exception as exc:
        raise UsageError(f"cannot parse config {path}: {exc}")
    if not isinstance(data, dict):
        raise UsageError("config file must hold a mapping")
    return {k.replace("-", "_"): v for k, v in data.items()}


def _find_config(argv: Sequence[str]) -> Optional[str]:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        cfg_path = _find_config(argv)
        if cfg_path and "-h" not in argv and "--help" not in argv:
            cmd = next((a for a in argv if a in subs), None)
            if cmd is None:
                raise UsageError("--config must follow a subcommand")
            cfg = _load_config(cfg_path)
            known = {a.dest for a in subs[cmd]._actions}
            unknown = set(cfg) - known
            if unknown:
                raise UsageError(f"unknown config keys: {sorted(unknown)}")
            # re-parse string values through each option's type converter
            defaults = {}
            for a in subs[cmd]._actions:
                if a.dest in cfg:
                    v = cfg[a.dest]
                    if isinstance(v, list) and a.type in (_floats, _ints):
                        v = a.type(",".join(str(e) for e in v))
                    elif isinstance(v, str) and a.type is not None:
                        v = a.type(v)
                    defaults[a.dest] = v
            subs[cmd].set_defaults(**defaults)
            for a in subs[cmd]._actions:
                if a.dest in defaults:
                    a.required = False
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return EXIT_OK if exc.code in (None, 0) else EXIT_USAGE
        if not getattr(args, "command", None):
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"wfarima: error: {exc}\n")
        return EXIT_USAGE
    except argparse.ArgumentTypeError as exc:
        sys.stderr.write(f"wfarima: error: {exc}\n")
        return EXIT_USAGE
    except (FarimaError, linalg.LinAlgError, ValueError) as exc:
        sys.stderr.write(f"wfarima: numerical failure: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERIC


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
