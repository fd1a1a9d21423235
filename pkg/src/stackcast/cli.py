"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 runtime failure, 3 verification
failure.
"""

import argparse
import sys

import numpy as np

from . import __version__
from .crossval import CvScheme
from .data import load_csv
from .errors import UsageError, VerificationFailure
from .experiments import (
    GridSpec,
    build_candidates,
    config_from_overrides,
    emit_csv,
    load_config_file,
    run_experiment,
)
from .plotting import emit_plot
from .spectral import random_trial_report
from .stack import fit_stack, from_document, predict, to_document


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="stackcast", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")

    for name in ("simulate-linear", "simulate-logistic"):
        sim = sub.add_parser(name, help=f"run the {name.split('-')[1]} Monte Carlo design")
        sim.add_argument("--config", help="flat key = value config file")
        sim.add_argument("--out-csv", help="write the result table here")
        sim.add_argument("--out-svg", help="write the ratio chart here")
        sim.add_argument("--reps", type=int, help="replications per cell")
        sim.add_argument("--seed", type=int, help="base seed")
        sim.add_argument("--threads", type=int, help="parallel workers")
        sim.add_argument(
            "--no-timing", action="store_true",
            help="zero the wall_seconds column for reproducible output",
        )

    fit = sub.add_parser("stack-fit", help="fit a stack on CSV data")
    fit.add_argument("--data", required=True, help="input CSV with header row")
    fit.add_argument("--outcome", required=True, help="outcome column name")
    fit.add_argument("--prior", required=True, choices=("g", "iso", "t"))
    fit.add_argument(
        "--grid", required=True,
        help="min:max:count[:log] for g/iso, nu1,nu2,...:lam for t",
    )
    fit.add_argument("--sigma2", type=float, default=1.0)
    fit.add_argument("--folds", type=int, default=10)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--out", help="write the fitted model document here")

    pred = sub.add_parser("predict", help="predict with a saved stack model")
    pred.add_argument("--model", required=True)
    pred.add_argument("--data", required=True)
    pred.add_argument("--outcome", help="outcome column to drop, when present")

    ver = sub.add_parser("verify-lemma1", help="eigenvalue bound verification")
    ver.add_argument("--trials", type=int, default=1000)
    ver.add_argument("--seed", type=int, default=0)
    return parser


def _run_simulation(args, family: str) -> int:
    overrides = load_config_file(args.config) if args.config else {}
    overrides.setdefault("family", family)
    if overrides["family"] != family:
        raise UsageError(
            f"config file family {overrides['family']!r} conflicts with the subcommand"
        )
    if args.reps is not None:
        overrides["replications"] = args.reps
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.threads is not None:
        overrides["parallelism"] = args.threads
    if args.no_timing:
        overrides["record_timing"] = False
    config = config_from_overrides(family, overrides)
    result = run_experiment(config)
    for row in result.rows:
        print(
            f"{row.family} {row.prior_family} n={row.n} r2={row.r2:g} "
            f"reps={row.replications} ratio={row.ratio:.6f} se={row.mc_se:.6f}"
        )
    if args.out_csv:
        emit_csv(result, args.out_csv)
        print(f"wrote {args.out_csv}")
    if args.out_svg:
        emit_plot(result, args.out_svg)
        print(f"wrote {args.out_svg}")
    return 0


def _parse_scalar_grid(text: str):
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise UsageError(f"bad grid spec {text!r}; expected min:max:count[:log]")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"bad grid spec {text!r}") from None
    spacing = "linear"
    if len(parts) == 4:
        spacing = parts[3]
    return lo, hi, count, spacing


def _parse_t_grid(text: str):
    nus_text, sep, lam_text = text.rpartition(":")
    if not sep:
        raise UsageError(f"bad T grid spec {text!r}; expected nu1,nu2,...:lam")
    try:
        nus = tuple(float(v) for v in nus_text.split(","))
        lam = float(lam_text)
    except ValueError:
        raise UsageError(f"bad T grid spec {text!r}") from None
    return nus, lam


def _stack_fit(args) -> int:
    data = load_csv(args.data, args.outcome)
    if args.prior == "g":
        if data.family != "linear":
            raise UsageError("the g prior applies to continuous outcomes only")
        lo, hi, count, spacing = _parse_scalar_grid(args.grid)
        grid = GridSpec(kind="g", lo=lo, hi=hi, count=count, spacing=spacing)
    elif args.prior == "iso":
        lo, hi, count, spacing = _parse_scalar_grid(args.grid)
        kind = "gamma" if data.family == "linear" else "lambda"
        grid = GridSpec(kind=kind, lo=lo, hi=hi, count=count, spacing=spacing)
    else:
        if data.family != "logistic":
            raise UsageError("T-prior stacks are available for binary outcomes only")
        nus, lam = _parse_t_grid(args.grid)
        grid = GridSpec(kind="t", nus=nus, lam=lam)
    specs = build_candidates(grid, data.family, data.p, args.sigma2, r2=0.5)
    scheme = (
        CvScheme("loo_closed_form")
        if data.family == "linear"
        else CvScheme("kfold", folds=args.folds, seed=args.seed)
    )
    model = fit_stack(data, specs, scheme)
    print(f"family: {data.family}   candidates: {len(specs)}")
    print(f"best candidate: {model.labels[model.best_index]}")
    print(f"{'label':>16}  {'weight':>12}  {'cv_error':>14}")
    for label, w, err in zip(model.labels, model.weights.w, model.cv_errors):
        print(f"{label:>16}  {w:12.6f}  {err:14.6f}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(to_document(model))
        print(f"wrote {args.out}")
    return 0


def _predict(args) -> int:
    with open(args.model) as fh:
        model = from_document(fh.read())
    if args.outcome:
        data = load_csv(args.data, args.outcome)
        x = data.x
    else:
        import csv as _csv

        with open(args.data, newline="") as fh:
            reader = _csv.reader(fh)
            next(reader)  # header
            x = np.asarray(
                [[float(cell) for cell in row] for row in reader], dtype=np.float64
            )
    for value in predict(model, x):
        print(f"{value:.10g}")
    return 0


def _verify(args) -> int:
    summary = random_trial_report(args.trials, args.seed)
    print(f"{'trials':>22}: {summary['trials']}")
    print(f"{'failures':>22}: {summary['failures']}")
    print(f"{'worst max eig':>22}: {summary['worst_max_eig']:.12f}")
    print(f"{'worst min eig':>22}: {summary['worst_min_eig']:.3e}")
    print(f"{'worst g-prior error':>22}: {summary['worst_g_prior_error']:.3e}")
    print(f"{'tolerance':>22}: {summary['tolerance']:g}")
    if summary["failures"]:
        raise VerificationFailure(
            f"{summary['failures']} of {summary['trials']} trials violated the bounds"
        )
    print("all eigenvalue bounds verified")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            print(parser.format_usage(), file=sys.stderr)
            return 1
        if args.command in ("simulate-linear", "simulate-logistic"):
            return _run_simulation(args, args.command.split("-")[1])
        if args.command == "stack-fit":
            return _stack_fit(args)
        if args.command == "predict":
            return _predict(args)
        return _verify(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except VerificationFailure as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
