"""Command-line front end.

Subcommands print CSV on standard output (``table`` writes a file);
diagnostics go to standard error. Exit codes: 0 success, 1 internal error,
2 usage, 3 numerical failure (unconverged or degenerate fit).
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import math
import os
import sys

import numpy as np

from .cache import HEADER, CacheError, CacheRecord, ResultCache, compute_record, csv_line, fmt
from .core import DomainError, MirrorModel, SolverConfig, geometry_from_x, make_geometry
from .engine import UnconvergedError, phi, rho_from_phi
from .fits import N_PARAMS, BetaSample, DegenerateFitError, compare_fits, log_spaced

log = logging.getLogger("classical_casimir")

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _window(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo,hi got {text!r}") from None
    if not lo < hi:
        raise argparse.ArgumentTypeError(f"window needs lo < hi, got {text!r}")
    return lo, hi


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("multipole cutoffs must be positive")
    return values


def _solver_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--lmax", type=int, help="fixed multipole cutoff (disables doubling check)")
    g.add_argument("--eta", type=float, default=SolverConfig.eta,
                   help="automatic cutoff ceil(eta/x) (default %(default)s)")
    g.add_argument("--tol", type=float, default=SolverConfig.refine_tol,
                   help="relative tolerance of the cutoff doubling check (default %(default)s)")
    g.add_argument("--m-tol", type=float, default=SolverConfig.m_rel_tol,
                   help="relative tolerance ending the m-sum (default %(default)s)")
    g.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: available CPUs)")


def _config(args: argparse.Namespace, **overrides) -> SolverConfig:
    kwargs = dict(ell_max_override=args.lmax, eta=args.eta, refine_tol=args.tol,
                  m_rel_tol=args.m_tol)
    if args.threads is not None:
        kwargs["worker_count"] = args.threads
    if getattr(args, "cache", None):
        kwargs["cache_path"] = args.cache
    kwargs.update(overrides)
    try:
        return SolverConfig(**kwargs)
    except DomainError as err:
        raise UsageError(str(err)) from None


def _models(text: str) -> list[MirrorModel]:
    if text == "both":
        return [MirrorModel.DRUDE, MirrorModel.PERFECT]
    return [MirrorModel.parse(text)]


def _open_cache(path: str | None):
    if not path:
        return contextlib.nullcontext(None)
    return ResultCache(path)


def cmd_phi(args: argparse.Namespace) -> int:
    if args.x is not None:
        if args.L is not None or args.R is not None:
            raise UsageError("give either --x or --L/--R, not both")
        geometry = geometry_from_x(args.x)
    elif args.L is not None and args.R is not None:
        geometry = make_geometry(args.L, args.R)
    else:
        raise UsageError("need --x or both --L and --R")
    config = _config(args)
    model = MirrorModel.parse(args.model)
    result = phi(geometry, model, config)
    rb = rho_from_phi(result)
    out = sys.stdout
    out.write(csv_line(["x", "model", "phi", "rho", "beta", "ell_max", "m_max", "conv_est"]))
    out.write(csv_line([fmt(result.x), model.value, fmt(result.phi), fmt(rb.rho), fmt(rb.beta),
                        str(result.ell_max_used), str(result.m_max_used),
                        fmt(result.convergence_estimate)]))
    return EXIT_OK


def _grid(lo: float, hi: float, points: int, spacing: str) -> list[float]:
    if not (lo > 0 and hi > 0):
        raise UsageError("x range must be positive")
    if points < 1:
        raise UsageError("--points must be positive")
    lo, hi = min(lo, hi), max(lo, hi)
    if points == 1:
        return [lo]
    if spacing == "log":
        values = np.exp(np.linspace(math.log(lo), math.log(hi), points))
    else:
        values = np.linspace(lo, hi, points)
    return sorted(float(v) for v in values)


def cmd_table(args: argparse.Namespace) -> int:
    config = _config(args)
    xs = _grid(args.x_from, args.x_to, args.points, args.spacing)
    models = _models(args.model)
    try:
        out = open(args.out, "w", encoding="utf-8", newline="")
    except OSError as err:
        raise UsageError(f"cannot write {args.out}: {err}") from None
    failed = False
    with out, _open_cache(args.cache) as cache:
        out.write(csv_line(HEADER))
        for x in xs:
            for model in models:
                record = compute_record(x, model, config, cache)
                failed |= record.status != "ok"
                out.write(csv_line(record.to_row()))
                out.flush()
        if cache is not None:
            log.info("cache: %d hits, %d computed", cache.hits, cache.misses)
    return EXIT_NUMERICAL if failed else EXIT_OK


def cmd_fit(args: argparse.Namespace) -> int:
    config = _config(args)
    model = MirrorModel.parse(args.model)
    if args.points < N_PARAMS + 1:
        raise DegenerateFitError(
            f"{args.points} points cannot determine {N_PARAMS}-parameter fits")
    xs = sorted(set(log_spaced(args.fit_window, args.points).tolist())
                | set(log_spaced(args.eval_window, args.eval_points).tolist()))
    samples = []
    with _open_cache(args.cache) as cache:
        for x in xs:
            record = compute_record(x, model, config, cache)
            if record.status != "ok":
                raise UnconvergedError(f"beta sample at x={x!r} did not converge")
            error = None
            if record.convergence_estimate is not None:
                error = record.convergence_estimate * record.rho / x
            samples.append(BetaSample(x=x, beta=record.beta, error_estimate=error))
    comparison = compare_fits(samples, args.fit_window, args.eval_window)
    out = sys.stdout
    out.write(csv_line(["rank", "basis", "c0", "c1", "c2", "c3", "rms_in", "rms_out",
                        "n_fit", "cond"]))
    for rank, fit in enumerate(comparison.fits, start=1):
        out.write(csv_line([str(rank), fit.spec.basis.value, *(fmt(c) for c in fit.coefficients),
                            fmt(fit.rms_in_window), fmt(comparison.rms_out(fit)),
                            str(fit.n_in_window), fmt(fit.condition_indicator)]))
    return EXIT_OK


def cmd_converge(args: argparse.Namespace) -> int:
    model = MirrorModel.parse(args.model)
    geometry = geometry_from_x(args.x)
    out = sys.stdout
    out.write(csv_line(["ell_max", "m_max", "phi", "rho", "delta"]))
    previous = None
    for ell_max in args.lmax_list:
        args.lmax = ell_max
        result = phi(geometry, model, _config(args))
        rb = rho_from_phi(result)
        delta = None if previous is None else rb.rho - previous
        out.write(csv_line([str(ell_max), str(result.m_max_used), fmt(result.phi), fmt(rb.rho),
                            "" if delta is None else fmt(delta)]))
        out.flush()
        previous = rb.rho
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="classical-casimir",
                     description="Classical Casimir interaction between a plane and a sphere.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("phi", help="Phi, rho and beta at one aspect ratio")
    p.add_argument("--x", type=float, help="aspect ratio L/R")
    p.add_argument("--L", type=float, help="surface distance")
    p.add_argument("--R", type=float, help="sphere radius")
    p.add_argument("--model", choices=("drude", "perfect"), required=True)
    _solver_flags(p)
    p.set_defaults(func=cmd_phi)

    p = sub.add_parser("table", help="sweep over x, writing one CSV row per point")
    p.add_argument("--x-from", type=float, required=True)
    p.add_argument("--x-to", type=float, required=True)
    p.add_argument("--points", type=int, required=True)
    p.add_argument("--spacing", choices=("log", "linear"), default="log")
    p.add_argument("--model", choices=("drude", "perfect", "both"), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--cache", help="resumable result cache (CSV)")
    _solver_flags(p)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("fit", help="compare the three trial fits of beta(x)",
                       description="Windows are in ln x; write negative values as "
                                   "--fit-window=-5,-3.")
    p.add_argument("--model", choices=("drude", "perfect"), required=True)
    p.add_argument("--fit-window", type=_window, default=(-5.0, -3.0))
    p.add_argument("--eval-window", type=_window, default=(-6.2, -5.0))
    p.add_argument("--points", type=int, default=9, help="samples in the fit window")
    p.add_argument("--eval-points", type=int, default=5, help="samples in the evaluation window")
    p.add_argument("--cache", help="resumable result cache (CSV)")
    _solver_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("converge", help="rho at a list of fixed multipole cutoffs")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--model", choices=("drude", "perfect"), required=True)
    p.add_argument("--lmax-list", type=_int_list, required=True)
    _solver_flags(p)
    p.set_defaults(func=cmd_converge)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr,
                        level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, DomainError, CacheError) as err:
        log.error("%s", err)
        return EXIT_USAGE
    except (UnconvergedError, DegenerateFitError) as err:
        log.error("%s", err)
        return EXIT_NUMERICAL
    except Exception as err:  # noqa: BLE001 - mapped to the internal-error exit code
        log.exception("internal error: %s", err)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
