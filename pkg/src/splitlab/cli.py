"""
Command-line front end::

    splitlab list
    splitlab run   --scenario ex1 --scheme corrected --tau 0.0625 --out out/
    splitlab study --scenario ex1 --schemes classical,corrected --tau-sweep 4:9 --out out/

Exit status is 0 on success, 2 on a numerical failure and 1 on a usage or
configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import (
    CacheError,
    CapabilityError,
    ConfigError,
    EvaluationError,
    ExprNameError,
    ExprParseError,
    InsufficientDataError,
    IntegrationError,
    InvalidArgumentError,
    NoConvergenceError,
    OutputError,
    SplitlabError,
)
from .lab import (
    ReferenceCache,
    convergence_study,
    dyadic_sweep,
    emit_csv,
    emit_plot,
    observed_orders,
)
from .scenarios import BUILTINS, builtin_scenario, load_scenario
from .splitting import SchemeKind, default_correction, run_scheme

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

NUMERICAL_ERRORS = (NoConvergenceError, IntegrationError, EvaluationError, CapabilityError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for numerical failure here
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _scenario(spec: str):
    if spec in BUILTINS:
        return builtin_scenario(spec)
    path = Path(spec)
    if path.suffix or path.exists():
        return load_scenario(path)
    return builtin_scenario(spec)  # raises with the list of valid names


def _resolve(scheme: str, correction: str, s) -> SchemeKind:
    if scheme == "classical":
        return SchemeKind.CLASSICAL
    if scheme != "corrected":
        return SchemeKind.parse(scheme)
    if correction == "auto":
        return default_correction(s)
    return SchemeKind.CORRECTED_INVARIANT if correction == "invariant" else SchemeKind.CORRECTED_LINEAR


def _sweep(text: str, T: float) -> list[float]:
    try:
        lo, hi = (int(p) for p in text.split(":"))
    except ValueError:
        raise InvalidArgumentError(f"--tau-sweep expects k_min:k_max, got {text!r}") from None
    return dyadic_sweep(lo, hi, T)


def _out_dir(path):
    if path is None:
        return None
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out}: {exc}") from exc
    return out


def cmd_list(args):
    for name, (desc, _) in BUILTINS.items():
        print(f"{name:6s} {desc}")
    return EXIT_OK


def cmd_run(args):
    s = _scenario(args.scenario)
    kind = _resolve(args.scheme, args.correction, s)
    if not args.tau > 0:
        raise InvalidArgumentError("--tau must be positive")
    out = _out_dir(args.out)
    run = run_scheme(s, kind, args.tau)
    u = run.field
    print(f"scenario={s.name} scheme={kind.short} tau={args.tau:g} steps={len(run.steps)}"
          + (" (final step clipped)" if run.clipped_final_step else ""))
    print(f"max|u(T)| = {np.max(np.abs(u.values)):.6e}")
    if out is not None:
        coords = s.discretization.coords
        cols = [*coords, u.values]
        header = ",".join(["x", "y"][: s.dim] + ["u"])
        path = out / f"{s.name}_{kind.short}_solution.csv"
        try:
            np.savetxt(path, np.column_stack(cols), delimiter=",", header=header,
                       comments="", fmt="%.15e")
        except OSError as exc:
            raise OutputError(f"cannot write {path}: {exc}") from exc
        print(f"wrote {path}")
    return EXIT_OK


def cmd_study(args):
    s = _scenario(args.scenario)
    kinds = []
    for name in filter(None, (p.strip() for p in args.schemes.split(","))):
        kind = _resolve(name, args.correction, s)
        if kind not in kinds:
            kinds.append(kind)
    taus = _sweep(args.tau_sweep, s.T)
    out = _out_dir(args.out)
    report = convergence_study(s, kinds, taus, ref_tol=args.ref_tol, cache=ReferenceCache(),
                               workers=args.workers)
    failed = False
    for name, ser in report.series.items():
        for tau, msg in ser.failures.items():
            print(f"{name}: tau={tau:g} failed: {msg}", file=sys.stderr)
            failed = True
    try:
        orders = observed_orders(report)
    except InsufficientDataError as exc:
        print(f"warning: {exc}", file=sys.stderr)
        orders = {}
    for name, ser in report.series.items():
        print(name)
        eocs = ser.eocs
        for k, (tau, err) in enumerate(zip(ser.taus, ser.errors)):
            col = f"{eocs[k - 1]:6.3f}" if k else "      "
            print(f"  tau={tau:.6e}  error={err:.6e}  eoc={col}")
        if name in orders:
            print(f"  median eoc = {orders[name].median:.3f}")
    if out is not None:
        emit_csv(report, out / f"{s.name}_study.csv")
        if report:
            emit_plot(report, out / f"{s.name}_study.svg")
        try:
            (out / f"{s.name}_study.json").write_text(json.dumps(report.to_json(), indent=2))
        except OSError as exc:
            raise OutputError(f"cannot write report: {exc}") from exc
        print(f"wrote {out}/{s.name}_study.{{csv,svg,json}}")
    return EXIT_NUMERIC if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="splitlab", description="Strang splitting convergence experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("list", help="list the built-in scenarios").set_defaults(func=cmd_list)

    def common(sp):
        sp.add_argument("--scenario", required=True, help="built-in name or scenario file")
        sp.add_argument("--correction", choices=("auto", "invariant", "linear"), default="auto")
        sp.add_argument("--out", help="output directory")

    run = sub.add_parser("run", help="integrate one scenario with one scheme")
    common(run)
    run.add_argument("--scheme", required=True, choices=("classical", "corrected"))
    run.add_argument("--tau", required=True, type=float)
    run.set_defaults(func=cmd_run)

    study = sub.add_parser("study", help="convergence study over a dyadic step-size sweep")
    common(study)
    study.add_argument("--schemes", default="classical,corrected")
    study.add_argument("--tau-sweep", default="4:9")
    study.add_argument("--ref-tol", type=float)
    study.add_argument("--workers", type=int, default=1)
    study.set_defaults(func=cmd_study)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InvalidArgumentError, ConfigError, ExprParseError, ExprNameError,
            OutputError, CacheError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SplitlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
