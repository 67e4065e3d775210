"""Command line entry point: ``taucalc <group> <verb> [options]``.

Exit status: 0 when every check passes, 1 on a failed check, 2 on a
configuration, parse or precondition error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .calculus import (CONVENTIONS, ConventionError, change_quantization, combinatorial_identity_check,
                       compose_general, compose_tau, transpose_symbol, weyl_compose)
from .exact import parse_tau
from .formal import amplitude_reduce, estimate_class_constants, region_for_japanese
from .hermite import (GridFunction, PreconditionError, apply_operator, grid_apply_op_tau, oracle_compare,
                      parse_grid, parse_test_function, quantize_to_operator)
from .io import SymbolFormatError, load_symbol, save_symbol
from .multiindex import MultiIndexError
from .parametrix import (DomainError, HypoParams, check_hypoelliptic, decay_sweep, hypo_invariance_check,
                         parametrix_terms, parametrix_verify, residual_decay)
from .report import Report
from .symbols import PolyAmplitude, PolySymbol, SymbolError
from .weights import (WeightError, WeightFunction, verify_conjugate_inequalities, verify_amplitude_inequalities,
                      verify_weight_axioms)


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(f"{self.prog}: {message}")


def _tau(text: str):
    try:
        return parse_tau(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"invalid tau {text!r}") from exc


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _index(text: str) -> tuple[int, ...]:
    try:
        out = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a comma-separated multi-index, got {text!r}") from exc
    if any(v < 0 for v in out):
        raise argparse.ArgumentTypeError(f"multi-index entries must be nonnegative, got {text!r}")
    return out


def _weight(text: str) -> WeightFunction:
    try:
        return WeightFunction.parse(text)
    except WeightError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


# ---------------------------------------------------------------------------
# command implementations; each returns a list of reports

def _need_poly(a, op: str) -> PolySymbol:
    if not isinstance(a, PolySymbol):
        raise DomainError(f"{op} needs a polynomial symbol, got {type(a).__name__}")
    return a


def _emit_symbol(args, sym, rep: Report) -> None:
    rep.set("symbol", str(sym))
    if getattr(args, "out", None):
        save_symbol(sym, args.out)
        rep.set("written", str(args.out))


def cmd_weights_check(args) -> list[Report]:
    w = args.weight
    return [verify_weight_axioms(w), verify_conjugate_inequalities(w),
            verify_amplitude_inequalities(w, trials=args.trials, seed=args.seed)]


def cmd_weights_conj(args) -> list[Report]:
    w = args.weight
    conj = w.conjugate(args.method)
    y = np.asarray(args.y)
    rep = Report(f"conjugate[{w.spec},{conj.method}]")
    rep.set("y", y.tolist())
    rep.set("phi_star", np.asarray(conj(y)).tolist())
    if w.family == "gevrey":
        num = w.conjugate("numeric_max").numeric(y)
        closed = w.conjugate("closed_form")(y)
        err = np.abs(num - closed) / np.maximum(1.0, np.abs(closed))
        rep.set("max_rel_diff_numeric_vs_closed", float(err.max()))
        rep.check("numeric_vs_closed", float(err.max()) <= 1e-8)
    return [rep]


def cmd_symbol_derive(args) -> list[Report]:
    a = load_symbol(args.symbol)
    d = a.dim
    dx = args.dx or (0,) * d
    dxi = args.dxi or (0,) * d
    if len(dx) != d or len(dxi) != d:
        raise ConfigError(f"derivative multi-indices must have length {d}")
    out = a.derive(dx, dxi, kind=args.kind)
    rep = Report(f"derive[{args.kind},dx={dx},dxi={dxi}]")
    _emit_symbol(args, out, rep)
    return [rep]


def cmd_symbol_classfit(args) -> list[Report]:
    a = load_symbol(args.symbol)
    region = region_for_japanese(args.rmin, args.rmax, n_radii=args.radii, n_dirs=args.dirs, seed=args.seed)
    return [estimate_class_constants(a, args.weight, args.m, args.rho, region, K=args.K)]


def cmd_symbol_reduce(args) -> list[Report]:
    amp = load_symbol(args.symbol)
    if isinstance(amp, PolySymbol):
        amp = PolyAmplitude.from_symbol(amp)
    if not isinstance(amp, PolyAmplitude):
        raise DomainError("reduce needs an amplitude or polynomial symbol file")
    fs = amplitude_reduce(amp, args.tau)
    rep = Report(f"amplitude-reduce[tau={args.tau}]")
    rep.set("terms", [str(t) for t in fs.terms])
    _emit_symbol(args, fs.total(), rep)
    return [rep]


def cmd_calc_change(args) -> list[Report]:
    a = _need_poly(load_symbol(args.symbol), "change-quant")
    out = change_quantization(a, args.tau_from, args.tau_to)
    rep = Report(f"change-quant[{args.tau_from}->{args.tau_to}]")
    _emit_symbol(args, out, rep)
    return [rep]


def cmd_calc_transpose(args) -> list[Report]:
    a = _need_poly(load_symbol(args.symbol), "transpose")
    out = transpose_symbol(a, args.tau)
    rep = Report(f"transpose[tau={args.tau}]")
    _emit_symbol(args, out, rep)
    return [rep]


def cmd_calc_compose(args) -> list[Report]:
    a = load_symbol(args.symbol)
    b = load_symbol(args.symbol2)
    if args.tau1 is not None or args.tau2 is not None:
        if args.tau1 is None or args.tau2 is None or args.target is None:
            raise ConfigError("general composition needs --tau1, --tau2 and --target")
        out = compose_general(_need_poly(a, "compose"), args.tau1, _need_poly(b, "compose"), args.tau2,
                              args.target, convention=args.convention)
        rep = Report(f"compose[{args.tau1},{args.tau2}->{args.target}]")
    else:
        if args.tau is None:
            raise ConfigError("compose needs --tau or --tau1/--tau2/--target")
        out = compose_tau(a, b, args.tau, convention=args.convention, max_order=args.max_order)
        rep = Report(f"compose[tau={args.tau}]")
    rep.set("convention", args.convention)
    _emit_symbol(args, out, rep)
    return [rep]


def cmd_calc_weyl(args) -> list[Report]:
    a = _need_poly(load_symbol(args.symbol), "weyl")
    b = _need_poly(load_symbol(args.symbol2), "weyl")
    out = weyl_compose(a, b, convention=args.convention)
    rep = Report("weyl-compose")
    rep.set("convention", args.convention)
    _emit_symbol(args, out, rep)
    return [rep]


def cmd_calc_identities(args) -> list[Report]:
    return [combinatorial_identity_check(args.max_mnr, args.max_dim, args.max_order)]


def cmd_parametrix_build(args) -> list[Report]:
    p = _need_poly(load_symbol(args.symbol), "parametrix")
    res = parametrix_terms(p, args.tau, args.order)
    rep = Report(f"parametrix-build[tau={res.tau},N={args.order}]")
    rep.set("certificate", res.certificate)
    rep.set("powers", [q.power for q in res.terms])
    rep.set("terms", [f"({q.numerator}) / p^{q.power}" for q in res.terms])
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for j, q in enumerate(res.terms):
            save_symbol(q, out / f"q{j}.json")
        rep.set("written", str(out))
    return [rep]


def cmd_parametrix_verify(args) -> list[Report]:
    p = _need_poly(load_symbol(args.symbol), "parametrix")
    return [parametrix_verify(parametrix_terms(p, args.tau, args.order), p)]


def cmd_parametrix_decay(args) -> list[Report]:
    p = _need_poly(load_symbol(args.symbol), "parametrix")
    lo, hi = args.annuli
    if args.sweep:
        return [decay_sweep(p, args.tau, range(args.order + 1), annuli=(lo, hi), rho=args.rho)]
    res = parametrix_terms(p, args.tau, args.order)
    return [residual_decay(res, p, annuli=(lo, hi), rho=args.rho)]


def _hypo_params(args) -> HypoParams:
    sigma = WeightFunction.parse(args.sigma) if args.sigma else None
    return HypoParams(args.weight, m=args.m, m0=args.m0 if args.m0 is not None else args.m, rho=args.rho,
                      R=args.R, sigma=sigma, n=args.n, C=args.C)


def cmd_hypo_check(args) -> list[Report]:
    a = load_symbol(args.symbol)
    return [check_hypoelliptic(a, _hypo_params(args), K=args.K, R_max=args.rmax)]


def cmd_hypo_invariance(args) -> list[Report]:
    a = _need_poly(load_symbol(args.symbol), "hypo invariance")
    return [hypo_invariance_check(a, args.tau1, args.tau2, _hypo_params(args), K=args.K, R_max=args.rmax)]


def cmd_oracle_compare(args) -> list[Report]:
    a = load_symbol(args.symbol)
    kind = args.kind
    if kind == "quantizations":
        if args.tau1 is None or args.tau2 is None:
            raise ConfigError("quantizations needs --tau1 and --tau2")
        rep = oracle_compare(kind, _need_poly(a, "oracle"), args.tau1, args.tau2, seed=args.seed, tol=args.tol)
    elif kind == "composition":
        if args.symbol2 is None or args.tau is None:
            raise ConfigError("composition needs --symbol2 and --tau")
        b = load_symbol(args.symbol2)
        rep = oracle_compare(kind, _need_poly(a, "oracle"), _need_poly(b, "oracle"), args.tau,
                             seed=args.seed, tol=args.tol)
    elif kind == "transpose":
        if args.tau is None:
            raise ConfigError("transpose needs --tau")
        rep = oracle_compare(kind, _need_poly(a, "oracle"), args.tau, seed=args.seed, tol=args.tol)
    else:
        if args.tau is None:
            raise ConfigError("amplitude needs --tau")
        if isinstance(a, PolySymbol):
            a = PolyAmplitude.from_symbol(a)
        rep = oracle_compare(kind, a, args.tau, seed=args.seed, tol=args.tol)
    return [rep]


def cmd_oracle_grid(args) -> list[Report]:
    a = load_symbol(args.symbol)
    x = parse_grid(args.grid)
    u = parse_test_function(args.test)
    t0 = time.perf_counter()
    out = grid_apply_op_tau(a, args.tau, GridFunction(x, u.to_grid(x)))
    rep = Report(f"grid-apply[tau={args.tau},n={len(x)}]")
    rep.set("seconds", time.perf_counter() - t0)
    rep.set("max_abs", float(np.max(np.abs(out.values))))
    if isinstance(a, PolySymbol):
        ref = apply_operator(quantize_to_operator(a, args.tau), u).to_grid(x)
        err = float(np.max(np.abs(out.values - ref)) / max(1.0, np.max(np.abs(ref))))
        rep.set("rel_error_vs_ladder", err)
        rep.check("ladder_agreement", err <= args.tol, f"relative error {err:.3g} above {args.tol:g}")
    if args.out:
        np.savetxt(args.out, np.column_stack([x, out.values.real, out.values.imag]), header="x re im")
        rep.set("written", str(args.out))
    return [rep]


def cmd_suite_all(args) -> list[Report]:
    from .suite import run_suite

    return run_suite(seed=args.seed, quick=args.quick)


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="taucalc", description="Exact tau-quantization calculus and its verification.")
    ap.add_argument("--version", action="version", version=f"taucalc {__version__}")
    ap.add_argument("--json", metavar="PATH", help="append one JSON record per report to PATH ('-' for stdout)")
    ap.add_argument("--seed", type=int, default=0, help="seed for randomized checks (recorded in every report)")
    ap.add_argument("--quiet", action="store_true", help="print only the PASS/FAIL headline of each report")
    groups = ap.add_subparsers(dest="group", required=True, parser_class=_Parser)
    # the global options are accepted after the verb as well
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", metavar="PATH", default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    def verb(group, name, fn, help_):
        p = group.add_parser(name, help=help_, parents=[common])
        p.set_defaults(fn=fn)
        return p

    def symbol_arg(p, name="--symbol", required=True):
        p.add_argument(name, required=required, metavar="FILE", help="symbol file (JSON)")

    # weights
    g = groups.add_parser("weights", help="weight functions and Young conjugates").add_subparsers(
        dest="verb", required=True, parser_class=_Parser)
    p = verb(g, "check", cmd_weights_check, "weight axioms and conjugate inequalities")
    p.add_argument("--weight", type=_weight, required=True)
    p.add_argument("--trials", type=int, default=1000)
    p = verb(g, "conj", cmd_weights_conj, "evaluate phi*")
    p.add_argument("--weight", type=_weight, required=True)
    p.add_argument("--y", type=_floats, default=[0.0, 0.5, 1.0, 2.0, 5.0, 10.0])
    p.add_argument("--method", choices=["closed_form", "numeric_max"])

    # symbol
    g = groups.add_parser("symbol", help="symbol derivatives, class fits, amplitude reduction").add_subparsers(
        dest="verb", required=True, parser_class=_Parser)
    p = verb(g, "derive", cmd_symbol_derive, "differentiate a symbol")
    symbol_arg(p)
    p.add_argument("--dx", type=_index)
    p.add_argument("--dxi", type=_index)
    p.add_argument("--kind", choices=["partial", "D"], default="partial")
    p.add_argument("--out", metavar="FILE")
    p = verb(g, "classfit", cmd_symbol_classfit, "fit class constants on a region")
    symbol_arg(p)
    p.add_argument("--weight", type=_weight, required=True)
    p.add_argument("--m", type=float, default=0.0)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--K", type=int, default=4)
    p.add_argument("--rmin", type=float, default=1.5)
    p.add_argument("--rmax", type=float, default=100.0)
    p.add_argument("--radii", type=int, default=24)
    p.add_argument("--dirs", type=int, default=48)
    p = verb(g, "reduce", cmd_symbol_reduce, "reduce an amplitude to a tau-symbol")
    symbol_arg(p)
    p.add_argument("--tau", type=_tau, required=True)
    p.add_argument("--out", metavar="FILE")

    # calc
    g = groups.add_parser("calc", help="symbolic calculus").add_subparsers(
        dest="verb", required=True, parser_class=_Parser)
    p = verb(g, "change-quant", cmd_calc_change, "change of quantization")
    symbol_arg(p)
    p.add_argument("--from", dest="tau_from", type=_tau, required=True)
    p.add_argument("--to", dest="tau_to", type=_tau, required=True)
    p.add_argument("--out", metavar="FILE")
    p = verb(g, "transpose", cmd_calc_transpose, "symbol of the transpose")
    symbol_arg(p)
    p.add_argument("--tau", type=_tau, required=True)
    p.add_argument("--out", metavar="FILE")
    for name, fn in (("compose", cmd_calc_compose), ("weyl", cmd_calc_weyl)):
        p = verb(g, name, fn, "composition" if name == "compose" else "Weyl composition")
        symbol_arg(p)
        symbol_arg(p, "--symbol2")
        p.add_argument("--convention", choices=CONVENTIONS, default="normalized")
        p.add_argument("--out", metavar="FILE")
        if name == "compose":
            p.add_argument("--tau", type=_tau)
            p.add_argument("--tau1", type=_tau)
            p.add_argument("--tau2", type=_tau)
            p.add_argument("--target", type=_tau)
            p.add_argument("--max-order", type=int)
    p = verb(g, "identities", cmd_calc_identities, "exhaustive combinatorial identities")
    p.add_argument("--max-mnr", type=int, default=12)
    p.add_argument("--max-dim", type=int, default=3)
    p.add_argument("--max-order", type=int, default=6)

    # parametrix
    g = groups.add_parser("parametrix", help="recursive parametrix").add_subparsers(
        dest="verb", required=True, parser_class=_Parser)
    for name, fn in (("build", cmd_parametrix_build), ("verify", cmd_parametrix_verify),
                     ("decay", cmd_parametrix_decay)):
        p = verb(g, name, fn, f"parametrix {name}")
        symbol_arg(p)
        p.add_argument("--tau", type=_tau, default=Fraction(0))
        p.add_argument("--order", type=int, default=4)
        if name == "build":
            p.add_argument("--out", metavar="DIR")
        if name == "decay":
            p.add_argument("--annuli", type=_floats, default=[16.0, 512.0])
            p.add_argument("--rho", type=float, default=1.0)
            p.add_argument("--sweep", action="store_true", help="fit every N from 0 to --order")

    # hypo
    g = groups.add_parser("hypo", help="hypoellipticity fits").add_subparsers(
        dest="verb", required=True, parser_class=_Parser)
    for name, fn in (("check", cmd_hypo_check), ("invariance", cmd_hypo_invariance)):
        p = verb(g, name, fn, f"hypoellipticity {name}")
        symbol_arg(p)
        p.add_argument("--weight", type=_weight, required=True)
        p.add_argument("--sigma", help="Gevrey sigma (default chosen from the weight)")
        p.add_argument("--m", type=float, default=0.0)
        p.add_argument("--m0", type=float)
        p.add_argument("--rho", type=float, default=1.0)
        p.add_argument("--R", type=float, default=2.0)
        p.add_argument("--rmax", type=float, default=100.0)
        p.add_argument("--n", type=int, default=4)
        p.add_argument("--C", type=float)
        p.add_argument("--K", type=int, default=4)
        if name == "invariance":
            p.add_argument("--tau1", type=_tau, required=True)
            p.add_argument("--tau2", type=_tau, required=True)

    # oracle
    g = groups.add_parser("oracle", help="Hermite ladder oracle and grid quadrature").add_subparsers(
        dest="verb", required=True, parser_class=_Parser)
    p = verb(g, "compare", cmd_oracle_compare, "symbolic result vs operator oracle")
    p.add_argument("--kind", choices=["quantizations", "composition", "transpose", "amplitude"], required=True)
    symbol_arg(p)
    symbol_arg(p, "--symbol2", required=False)
    p.add_argument("--tau", type=_tau)
    p.add_argument("--tau1", type=_tau)
    p.add_argument("--tau2", type=_tau)
    p.add_argument("--tol", type=float, default=1e-10)
    p = verb(g, "grid-apply", cmd_oracle_grid, "apply Op_tau(a) by grid quadrature")
    symbol_arg(p)
    p.add_argument("--tau", type=_tau, default=Fraction(0))
    p.add_argument("--test", default="hermite:k=0")
    p.add_argument("--grid", default="n=1024,xmax=12")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out", metavar="FILE")

    # suite
    g = groups.add_parser("suite", help="property battery").add_subparsers(
        dest="verb", required=True, parser_class=_Parser)
    p = verb(g, "all", cmd_suite_all, "run the full property battery")
    p.add_argument("--quick", action="store_true", help="smaller sample counts")
    return ap


def _config_record(args) -> dict:
    skip = {"fn", "json", "quiet"}
    out = {}
    for k, v in vars(args).items():
        if k in skip:
            continue
        if isinstance(v, WeightFunction):
            v = v.spec
        elif isinstance(v, Fraction):
            v = str(v)
        elif isinstance(v, tuple):
            v = list(v)
        out[k] = v
    return out


def main(argv=None) -> int:
    threads = os.environ.get("TAUCALC_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        reports = args.fn(args)
    except (ConfigError, SymbolFormatError, WeightError, DomainError, ConventionError, PreconditionError,
            MultiIndexError, SymbolError, ZeroDivisionError) as exc:
        op = f"{args.group} {args.verb}"
        print(f"error in {op}: {exc}", file=sys.stderr)
        return 2
    config = _config_record(args)
    records = []
    for rep in reports:
        rep.set("seed", args.seed)
        print(rep.lines()[0] if args.quiet else str(rep))
        rec = rep.to_record()
        rec["config"] = config
        records.append(rec)
    if args.json:
        text = "".join(json.dumps(r) + "\n" for r in records)
        if args.json == "-":
            sys.stdout.write(text)
        else:
            with open(args.json, "a") as fh:
                fh.write(text)
    return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
