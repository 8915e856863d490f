"""Command-line frontend.

Exit codes: 0 on success, 1 on usage errors (bad flags, unreadable input),
2 when a mathematical hypothesis of the requested computation fails.
Numerical modules are imported lazily so that ``FRACCALC_THREADS`` can cap
BLAS threads before numpy loads.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")

# precondition text reported with each hypothesis failure
_HYPOTHESES = {
    "HypothesisViolation": "admissibility of the base function (sign conditions on f, D^alpha f and 1/f)",
    "NonMembershipError": "membership of f in the algebra A^alpha (finite weighted norm)",
    "SpaceMismatchError": "operator and vector must act on the same model space",
    "PoleError": "order away from the poles of the gamma function",
    "DomainError": "argument inside the domain of the special function",
    "ParameterError": "parameter range of the special function",
    "SeriesDivergenceError": "convergence of the operator series (vector in the domain)",
    "DivergenceError": "convergence of the Weyl sum (summable tail)",
    "ZeroConstantTermError": "nonzero constant term for series inversion",
    "ParameterRangeError": "order s of the fractional power inside (0, 1)",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _threads() -> int:
    raw = os.environ.get("FRACCALC_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError("FRACCALC_THREADS must be a positive integer") from None
    if n < 1:
        raise UsageError("FRACCALC_THREADS must be a positive integer")
    return n


def _cap_threads() -> int:
    n = _threads()
    if "FRACCALC_THREADS" in os.environ:
        for var in _THREAD_VARS:
            os.environ[var] = str(n)
    return n


# ---------------------------------------------------------------------------
# output helpers


def _fmt(v) -> str:
    return repr(float(v))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(c) if isinstance(c, float) else c for c in r])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, default=_plain) + "\n"


def _plain(o):
    if hasattr(o, "tolist"):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _emit(args, header, rows, meta=None) -> None:
    if args.format == "json":
        obj = dict(meta or {})
        obj["columns"] = list(header)
        obj["rows"] = [[float(c) if isinstance(c, float) else c for c in r] for r in rows]
        text = _json_text(obj)
    else:
        text = _csv_text(header, rows)
    _write(args, text)


def _write(args, text: str, path: str | None = None) -> None:
    target = path or args.out
    if target:
        Path(target).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _n_list(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad index list {text!r}") from None
    if not vals or min(vals) < 0:
        raise UsageError("index lists need non-negative integers")
    return vals


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


# ---------------------------------------------------------------------------
# analytic functions and models


def _function(args, n_max: int):
    from .cesaro_seq import CoeffSeq
    from .series_algebra import delta0, from_coeffs, geometric, k_power, log_over_z

    name = args.function
    if name == "k_power":
        if args.s is None:
            raise UsageError("--function k_power needs --s")
        return k_power(args.s, n_max)
    if name == "log_over_z":
        return log_over_z(n_max)
    if name == "delta0":
        return delta0()
    if name == "geometric":
        if args.mu is None:
            raise UsageError("--function geometric needs --mu")
        return geometric(args.mu, n_max)
    if name == "file":
        if not args.input:
            raise UsageError("--function file needs --input")
        seq = CoeffSeq.from_csv(_read(args.input))
        return from_coeffs(seq.values, label=Path(args.input).stem)
    raise UsageError(f"unknown function {name!r}")


def _add_function_flags(p) -> None:
    p.add_argument("--function", default="k_power",
                   choices=["k_power", "log_over_z", "delta0", "geometric", "file"])
    p.add_argument("--s", type=float, help="order s of (1-z)^(-s)")
    p.add_argument("--mu", type=float, help="pole of 1/(mu-z), |mu|>1")
    p.add_argument("--input", help="CSV with header index,value (for --function file)")


def _add_model_flags(p, need_input: bool = True) -> None:
    p.add_argument("--model", required=True, choices=["shift", "volterra", "matrix"])
    p.add_argument("--beta", type=float, default=0.5, help="weight order of the shift space")
    p.add_argument("--grid-n", type=int, default=1000, help="Volterra grid intervals")
    p.add_argument("--matrix", help="CSV of a square matrix (model matrix)")
    if need_input:
        p.add_argument("--input", required=True,
                       help="vector CSV: index,value (shift, matrix) or t,value (volterra)")


def _model(args):
    from .operators import LinOpHandle, load_grid_csv, load_matrix_csv, load_sequence_csv

    if args.model == "shift":
        if args.input:
            n = args.n_max if args.n_max is not None else None
            x = load_sequence_csv(_read(args.input), args.beta, n)
            op = LinOpHandle.backward_shift(args.beta, x.space.dim - 1)
            return op, x
        return LinOpHandle.backward_shift(args.beta, args.n_max or 1024), None
    if args.model == "volterra":
        if args.input:
            x = load_grid_csv(_read(args.input))
            return LinOpHandle.volterra_complement(x.space.grid_n), x
        return LinOpHandle.volterra_complement(args.grid_n), None
    if not args.matrix:
        raise UsageError("--model matrix needs --matrix")
    op = load_matrix_csv(_read(args.matrix))
    if args.input:
        from .cesaro_seq import CoeffSeq

        vals = CoeffSeq.from_csv(_read(args.input)).values
        return op, op.vector(vals)
    return op, None


def _vector_rows(vec):
    import numpy as np

    if vec.space.kind == "grid01":
        t = vec.space.nodes
        return ["t", "value"], [(float(a), float(b)) for a, b in zip(t, np.real(vec.entries))]
    w = vec.window
    return ["index", "value"], [(i, float(v)) for i, v in enumerate(np.real(vec.entries[:w]))]


def _series_output(args, rep) -> None:
    header, rows = _vector_rows(rep.value)
    meta = json.loads(rep.to_json())
    if args.out:
        base = Path(args.out)
        csv_path = base.with_suffix(".csv")
        csv_path.write_text(_csv_text(header, rows), encoding="utf-8")
        meta["value_ref"] = str(csv_path)
        json_path = base.with_suffix(".json")
        json_path.write_text(_json_text(meta), encoding="utf-8")
    else:
        meta["value"] = [r[1] for r in rows]
        sys.stdout.write(_json_text(meta))


# ---------------------------------------------------------------------------
# subcommands


def cmd_cesaro(args) -> None:
    from .cesaro_seq import cesaro_array

    n = args.n if args.n is not None else (args.n_max or 10)
    vals = cesaro_array(args.alpha, n)
    _emit(args, ["index", "value"], [(i, float(v)) for i, v in enumerate(vals)], {"alpha": args.alpha})


def cmd_fracdiff(args) -> None:
    from .cesaro_seq import CoeffSeq
    from .frac_diff import FracDiffConfig, TailModel, d_alpha, weyl_diff, weyl_sum

    seq = CoeffSeq.from_csv(_read(args.input))
    tail = TailModel.zero()
    if args.tail == "power":
        if args.tail_exponent is None:
            raise UsageError("--tail power needs --tail-exponent")
        tail = TailModel.power(args.tail_exponent, args.tail_coefficient)
    fn = {"weyl_sum": weyl_sum, "weyl_diff": weyl_diff, "d_alpha": d_alpha}[args.op]
    out = fn(seq, args.alpha, tail, n_out=args.n_max, config=FracDiffConfig(rel_tol=args.rel_tol))
    rows = [(i, float(v), float(e), int(r))
            for i, (v, e, r) in enumerate(zip(out.values, out.tail_err, out.reliable))]
    _emit(args, ["index", "value", "tail_err", "reliable"], rows, {"op": args.op, "alpha": args.alpha})


def cmd_norm(args) -> None:
    from .series_algebra import alpha_norm

    f = _function(args, max(args.n_max or 4096, 64))
    rep = alpha_norm(f, args.alpha, n_terms=args.n_terms, rel_tol=args.rel_tol)
    _write(args, _json_text({
        "function": f.label, "alpha": args.alpha, "norm": rep.norm_value,
        "tail_bound": rep.tail_bound, "converged": rep.converged, "tail_method": rep.tail_method,
    }))


def cmd_admissible(args) -> None:
    from .admissibility import check_admissible

    f = _function(args, max(args.n_max or 4096, 64))
    cert = check_admissible(f, args.alpha, args.n_check)
    d = cert.to_dict()
    d["function"] = f.label
    _write(args, _json_text(d))


def cmd_approxid(args) -> None:
    from .approx_id import ApproxIdFamily, member_norm

    base = None if args.kind == "log_gLn" else _function(args, max(args.n_max or 4096, 64))
    fam = ApproxIdFamily.create(base, args.alpha, args.kind, certify=args.certify)
    rows = []
    for n in _n_list(args.n_list):
        rep = member_norm(fam, n, args.alpha_eval)
        rows.append((n, float(rep.norm_value), float(rep.tail_bound), int(rep.converged)))
    _emit(args, ["n", "norm", "tail_bound", "converged"], rows, {"kind": args.kind, "alpha": args.alpha})


def cmd_operator_probe(args) -> None:
    from .operators import estimate_K_alpha, power_norm_estimate

    n_max = args.n_max or 256
    if args.model == "shift":
        from .operators import LinOpHandle

        op = LinOpHandle.backward_shift(args.beta, 2 * n_max + 1)
    else:
        op, _ = _model(args)
    est = estimate_K_alpha(op, args.alpha, n_max, args.probes, seed=args.seed)
    grid = sorted({int(n) for n in est.n_grid if n >= 1})
    pw = power_norm_estimate(op, grid, args.probes, seed=args.seed)
    _write(args, _json_text({
        "model": args.model, "alpha": args.alpha, "K_lower_bound": est.value,
        "trend_slope": est.trend_slope, "growing": est.growing,
        "n": [int(n) for n in est.n_grid], "sup_mean_norm": [float(v) for v in est.sup_by_n],
        "power_norms": [float(v) for v in pw.norms], "power_slope_squared": pw.slope_squared,
    }))


def cmd_ergodic(args) -> None:
    from .operators import mean_ergodic_probe

    op, x = _model(args)
    ns = _n_list(args.n_list)
    vals = mean_ergodic_probe(op, args.order, x, ns)
    _emit(args, ["n", "mean_norm"], [(n, float(v)) for n, v in zip(ns, vals)], {"order": args.order})


def _fc_config(args):
    from .func_calc import FuncCalcConfig

    return FuncCalcConfig(rel_tol=args.rel_tol)


def cmd_poisson(args) -> None:
    from .func_calc import poisson_solve_cesaro, poisson_solve_taylor

    op, x = _model(args)
    if args.route == "cesaro":
        rep = poisson_solve_cesaro(op, args.alpha, args.s, x, config=_fc_config(args))
    else:
        rep = poisson_solve_taylor(op, args.s, x, alpha=args.alpha, config=_fc_config(args))
    _series_output(args, rep)


def cmd_log(args) -> None:
    from .func_calc import log_operator, log_operator_taylor

    op, x = _model(args)
    if args.route == "cesaro":
        rep = log_operator(op, args.alpha, x, _fc_config(args))
    else:
        rep = log_operator_taylor(op, x, alpha=args.alpha, config=_fc_config(args))
    _series_output(args, rep)


def cmd_hilbert(args) -> None:
    from .func_calc import hilbert_transform_alpha

    op, x = _model(args)
    _series_output(args, hilbert_transform_alpha(op, args.alpha, x, _fc_config(args)))


def cmd_rates(args) -> None:
    from .func_calc import fractional_power, rate_check

    op, w = _model(args)
    x = fractional_power(op, args.s, w, args.alpha, _fc_config(args))
    rep = rate_check(op, args.alpha, args.s, x, _n_list(args.n_list), args.variant)
    _emit(args, ["n", "scaled_norm"], [(int(n), float(v)) for n, v in zip(rep.n_list, rep.values)],
          {"variant": args.variant, "ratio": rep.ratio, "decreasing": rep.decreasing})


def cmd_selftest(args) -> int:
    from .selftest import CHECKS, format_table, run_selftest

    names = None
    if args.only:
        names = [n for n in CHECKS if args.only.lower() in n.lower()]
        if not names:
            raise UsageError(f"no check matches {args.only!r}")
    results = run_selftest(names, threads=_threads())
    table = format_table(results)
    if args.format == "json":
        _write(args, _json_text({"checks": [
            {"name": r.name, "passed": r.passed, "detail": r.detail} for r in results]}))
    else:
        _write(args, table + "\n")
    return 0 if all(r.passed for r in results) else 1


# ---------------------------------------------------------------------------
# parser


_ANCHORS = {
    "cesaro": "Cesàro numbers k^alpha(n), Taylor coefficients of (1-z)^(-alpha).",
    "fracdiff": "Weyl sums, Weyl differences and D^alpha on a truncated sequence.",
    "norm": "Weighted norm sum |W^alpha f(n)| k^(alpha+1)(n) of the algebra A^alpha.",
    "admissible": "Admissibility certificate: sign pattern of f, D^alpha f and 1/f.",
    "approxid": "Approximate-identity families g_n and their algebra norms.",
    "operator-probe": "Lower bound of sup_n ||M^alpha(n)|| and power-norm growth.",
    "ergodic": "Mean ergodic trajectory ||M^beta(n) x||.",
    "poisson": "Fractional Poisson equation (I-T)^s u = x by the Cesàro or Taylor series.",
    "log": "log(I-T)x by the Cesàro-weighted beta series or the Taylor series -sum T^n x/n.",
    "hilbert": "Cesàro-smoothed ergodic Hilbert transform H^(alpha) x = -log(I-T)x.",
    "rates": "Decay rates n^s ||M^(alpha+1)(n)x|| (or of plain means) for x in Ran(I-T)^s.",
    "selftest": "Invariant suite; prints one PASS/FAIL row per checked result.",
}


def _global_flags(defaults: bool) -> argparse.ArgumentParser:
    # subcommand copies use SUPPRESS so a flag given before the subcommand survives
    def d(value):
        return value if defaults else argparse.SUPPRESS

    glob = argparse.ArgumentParser(add_help=False)
    glob.add_argument("--rel-tol", type=float, default=d(1e-9))
    glob.add_argument("--n-max", type=int, default=d(None))
    glob.add_argument("--seed", type=int, default=d(0))
    glob.add_argument("--format", choices=["csv", "json"], default=d("csv"))
    glob.add_argument("--out", default=d(None))
    return glob


def build_parser() -> argparse.ArgumentParser:
    glob = _global_flags(True)
    sub_glob = _global_flags(False)

    parser = _Parser(prog="fraccalc", description="Fractional Cesàro calculus toolkit.", parents=[glob])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name):
        return sub.add_parser(name, help=_ANCHORS[name], description=_ANCHORS[name], parents=[sub_glob])

    p = add("cesaro")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--n", type=int)
    p.set_defaults(fn=cmd_cesaro)

    p = add("fracdiff")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--op", choices=["weyl_sum", "weyl_diff", "d_alpha"], default="d_alpha")
    p.add_argument("--tail", choices=["zero", "power"], default="zero")
    p.add_argument("--tail-exponent", type=float)
    p.add_argument("--tail-coefficient", type=float, default=1.0)
    p.set_defaults(fn=cmd_fracdiff)

    p = add("norm")
    _add_function_flags(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--n-terms", type=int, default=2048)
    p.set_defaults(fn=cmd_norm)

    p = add("admissible")
    _add_function_flags(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--n-check", type=int, default=128)
    p.set_defaults(fn=cmd_admissible)

    p = add("approxid")
    _add_function_flags(p)
    p.add_argument("--kind", choices=["fractional_gn", "taylor_g0n", "log_gLn"], required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--alpha-eval", type=float)
    p.add_argument("--n-list", default="4,16,64")
    p.add_argument("--certify", action="store_true")
    p.set_defaults(fn=cmd_approxid)

    p = add("operator-probe")
    _add_model_flags(p, need_input=False)
    p.add_argument("--input")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--probes", type=int, default=16)
    p.set_defaults(fn=cmd_operator_probe)

    p = add("ergodic")
    _add_model_flags(p)
    p.add_argument("--order", type=float, default=1.0, help="Cesàro order of the means")
    p.add_argument("--n-list", default="10,100,1000")
    p.set_defaults(fn=cmd_ergodic)

    for name, fn in (("poisson", cmd_poisson), ("log", cmd_log)):
        p = add(name)
        _add_model_flags(p)
        p.add_argument("--alpha", type=float, required=True)
        if name == "poisson":
            p.add_argument("--s", type=float, required=True)
        p.add_argument("--route", choices=["cesaro", "taylor"], default="cesaro")
        p.set_defaults(fn=fn)

    p = add("hilbert")
    _add_model_flags(p)
    p.add_argument("--alpha", type=float, required=True)
    p.set_defaults(fn=cmd_hilbert)

    p = add("rates")
    _add_model_flags(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--n-list", default="64,128,256,512,1024,2048")
    p.add_argument("--variant", choices=["cesaro", "mean"], default="cesaro")
    p.set_defaults(fn=cmd_rates)

    p = add("selftest")
    p.add_argument("--only", help="run checks whose name contains this text")
    p.set_defaults(fn=cmd_selftest)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _cap_threads()
        code = args.fn(args)
        return int(code or 0)
    except UsageError as exc:
        sys.stderr.write(f"fraccalc {args.command}: usage error: {exc}\n")
        return 1
    except Exception as exc:
        name = type(exc).__name__
        if name in _HYPOTHESES:
            sys.stderr.write(
                f"fraccalc {args.command}: hypothesis violated: {exc}\n"
                f"  precondition: {_HYPOTHESES[name]}\n"
            )
            return 2
        if isinstance(exc, (ValueError, OSError)):
            sys.stderr.write(f"fraccalc {args.command}: usage error: {exc}\n")
            return 1
        raise


def main() -> None:
    sys.exit(run())
