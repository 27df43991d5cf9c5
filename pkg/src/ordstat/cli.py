"""Command-line front end: ``ordstat {psi,joint-vr,power,fdp-dist,bench}``.

Exit codes: 0 success, 2 usage or validation error, 3 numerical
certification failure (pair underflow or k above the limit with
``--require-faithful``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import statistics
import sys
import time
from fractions import Fraction

from . import mtp
from .distributions import parse_cdf
from .pair import K_LIMIT, k_parameter
from .recursions import BoundaryError, TransformedBoundaries, count_operations, enclosure, enclosure_epsilon, psi_table
from .scalar import get_backend, parse_decimal, to_fraction

SCHEMA_VERSION = 1
THREADS_ENV = "ORDSTAT_THREADS"


class UsageError(Exception):
    pass


class CertificationError(Exception):
    pass


def read_thresholds(path: str) -> list:
    """One decimal or ``p/q`` per line; ``#`` starts a comment."""
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                out.append(parse_decimal(line))
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: {exc}") from None
    return out


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _check_combo(backend: str, kernel: str) -> None:
    if backend == "pair" and kernel != "noe":
        raise UsageError(
            f"the pair backend only supports kernel=noe: {kernel} subtracts computed "
            "intermediates, so pair arithmetic cannot certify faithful rounding")


def _check_cdf(args, cdf) -> None:
    if args.backend == "rational" and not getattr(cdf, "exact", False) and not args.enclosure:
        raise UsageError(
            f"cdf {cdf.spec} has no exact rational values; use --enclosure to accept "
            "double-valued inputs with an enclosure, or another backend")


def _fmt(x, backend: str):
    """Shortest round-trip decimal string (the float value of ``x``)."""
    return repr(get_backend(backend).to_float(x))


def _frac(x) -> str:
    f = to_fraction(x)
    return f"{f.numerator}/{f.denominator}"


def _thresholds(args, backend: str):
    if args.thresholds and args.bh:
        raise UsageError("give either --thresholds or --bh, not both")
    if args.thresholds:
        b = read_thresholds(args.thresholds)
    elif args.bh:
        try:
            n = int(args.bh[0])
        except ValueError:
            raise UsageError(f"--bh needs an integer count, got {args.bh[0]!r}") from None
        alpha = parse_decimal(args.bh[1])
        b = [alpha * i / n for i in range(1, n + 1)]
    else:
        b = []
    # doubles and pairs start from the nearest double so the pair kernel sees input values
    return b if backend == "rational" else [float(x) for x in b]


def _procedure(args) -> mtp.StepUpProcedure:
    if args.thresholds:
        t = read_thresholds(args.thresholds)
        if len(t) != args.m:
            raise UsageError(f"threshold file has {len(t)} values but --m is {args.m}")
        if args.backend != "rational":
            t = [float(x) for x in t]
        return mtp.StepUpProcedure(t)
    if args.alpha is None:
        raise UsageError("give --alpha (Benjamini-Hochberg) or --thresholds")
    alpha = parse_decimal(args.alpha)
    alpha = Fraction(int(alpha.numerator), int(alpha.denominator))
    return mtp.bh_thresholds(args.m, alpha if args.backend == "rational" else float(alpha))


def _model(args) -> mtp.ModelSpec:
    cdf = parse_cdf(args.cdf)
    _check_cdf(args, cdf)
    if args.m is None:
        raise UsageError("--m is required")
    if args.model == "fm":
        if args.m0 is None:
            raise UsageError("--model fm needs --m0")
        return mtp.ModelSpec.fm(args.m, args.m0, cdf)
    if args.pi0 is None:
        raise UsageError("--model rm needs --pi0")
    pi0 = to_fraction(args.pi0)
    return mtp.ModelSpec.rm(args.m, pi0 if args.backend == "rational" else float(pi0), cdf)


def _certify(args, underflow: bool, k_used: int | None) -> None:
    if not args.require_faithful:
        return
    if underflow:
        raise CertificationError("pair arithmetic underflowed; faithful rounding is not certified")
    if k_used is not None and k_used > K_LIMIT:
        raise CertificationError(f"k = {k_used} exceeds the certified limit {K_LIMIT}")


# commands -------------------------------------------------------------------

def cmd_psi(args) -> dict:
    _check_combo(args.backend, args.kernel)
    cdf = parse_cdf(args.cdf)
    _check_cdf(args, cdf)
    n = args.n1 + args.n2
    b = _thresholds(args, args.backend)
    if len(b) < n:
        raise UsageError(f"need at least n1 + n2 = {n} thresholds, got {len(b)}")
    b = b[:n]
    exact = args.backend == "rational" and getattr(cdf, "exact", False)
    f = [cdf.eval(to_fraction(x)) if exact else float(cdf.eval(float(x))) for x in b]
    tb = TransformedBoundaries(b, f, args.n1, args.n2)
    table = psi_table(tb, args.kernel, args.backend, threads=_threads(args))
    report = {
        "n1": args.n1,
        "n2": args.n2,
        "cdf": cdf.spec,
        "thresholds": [_frac(x) if args.backend == "rational" else repr(float(x)) for x in b],
        "psi": [[_fmt(x, args.backend) for x in row] for row in table.psi],
        "value": _fmt(table[args.n1, args.n2], args.backend),
    }
    if args.backend == "rational":
        report["psi_exact"] = [[_frac(x) for x in row] for row in table.psi]
        report["value_exact"] = _frac(table[args.n1, args.n2])
        if args.enclosure:
            eps = enclosure_epsilon(tb) if not exact else Fraction(0)
            lo, hi = enclosure(table, eps)
            report["enclosure"] = {
                "eps": repr(float(eps)),
                "lower": repr(float(lo[args.n1][args.n2])),
                "upper": repr(float(hi[args.n1][args.n2])),
            }
    if args.backend == "pair":
        underflow = bool(table.underflow.any())
        report["underflow_flag"] = underflow
        report["k_used"] = table.k_used
        report["k_limit"] = K_LIMIT
        report["certified_up_to"] = {"n1": 8184, "n2": 8184, "k": k_parameter(8184, 8184)}
        _certify(args, underflow, table.k_used)
    if args.ops:
        name = {"bolshev": "bolshev2", "steck": "steck2", "noe": "noe2"}[args.kernel]
        ops = count_operations(name, tb, inner="double")
        report["ops"] = {"adds": ops.adds, "subs": ops.subs, "muls": ops.muls, "divs": ops.divs, "total": ops.total}
        if args.n2 == 0:
            report["ops"]["one_group_bolshev"] = count_operations("bolshev1", tb).total
    negative = [(i1, i2) for i1, row in enumerate(table.psi) for i2, x in enumerate(row) if to_fraction(x) < 0]
    if negative:
        report["warnings"] = [f"negative Psi at {len(negative)} cells, e.g. (i1, i2) = {negative[0]}"]
    return report


def _vr(args):
    _check_combo(args.backend, args.kernel)
    model = _model(args)
    proc = _procedure(args)
    return model, proc, mtp.joint_vr(model, proc, args.backend, args.kernel, _threads(args))


def _value(x, backend: str):
    if backend == "rational":
        return {"value": repr(float(x)), "exact": _frac(x)}
    return repr(float(x))


def _model_echo(args, model, proc) -> dict:
    out = {"model": model.kind, "m": model.m, "cdf": model.F.spec,
           "thresholds": [_frac(x) if args.backend == "rational" else repr(float(x)) for x in proc.t]}
    if model.kind == "FM":
        out["m0"] = model.m0
    else:
        out["pi0"] = _frac(model.pi0) if args.backend == "rational" else repr(float(model.pi0))
    return out


def _vr_meta(args, vr) -> dict:
    out = {"exact_inputs": vr.exact_inputs}
    if "underflow" in vr.meta:
        out["underflow_flag"] = vr.meta["underflow"]
        out["k_used"] = vr.meta["k_used"]
        out["k_limit"] = K_LIMIT
        _certify(args, vr.meta["underflow"], vr.meta["k_used"])
    return out


def cmd_joint_vr(args) -> dict:
    model, proc, vr = _vr(args)
    be = args.backend
    report = _model_echo(args, model, proc)
    report["p"] = [[_fmt(x, be) for x in row] for row in vr.p]
    if be == "rational":
        report["p_exact"] = [[_frac(x) for x in row] for row in vr.p]
    report["sum"] = _value(vr.total() if be == "rational" else get_backend(be).to_float(vr.total()), be)
    report["fdr"] = _value(mtp.fdr(vr), be)
    report["fdp_distribution"] = [
        {"fdp": f"{v.numerator}/{v.denominator}", "mass": _value(w, be)} for v, w in mtp.fdp_distribution(vr)]
    report["avg_power"] = _value(mtp.avg_power(model, proc, be, args.kernel, _threads(args)), be)
    if args.lam is not None:
        report["lambda"] = args.lam
        report["lambda_power"] = _value(mtp.lambda_power(model, proc, args.lam, be, args.kernel, _threads(args)), be)
    report.update(_vr_meta(args, vr))
    return report


def cmd_power(args) -> dict:
    _check_combo(args.backend, args.kernel)
    model = _model(args)
    proc = _procedure(args)
    be = args.backend
    report = _model_echo(args, model, proc)
    report["avg_power"] = _value(mtp.avg_power(model, proc, be, args.kernel, _threads(args)), be)
    if args.lam is not None:
        report["lambda"] = args.lam
        report["lambda_power"] = _value(mtp.lambda_power(model, proc, args.lam, be, args.kernel, _threads(args)), be)
    return report


def cmd_fdp_dist(args) -> dict:
    model, proc, vr = _vr(args)
    be = args.backend
    report = _model_echo(args, model, proc)
    report["fdr"] = _value(mtp.fdr(vr), be)
    report["fdp_distribution"] = [
        {"fdp": f"{v.numerator}/{v.denominator}", "mass": _value(w, be)} for v, w in mtp.fdp_distribution(vr)]
    report.update(_vr_meta(args, vr))
    return report


def _bench_case(ell: int, one_group: bool, backend: str, cdf):
    n1, n2 = (ell, 0) if one_group else (ell, ell)
    n = n1 + n2
    b = [Fraction(5, 100) * i / n for i in range(1, n + 1)]
    if backend != "rational":
        b = [float(x) for x in b]
    exact = backend == "rational" and getattr(cdf, "exact", False)
    f = [cdf.eval(x) if exact else float(cdf.eval(float(x))) for x in b]
    return TransformedBoundaries(b, f, n1, n2)


def cmd_bench(args) -> dict:
    cdf = parse_cdf(args.cdf)
    _check_cdf(args, cdf)
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    kernels = args.kernels.split(",")
    for k in kernels:
        if k not in ("bolshev", "steck", "noe", "bolshev1"):
            raise UsageError(f"unknown kernel {k!r}")
        if k != "bolshev1":
            _check_combo(args.backend, k)
    threads = _threads(args)
    rows = []
    for kernel in kernels:
        for ell in sizes:
            one_group = args.one_group or kernel == "bolshev1"
            tb = _bench_case(ell, one_group, args.backend, cdf)
            times = []
            for _ in range(max(1, args.repeat)):
                t0 = time.perf_counter()
                if kernel == "bolshev1":
                    from .recursions import bolshev_one_group
                    bolshev_one_group(tb.u, get_backend(args.backend))
                else:
                    psi_table(tb, kernel, args.backend, threads=threads)
                times.append(time.perf_counter() - t0)
            row = {"n1": tb.n1, "n2": tb.n2, "kernel": kernel, "backend": args.backend,
                   "seconds": statistics.median(times), "repeats": len(times)}
            if args.ops:
                name = {"bolshev": "bolshev2", "steck": "steck2", "noe": "noe2", "bolshev1": "bolshev1"}[kernel]
                row["ops"] = count_operations(name, tb).total
                if kernel == "bolshev1":
                    row["ops_formula"] = 3 * tb.n**2 + tb.n - 1
            rows.append(row)
    return {"rows": rows, "threads": threads}


# output ---------------------------------------------------------------------

def _csv_rows(command: str, report: dict):
    if command == "psi":
        header = ["i1", "i2", "value"] + (["exact"] if "psi_exact" in report else [])
        rows = []
        for i1, row in enumerate(report["psi"]):
            for i2, v in enumerate(row):
                extra = [report["psi_exact"][i1][i2]] if "psi_exact" in report else []
                rows.append([i1, i2, v] + extra)
        return header, rows
    if command == "joint-vr":
        header = ["j", "k", "p"] + (["exact"] if "p_exact" in report else [])
        rows = []
        for j, row in enumerate(report["p"]):
            for k, v in enumerate(row):
                if j <= k:
                    extra = [report["p_exact"][j][k]] if "p_exact" in report else []
                    rows.append([j, k, v] + extra)
        return header, rows
    if command == "fdp-dist":
        rows = []
        for atom in report["fdp_distribution"]:
            mass = atom["mass"]
            rows.append([atom["fdp"], mass["value"] if isinstance(mass, dict) else mass])
        return ["fdp", "mass"], rows
    if command == "power":
        rows = []
        for key in ("avg_power", "lambda_power"):
            if key in report:
                v = report[key]
                rows.append([key, v["value"] if isinstance(v, dict) else v])
        return ["quantity", "value"], rows
    header = ["n1", "n2", "kernel", "backend", "seconds", "repeats", "ops", "ops_formula"]
    return header, [[r.get(h, "") for h in header] for r in report["rows"]]


def render(command: str, report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps({"schema_version": SCHEMA_VERSION, "command": command, **report}, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header, rows = _csv_rows(command, report)
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ordstat", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, kernels=True):
        sp.add_argument("--backend", choices=("double", "pair", "rational"), default="pair")
        if kernels:
            sp.add_argument("--kernel", choices=("bolshev", "steck", "noe"), default="noe")
        sp.add_argument("--cdf", default="uniform", help="second-group / alternative cdf, e.g. power(k=2), ztest(N=5)")
        sp.add_argument("--threads", type=int, default=None, help=f"default: ${THREADS_ENV} or all cores")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--out", default=None, help="write here instead of stdout")
        sp.add_argument("--enclosure", action="store_true",
                        help="allow inexact cdf values in the rational backend and report bounds")
        sp.add_argument("--require-faithful", action="store_true",
                        help="exit 3 unless the pair result is certified faithful")

    sp = sub.add_parser("psi", help="Ψ table for one- or two-group thresholds")
    common(sp)
    sp.add_argument("--n1", type=int, default=0)
    sp.add_argument("--n2", type=int, default=0)
    sp.add_argument("--thresholds", metavar="FILE")
    sp.add_argument("--bh", nargs=2, metavar=("N", "ALPHA"), help="thresholds ALPHA * i / N")
    sp.add_argument("--ops", action="store_true", help="also count scalar operations (double backend)")

    for name in ("joint-vr", "power", "fdp-dist"):
        sp = sub.add_parser(name)
        common(sp)
        sp.add_argument("--model", choices=("fm", "rm"), default="fm")
        sp.add_argument("--m", type=int, required=True)
        sp.add_argument("--m0", type=int)
        sp.add_argument("--pi0")
        sp.add_argument("--alpha", help="Benjamini-Hochberg level")
        sp.add_argument("--thresholds", metavar="FILE")
        sp.add_argument("--lambda", dest="lam", type=float)

    sp = sub.add_parser("bench", help="median wall time (and op counts) over a size grid")
    common(sp, kernels=False)
    sp.add_argument("--kernels", default="noe", help="comma list of bolshev, steck, noe, bolshev1")
    sp.add_argument("--sizes", default="10,20,40")
    sp.add_argument("--repeat", type=int, default=3)
    sp.add_argument("--one-group", action="store_true")
    sp.add_argument("--ops", action="store_true")
    return p


COMMANDS = {"psi": cmd_psi, "joint-vr": cmd_joint_vr, "power": cmd_power, "fdp-dist": cmd_fdp_dist, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        report = COMMANDS[args.command](args)
    except (UsageError, BoundaryError, ValueError) as exc:
        print(f"ordstat {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except CertificationError as exc:
        print(f"ordstat {args.command}: certification failed: {exc}", file=sys.stderr)
        return 3
    for w in report.get("warnings", []):
        print(f"ordstat {args.command}: warning: {w}", file=sys.stderr)
    text = render(args.command, report, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
