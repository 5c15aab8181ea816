"""Command-line entry point.

Subcommands: sieve, moment, diag, charsum, lemma31, constants, localcheck,
polytope, predict, perron, verify.  Report-producing commands write CSV
and render a companion PNG figure next to it (suppress with --no-figure).
Every run appends a RunRecord to the ledger.  Exit codes: 0 success,
2 invalid arguments, 3 resource limits.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__
from .config import Config, load_config
from .errors import ResourceLimitError
from .ledger import RunRecord, append_record, format_value, utc_now_rfc3339
from .sieves import build_sieve, load_tables, save_tables
from .characters import char_sum_T, nonsquare_case_report, square_case_report
from .moments import convergence_experiment, default_y_rule, moment
from .diagonal import (
    EXACT_D2_CAP,
    EXACT_D3_CAP,
    d2_sum,
    d2_sum_scaled,
    d3_sum,
    d3_sum_scaled,
    diagonal_ratio_trend,
    dk_sum_bruteforce,
    dk_sum_generic,
)
from .euler import (
    VARIANTS,
    euler_constant,
    local_factor_E_definition,
    local_factor_E_expansion,
    local_factor_F,
)
from .asymptotics import estimate_I, perron_residual_fit, polytope_volume, predict_main_term
from .verify import suite_failed, verify_suite


def _num(s: str) -> int:
    return int(float(s))


def _num_list(s: str) -> list[int]:
    return [_num(part) for part in s.split(",") if part.strip()]


def _write_csv(path, rows, columns=None) -> None:
    if not rows:
        return
    columns = columns or list(rows[0].keys())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(c, "")) for c in columns])


def _figure_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".png")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmoments",
                                     description="moments of quadratic twists of the Mobius function")
    parser.add_argument("--version", action="version", version=f"qmoments {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--cache-dir", help="override the cache directory")
    common.add_argument("--ledger", help="run ledger path (default: <cache>/runs.ndjson)")
    common.add_argument("--workers", type=int, help="worker process count")
    common.add_argument("--seed", type=int, default=0, help="random seed")
    common.add_argument("--json", dest="json_out", metavar="PATH", help="write a JSON result file")
    common.add_argument("--csv", dest="csv_out", metavar="PATH", help="write a CSV result file")
    common.add_argument("--no-figure", action="store_true", help="skip the companion figure")
    common.add_argument("--limit", type=_num, help="sieve table limit override")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sieve", parents=[common], help="build or inspect sieve caches")
    p.add_argument("action", choices=["build", "info"])
    p.add_argument("--out", help="cache file path")

    p = sub.add_parser("moment", parents=[common], help="exact S_k(X, Y)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--x", type=_num)
    p.add_argument("--y", default="auto", help="inner range, or 'auto' for floor(X^(1/4))")
    p.add_argument("--x-list", type=_num_list, help="run the convergence experiment over these X")

    p = sub.add_parser("diag", parents=[common], help="diagonal sums D_k(Y)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--y", type=_num)
    p.add_argument("--y-list", type=_num_list, help="run the k = 3 ratio trend over these Y")
    p.add_argument("--parity", choices=["all", "odd"], default="all")
    p.add_argument("--method", choices=["structured", "bruteforce", "fixedpoint"], default="structured")

    p = sub.add_parser("charsum", parents=[common], help="exact T(z, n)")
    p.add_argument("--z", type=_num, required=True)
    p.add_argument("--n", type=_num, required=True)

    p = sub.add_parser("lemma31", parents=[common], help="character-sum estimate reports")
    p.add_argument("--case", choices=["square", "nonsquare"], required=True)
    p.add_argument("--z", type=_num, default=10**6)
    p.add_argument("--m-max", type=_num, default=15)
    p.add_argument("--z-list", type=_num_list, default=[10**3, 10**4, 10**5])
    p.add_argument("--n-max", type=_num, default=225)

    p = sub.add_parser("constants", parents=[common], help="Euler-product constants")
    p.add_argument("--name", choices=["z2", "z3", "hk0", "e1"], required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--variant", choices=list(VARIANTS), default="definition")
    p.add_argument("--prime-limit", type=_num, default=100_000)

    p = sub.add_parser("localcheck", parents=[common], help="coefficient diff of the local-factor variants")
    p.add_argument("--p", type=_num_list, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--degree", type=int, default=8)
    p.add_argument("--report", required=True, help="JSON output path")

    p = sub.add_parser("polytope", parents=[common], help="pair-constraint volumes")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--method", choices=["exact3", "mc"], default="exact3")
    p.add_argument("--samples", type=_num, default=1_000_000)

    p = sub.add_parser("predict", parents=[common], help="leading-order main-term prediction")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--x", type=_num, required=True)
    p.add_argument("--y", type=_num, required=True)
    p.add_argument("--constants", default="definition",
                   help="constant variant for k = 3 (or 'z2' route at k = 2)")
    p.add_argument("--z", type=float, help="explicit constant for k >= 4")
    p.add_argument("--prime-limit", type=_num, default=100_000)

    p = sub.add_parser("perron", parents=[common], help="residual-exponent fit for the k = 2 route")
    p.add_argument("--ymax", type=_num, default=10**7)
    p.add_argument("--parity", choices=["all", "odd"], default="all")
    p.add_argument("--prime-limit", type=_num, default=10**7)

    p = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("--suite", choices=["quick", "full"], default="quick")

    return parser


def _config_from_args(args) -> Config:
    cfg = load_config(args.config)
    if getattr(args, "cache_dir", None):
        from dataclasses import replace

        cfg = replace(cfg, cache_dir=Path(args.cache_dir))
    if getattr(args, "workers", None):
        from dataclasses import replace

        cfg = replace(cfg, workers=args.workers)
    if getattr(args, "limit", None):
        from dataclasses import replace

        cfg = replace(cfg, sieve_limit=args.limit)
    return cfg


def _tables_for(cfg: Config, need: int):
    return build_sieve(max(cfg.sieve_limit, need))


def _print_kv(outputs: dict) -> None:
    for key, value in outputs.items():
        print(f"{key} = {format_value(value)}")


def _run(args) -> dict:
    """Dispatch; returns the outputs dict recorded in the ledger."""
    cfg = _config_from_args(args)
    workers = cfg.workers
    cmd = args.command

    if cmd == "sieve":
        if args.action == "build":
            limit = args.limit or cfg.sieve_limit
            tables = build_sieve(limit)
            out = Path(args.out) if args.out else cfg.cache_dir / f"sieve_{limit}.bin"
            out.parent.mkdir(parents=True, exist_ok=True)
            save_tables(tables, out)
            outputs = {"limit": limit, "cache": str(out), "primes": int(len(tables.primes))}
        else:
            path = Path(args.out) if args.out else None
            if path is None:
                raise ValueError("sieve info needs --out pointing at a cache file")
            tables = load_tables(path)
            outputs = {"limit": tables.limit, "primes": int(len(tables.primes))}
        _print_kv(outputs)
        return outputs

    if cmd == "moment":
        if args.x_list:
            z2 = float(euler_constant("z2", prime_cutoff=10**6).value)
            need = max(max(args.x_list) ** 0.5, max(default_y_rule(x) for x in args.x_list))
            tables = _tables_for(cfg, int(need) + 1)
            rows = convergence_experiment(args.k, args.x_list, {"z2": z2}, tables, workers=workers)
            for row in rows:
                row["ratio_4pi2"] = row["ratio_z2"] / (4 / math.pi**2)
                row["ratio_3pi2"] = row["ratio_z2"] / (3 / math.pi**2)
            if args.csv_out:
                _write_csv(args.csv_out, rows)
                if not args.no_figure:
                    from .figures import convergence_figure

                    convergence_figure(rows, ["z2", "4pi2", "3pi2"], _figure_path(args.csv_out))
            outputs = {f"X_{row['X']}": row["ratio_z2"] for row in rows}
            _print_kv(outputs)
            return outputs
        if args.x is None:
            raise ValueError("moment needs --x (or --x-list)")
        Y = default_y_rule(args.x) if args.y == "auto" else _num(args.y)
        tables = _tables_for(cfg, max(Y, math.isqrt(args.x) + 1))
        res = moment(args.k, args.x, Y, tables, workers=workers)
        row = {"k": res.k, "X": res.X, "Y": res.Y, "S_k": res.value,
               "d_count": res.d_count, "runtime_ms": res.runtime_ms}
        if args.csv_out:
            _write_csv(args.csv_out, [row], ["k", "X", "Y", "S_k", "d_count", "runtime_ms"])
        _print_kv(row)
        return {k: format_value(v) for k, v in row.items()}

    if cmd == "diag":
        if args.y_list:
            h0 = euler_constant("hk0", k=3, variant="definition", prime_cutoff=10**6)
            z3c = euler_constant("z3", variant="closed-form", prime_cutoff=10**6)
            candidates = {"definition": 4 * float(h0.value), "closed_form": float(z3c.value)}
            tables = _tables_for(cfg, max(args.y_list))
            rows = diagonal_ratio_trend(args.k, args.y_list, args.parity, candidates,
                                        tables, workers=workers)
            if args.csv_out:
                _write_csv(args.csv_out, rows)
                if not args.no_figure:
                    from .figures import diag_trend_figure

                    diag_trend_figure(rows, candidates, _figure_path(args.csv_out))
            outputs = {f"Y_{row['Y']}": row["normalized"] for row in rows}
            _print_kv(outputs)
            return outputs
        if args.y is None:
            raise ValueError("diag needs --y (or --y-list)")
        tables = _tables_for(cfg, args.y)
        if args.method == "fixedpoint":
            if args.k == 2:
                ds = d2_sum_scaled(args.y, args.parity, tables)
            elif args.k == 3:
                ds = d3_sum_scaled(args.y, args.parity, tables, workers=workers)
            else:
                raise ValueError("fixedpoint path covers k = 2 and k = 3")
        elif args.k == 2 and args.method == "structured":
            ds = d2_sum(args.y, args.parity, tables)
        elif args.k == 3 and args.method == "structured":
            ds = d3_sum(args.y, args.parity, tables)
        elif args.method == "bruteforce":
            ds = dk_sum_bruteforce(args.k, args.y, args.parity, tables)
        else:
            ds = dk_sum_generic(args.k, args.y, args.parity, tables)
        row = {"k": ds.k, "Y": ds.Y, "parity": ds.parity, "method": ds.method,
               "value": ds.value, "value_float": float(ds.value),
               "error_bound": float(ds.error_bound)}
        if args.csv_out:
            _write_csv(args.csv_out, [row])
        _print_kv(row)
        return {k: format_value(v) for k, v in row.items()}

    if cmd == "charsum":
        tables = _tables_for(cfg, max(1000, math.isqrt(args.n) + 1))
        res = char_sum_T(args.z, args.n, tables)
        row = {"z": res.z, "n": res.n, "value": res.value, "is_square": res.is_square,
               "predicted_main": res.predicted_main, "residual": res.residual}
        if args.csv_out:
            _write_csv(args.csv_out, [row])
        _print_kv(row)
        return {k: format_value(v) for k, v in row.items()}

    if cmd == "lemma31":
        tables = _tables_for(cfg, 1000)
        if args.case == "square":
            rep = square_case_report(args.z, args.m_max, tables)
            rows = rep["rows"]
            if args.csv_out:
                _write_csv(args.csv_out, rows,
                           ["z", "n", "value", "main", "residual", "normalized_residual"])
                if not args.no_figure:
                    from .figures import square_residuals_figure

                    square_residuals_figure(rows, _figure_path(args.csv_out))
            outputs = {"max_normalized_residual": rep["max_normalized_residual"],
                       "rows": len(rows)}
        else:
            from .sieves import squarefree_kernel

            n_list = [n for n in range(3, args.n_max + 1, 2)
                      if squarefree_kernel(n, tables) != 1]
            rep = nonsquare_case_report(args.z_list, n_list, tables)
            if args.csv_out:
                _write_csv(args.csv_out, rep["rows"], ["z", "n", "value", "ratio"])
                if not args.no_figure:
                    from .figures import nonsquare_ratio_figure

                    nonsquare_ratio_figure(rep["max_ratio_by_z"], _figure_path(args.csv_out))
            outputs = {f"max_ratio_z_{z}": r for z, r in rep["max_ratio_by_z"].items()}
        _print_kv(outputs)
        return {k: format_value(v) for k, v in outputs.items()}

    if cmd == "constants":
        ec = euler_constant(args.name, k=args.k, variant=args.variant,
                            prime_cutoff=args.prime_limit, dps=cfg.precision_digits)
        outputs = {"name": ec.name, "k": ec.k, "variant": ec.variant,
                   "prime_cutoff": ec.prime_cutoff,
                   "value": mp_str(ec.value), "tail_bound": ec.tail_bound}
        _print_kv(outputs)
        return {k: format_value(v) for k, v in outputs.items()}

    if cmd == "localcheck":
        report = {"k": args.k, "degree": args.degree, "primes": args.p, "diffs": []}
        for p in args.p:
            fdef = local_factor_E_definition(p, args.k, args.degree)
            fun = local_factor_E_expansion(p, args.k, args.degree, ordered=False)
            ford = local_factor_E_expansion(p, args.k, args.degree, ordered=True)
            ffull = local_factor_F(p, args.k, args.degree)
            monomials = sorted(set(fdef.coeffs) | set(fun.coeffs) | set(ford.coeffs),
                               key=lambda e: (sum(e), e))
            diffs = []
            for e in monomials:
                row = {
                    "monomial": list(e),
                    "definition": format_value(fdef.coefficient(e)),
                    "expansion_unordered": format_value(fun.coefficient(e)),
                    "expansion_ordered": format_value(ford.coefficient(e)),
                }
                if len({row["definition"], row["expansion_unordered"], row["expansion_ordered"]}) > 1:
                    row["agree"] = False
                    diffs.append(row)
            report["diffs"].append({"p": p, "disagreeing_monomials": diffs,
                                    "local_F_terms": len(ffull.coeffs)})
        Path(args.report).parent.mkdir(parents=True, exist_ok=True)
        Path(args.report).write_text(json.dumps(report, indent=2))
        outputs = {"report": args.report,
                   "disagreements": sum(len(d["disagreeing_monomials"]) for d in report["diffs"])}
        _print_kv(outputs)
        return {k: format_value(v) for k, v in outputs.items()}

    if cmd == "polytope":
        method = "montecarlo" if args.method == "mc" else args.method
        est = polytope_volume(args.k, args.x, method=method, samples=args.samples,
                              seed=args.seed, workers=workers)
        row = {"k": est.k, "x": est.x, "method": est.method, "volume": est.volume,
               "stderr": est.stderr if est.stderr is not None else "",
               "normalized": est.normalized, "samples": est.samples,
               "seed": est.seed if est.seed is not None else ""}
        if args.csv_out:
            _write_csv(args.csv_out, [row])
        _print_kv(row)
        return {k: format_value(v) for k, v in row.items()}

    if cmd == "predict":
        if args.k == 2:
            z = euler_constant("z2", prime_cutoff=args.prime_limit).value
        elif args.k == 3:
            z = euler_constant("z3", variant=args.constants, prime_cutoff=args.prime_limit).value
        elif args.z is not None:
            z = args.z
        else:
            raise ValueError("k >= 4 needs an explicit --z constant")
        value = predict_main_term(args.k, args.x, args.y, z)
        outputs = {"k": args.k, "X": args.x, "Y": args.y, "constant": float(z),
                   "prediction": value,
                   "note": "leading order only for k >= 3 (lower polynomial coefficients unknown)"}
        _print_kv(outputs)
        return {k: format_value(v) for k, v in outputs.items()}

    if cmd == "perron":
        y_list = []
        y = 1000
        while y <= args.ymax:
            y_list.append(y)
            y *= 10
        tables = _tables_for(cfg, max(y_list))
        z2 = euler_constant("z2", prime_cutoff=args.prime_limit)
        fit = perron_residual_fit(y_list, args.parity, z2.value, tables, workers=workers)
        if args.csv_out:
            _write_csv(args.csv_out, fit["rows"], ["Y", "D2", "residual", "normalized"])
            if not args.no_figure:
                from .figures import perron_fit_figure

                perron_fit_figure(fit, _figure_path(args.csv_out))
        outputs = {"slope": fit["slope"], "max_normalized_residual": fit["max_normalized_residual"],
                   "constant": fit["constant"], "parity": args.parity}
        _print_kv(outputs)
        return {k: format_value(v) for k, v in outputs.items()}

    if cmd == "verify":
        report = verify_suite(args.suite, workers=workers)
        for check in report["checks"]:
            print(f"[{check['status'].upper():4}] {check['name']}: {check['observed']}")
        if args.json_out:
            Path(args.json_out).parent.mkdir(parents=True, exist_ok=True)
            Path(args.json_out).write_text(json.dumps(report, indent=2))
        if suite_failed(report):
            raise _SuiteFailed(report)
        return {"suite": args.suite, "checks": str(len(report["checks"])), "failed": "0"}

    raise ValueError(f"unknown command {cmd!r}")


class _SuiteFailed(Exception):
    def __init__(self, report):
        self.report = report
        failed = [c["name"] for c in report["checks"] if c["status"] == "fail"]
        super().__init__(f"verification failed: {', '.join(failed)}")


def mp_str(value) -> str:
    import mpmath

    return mpmath.nstr(value, 32)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        return 2 if exc.code not in (0, None) else 0
    started = time.perf_counter()
    try:
        outputs = _run(args)
    except ResourceLimitError as exc:
        print(f"error (resource limit): {exc}", file=sys.stderr)
        return 3
    except _SuiteFailed as exc:
        outputs = {"error": str(exc)}
        _append_ledger(args, outputs, started)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _append_ledger(args, outputs, started)
    if getattr(args, "json_out", None) and args.command != "verify":
        Path(args.json_out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.json_out).write_text(json.dumps({k: format_value(v) for k, v in outputs.items()}, indent=2))
    return 0


def _append_ledger(args, outputs, started) -> None:
    cfg = _config_from_args(args)
    ledger_path = Path(args.ledger) if getattr(args, "ledger", None) else cfg.cache_dir / "runs.ndjson"
    params = {k: format_value(v) for k, v in vars(args).items()
              if v is not None and k not in ("command",)}
    record = RunRecord(
        timestamp=utc_now_rfc3339(),
        argv=[args.command] + [a for a in (sys.argv[2:] if len(sys.argv) > 2 else [])],
        parameters=params,
        outputs={k: format_value(v) for k, v in outputs.items()},
        runtime_ms=(time.perf_counter() - started) * 1000.0,
        version=__version__,
    )
    try:
        append_record(ledger_path, record)
    except OSError:
        pass  # a read-only cache dir must not break the computation


if __name__ == "__main__":
    sys.exit(main())
