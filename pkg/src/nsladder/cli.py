"""Command-line harness.

Subcommands:
  run       one problem: ladder levels + reference + error table
  converge  cutoff sweep: errors.csv + eoc.json + per-run manifests
  diag      small-scale diagnostics along the reference trajectory
  selftest  invariant suites; exit 0 on a correct build

Exit codes: 0 success, 1 validation/usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from .basis import norm_l2
from .harness import (
    ConfigError,
    ErrorTable,
    build_problem,
    eoc_fit,
    error_table,
    load_config,
    smallscale_diagnostics,
)
from .integrate import IntegrationError
from .ladder import run_ladder, run_ladder_postprocessed
from .reference import run_reference
from .storage import save_ladder_result, write_field

__all__ = ["cli", "main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; the CLI contract wants 1
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="nsladder", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="TOML config file")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--levels", type=int, default=None, help="ladder level count K")
        p.add_argument("--seed", type=int, default=None, help="override forcing/initial seeds")

    p_run = sub.add_parser("run", help="run one spec: ladder + reference + error table")
    add_common(p_run)
    p_run.add_argument(
        "--postprocess-only",
        action="store_true",
        help="compute the top level's small scales only at t = T",
    )
    p_run.add_argument(
        "--no-trajectories",
        action="store_true",
        help="skip persisting trajectory directories (manifest and tables only)",
    )

    p_conv = sub.add_parser("converge", help="cutoff sweep: error table + EOC fits")
    add_common(p_conv)

    p_diag = sub.add_parser("diag", help="small-scale diagnostics along the reference")
    add_common(p_diag)

    p_self = sub.add_parser("selftest", help="run the invariant suites")
    p_self.add_argument("--seed", type=int, default=0)
    return parser


def _load(args):
    cfg = load_config(args.config)
    if args.levels is not None:
        if args.levels < 0:
            raise ConfigError(f"--levels must be >= 0, got {args.levels}")
        cfg = cfg.with_levels(args.levels)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.out is not None:
        from dataclasses import replace

        cfg = replace(cfg, output_dir=args.out)
    return cfg


def _write_text(path: str, text: str):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_json(path: str, payload):
    _write_text(path, json.dumps(payload, indent=2) + "\n")


def _cmd_run(args) -> int:
    cfg = _load(args)
    spec = build_problem(cfg)
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)

    t0 = time.time()
    reference = run_reference(spec, cfg.M_ref, cfg.h_ref)
    wall = {"reference": time.time() - t0}

    if args.postprocess_only:
        t0 = time.time()
        lower, u_T = run_ladder_postprocessed(spec)
        wall["ladder"] = time.time() - t0
        write_field(u_T, os.path.join(out, "u_final.nsf"))
        err_T = norm_l2(reference.samples[-1] - u_T)
        if lower.levels:
            table = error_table(lower, reference, cfg)
            _write_text(os.path.join(out, "errors.csv"), table.to_csv())
        save_ladder_result(lower, os.path.join(out, "ladder"),
                           wall_clock=wall, include_trajectories=not args.no_trajectories)
        print(f"postprocessed terminal error |u - u_{spec.K}|(T) = {err_T:.6e}")
        return 0

    t0 = time.time()
    result = run_ladder(spec)
    wall["ladder"] = time.time() - t0
    table = error_table(result, reference, cfg)
    _write_text(os.path.join(out, "errors.csv"), table.to_csv())
    save_ladder_result(result, os.path.join(out, "ladder"),
                       wall_clock=wall, include_trajectories=not args.no_trajectories)
    for row in table.select(norm="L2"):
        print(f"m={row.m} k={row.k}: |u-u_k|(T) = {row.err_T:.6e}  sup = {row.err_sup:.6e}")
    return 0


def _cmd_converge(args) -> int:
    cfg = _load(args)
    if len(cfg.sweep) < 2:
        raise ConfigError("[experiment].sweep needs at least 2 cutoffs for a convergence study")
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)

    # the reference solves the full equation once; it is independent of m
    spec_ref = build_problem(cfg, m=max(cfg.sweep))
    reference = run_reference(spec_ref, cfg.M_ref, cfg.h_ref)

    table = ErrorTable()
    for m in cfg.sweep:
        spec = build_problem(cfg, m=m)
        result = run_ladder(spec)
        part = error_table(result, reference, cfg)
        for row in part.rows:
            table.append(row)
        manifest = {
            "m": m,
            "delta": result.params.delta,
            "M_out": spec.M_out,
            "M_ref": cfg.M_ref,
            "h": spec.h,
            "h_ref": cfg.h_ref,
            "T": spec.T,
            "levels": spec.K,
            "norms": list(cfg.norms),
        }
        if cfg.pp_split_checks:
            from .basis import random_field
            from .convect import bilinear_B
            from .basis import project

            p_p = random_field(m // 2, 2024, 0.5, cfg.l)
            cancel = project(bilinear_B(p_p, p_p, 2 * m), "Q_m", m).max_abs()
            manifest["pp_cancellation_max"] = cancel
        _write_json(os.path.join(out, f"run_m{m:02d}", "manifest.json"), manifest)

    _write_text(os.path.join(out, "errors.csv"), table.to_csv())
    fits = []
    for k in range(cfg.K + 1):
        for name in cfg.norms:
            fit = eoc_fit(table, k, name)
            fits.append(
                {
                    "k": fit.k,
                    "norm": fit.norm,
                    "slope": fit.slope,
                    "intercept": fit.intercept,
                    "n_points": fit.n_points,
                    "m_values": list(fit.m_values),
                }
            )
    _write_json(os.path.join(out, "eoc.json"), fits)
    for entry in fits:
        print(f"k={entry['k']} norm={entry['norm']}: slope = {entry['slope']:.3f}")
    return 0


def _cmd_diag(args) -> int:
    cfg = _load(args)
    m_list = cfg.sweep if cfg.sweep else (cfg.m,)
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    spec = build_problem(cfg, m=max(m_list))
    reference = run_reference(spec, cfg.M_ref, cfg.h_ref)
    diag = smallscale_diagnostics(reference, m_list, cfg.t_skip)
    _write_text(os.path.join(out, "smallscale.csv"), diag.to_csv())
    _write_json(os.path.join(out, "smallscale_slopes.json"), diag.slopes)
    for name, slope in diag.slopes.items():
        print(f"{name}: slope = {slope:.3f}")
    return 0


def _cmd_selftest(args) -> int:
    from .selftest import run_selftest

    ok = run_selftest(seed=args.seed, report=print)
    return 0 if ok else 2


def cli(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except SystemExit as exc:  # --help lands here with code 0
        return int(exc.code or 0)

    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "converge":
            return _cmd_converge(args)
        if args.command == "diag":
            return _cmd_diag(args)
        if args.command == "selftest":
            return _cmd_selftest(args)
        raise _UsageError(f"unknown command {args.command!r}")
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except IntegrationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except FloatingPointError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
