"""Command-line entry point: run suites, sweep parameters, list presets.

Exit codes: 0 success, 2 configuration error, 3 budget-guard violation.
"""

from __future__ import annotations

import argparse
import sys

from .errors import BudgetExceededError, InvalidConstraintError, ParseError
from .harness import (
    PRESET_TEXTS,
    read_config,
    resolve_spec,
    run_suite,
    sweep,
)


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", help="INI experiment file (see 'cais presets')")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--runs", type=int, help="override the replicate count")
    p.add_argument("--out", help="override the output directory")
    p.add_argument(
        "--workers", type=int, default=1, help="worker processes (default 1)"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cais",
        description=(
            "Adaptive importance sampling experiment harness with "
            "ESS-gated covariance updates"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment suite")
    _add_common_flags(run_p)

    sweep_p = sub.add_parser("sweep", help="run one suite per parameter value")
    _add_common_flags(sweep_p)
    sweep_p.add_argument(
        "--param",
        required=True,
        help="parameter to sweep: sigma, n_t, D, transform, or sampler",
    )
    sweep_p.add_argument(
        "--values", required=True, help="comma-separated parameter values"
    )

    sub.add_parser("presets", help="print the built-in experiment configs")
    return parser


def _overrides(args) -> dict:
    out = {}
    if args.seed is not None:
        out["seed"] = args.seed
    if args.runs is not None:
        out["runs"] = args.runs
    if args.out is not None:
        out["output_path"] = args.out
    return out


def _cmd_run(args) -> int:
    raw = read_config(args.config)
    spec = resolve_spec(raw, _overrides(args))
    result = run_suite(spec, workers=max(1, args.workers))
    print(f"wrote {result.out_dir}/iterations.csv, summary.csv, manifest.txt")
    print(f"runs={spec.runs} sampler={spec.sampler} transform={spec.transform}")
    if result.mse_mean is not None:
        print(f"mean MSE of mean estimate: {result.mse_mean:.6g}")
    print(f"mean Z-hat: {result.z_hat_mean:.6g}")
    if result.kl_final_mean is not None:
        print(
            f"mean KL to target: initial {result.kl_initial_mean:.6g} "
            f"-> final {result.kl_final_mean:.6g}"
        )
    print(f"median final min eigenvalue: {result.min_eig_final_median:.6g}")
    if result.repair_events or result.degenerate_batches:
        print(
            f"repair events: {result.repair_events}, "
            f"degenerate batches: {result.degenerate_batches}"
        )
    return 0


def _cmd_sweep(args) -> int:
    raw = read_config(args.config)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    table = sweep(
        raw,
        args.param,
        values,
        overrides=_overrides(args),
        workers=max(1, args.workers),
    )
    print(f"wrote {table}")
    print(table.read_text(), end="")
    return 0


def _cmd_presets() -> int:
    for name in ("example1", "example2"):
        print(f"# --- {name} ---")
        print(PRESET_TEXTS[name])
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_presets()
    except (ParseError, InvalidConstraintError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except BudgetExceededError as exc:
        print(f"budget guard: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
