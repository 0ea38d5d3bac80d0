"""Command-line entry point.

Subcommands:
  piecewise        run a scripted regime-switching experiment, emit a trace
  threshold-sweep  classify the value-coupled operator over a parameter grid
  delay-table      analytic + empirical detection delays for the standard rows
  certify          run every certification suite, write the report
  rmdm-demo        fit the linear context encoder on a synthetic labeled set

Exit codes: 0 success, 1 configuration error, 2 certification failure,
3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ..context import ContextLossConfig, EmbeddingBatch, context_loss, fit_linear_context
from .certify import MUTATIONS, report_to_json, run_certification, separable_context_dataset
from .config import ConfigError, load_config
from .experiment import run_piecewise
from .io import emit_trace
from .sweeps import run_delay_table, run_threshold_sweep

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CERTIFICATION = 2
EXIT_IO = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pwmdp",
        description="Piecewise-stationary MDP experiments and certification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, default_format="csv"):
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out", type=str, default=None, help="output directory")
        p.add_argument(
            "--format", choices=("csv", "json"), default=default_format, help="output format"
        )

    p_piece = sub.add_parser("piecewise", help="run a scripted regime-switching experiment")
    p_piece.add_argument("--config", type=str, default=None, help="JSON config path")
    add_common(p_piece)

    p_sweep = sub.add_parser(
        "threshold-sweep", help="phase map of the value-coupled operator"
    )
    add_common(p_sweep, default_format="json")
    p_sweep.add_argument("--n-gamma", type=int, default=50)
    p_sweep.add_argument("--n-coupling", type=int, default=50)
    p_sweep.add_argument("--n-iter", type=int, default=200)

    p_delay = sub.add_parser("delay-table", help="detection-delay table")
    add_common(p_delay)

    p_cert = sub.add_parser("certify", help="run the certification suites")
    add_common(p_cert, default_format="json")
    p_cert.add_argument(
        "--inject-mutation",
        choices=MUTATIONS,
        default=None,
        help="deliberately inject a known bug; certification must then fail",
    )

    p_demo = sub.add_parser(
        "rmdm-demo",
        help="context-embedding demo: fit the linear encoder on synthetic labeled data",
    )
    add_common(p_demo, default_format="json")
    p_demo.add_argument("--steps", type=int, default=150)
    p_demo.add_argument("--lr", type=float, default=0.1)

    return parser


def _out_dir(args, fallback: str = "out") -> Path:
    path = Path(args.out if args.out is not None else fallback)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _cmd_piecewise(args) -> int:
    overrides = {"seed": args.seed, "out_dir": args.out, "format": args.format}
    config = load_config(args.config, overrides)
    trace = run_piecewise(config)
    out = _out_dir(args, config.out_dir)
    path = emit_trace(trace, config.format, out / f"trace.{config.format}")
    final = trace.rows[-1]
    print(f"wrote {len(trace)} rows to {path}")
    print(f"final: err={final.err:.3e} lambda_w={final.lambda_w:.4f} beta_eff={final.beta_eff:.4f}")
    return EXIT_OK


def _cmd_threshold_sweep(args) -> int:
    result = run_threshold_sweep(
        np.linspace(0.0, 0.98, args.n_gamma),
        np.linspace(0.0, 0.5, args.n_coupling),
        n_iter=args.n_iter,
    )
    out = _out_dir(args)
    path = out / "phase_map.json"
    try:
        path.write_text(json.dumps(result.to_json_dict(), indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write phase map to {path}: {exc}") from exc
    print(f"phase map {args.n_gamma}x{args.n_coupling} -> {path}")
    print(f"boundary matches analytic line: {result.matches_analytic()}")
    return EXIT_OK


def _cmd_delay_table(args) -> int:
    rows = run_delay_table()
    out = _out_dir(args)
    if args.format == "json":
        path = out / "delay_table.json"
        text = json.dumps(rows, indent=2) + "\n"
    else:
        path = out / "delay_table.csv"
        header = list(rows[0].keys())
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(repr(row[k]) if isinstance(row[k], float) else str(row[k]) for k in header))
        text = "\n".join(lines) + "\n"
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write delay table to {path}: {exc}") from exc
    for row in rows:
        print(
            f"{row['scenario']}: L={row['likelihood_ratio']} r0={row['prior_ratio']} "
            f"delta={row['delta']} n_delta={row['n_delta']:.4f} "
            f"ceil={row['n_ceil']} empirical={row['empirical_delay']}"
        )
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_certify(args) -> int:
    seed = args.seed if args.seed is not None else 0
    report = run_certification(seed=seed, mutation=args.inject_mutation)
    for suite in report.suites:
        status = "PASS" if suite.passed else "FAIL"
        print(
            f"{status} {suite.name}: instances={suite.tested_instances} "
            f"max_violation={suite.max_violation:.3e} tol={suite.tolerance:.1e}"
        )
    if args.out is not None:
        out = _out_dir(args)
        path = out / "certification.json"
        try:
            path.write_text(report_to_json(report), encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc}") from exc
        print(f"wrote {path}")
    if not report.passed:
        failed = [s.name for s in report.suites if not s.passed]
        print(f"certification FAILED: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CERTIFICATION
    print("certification passed")
    return EXIT_OK


def _cmd_demo(args) -> int:
    seed = args.seed if args.seed is not None else 0
    config = ContextLossConfig()
    states, mode_ids = separable_context_dataset(seed)
    weights = fit_linear_context((states, mode_ids), config, steps=args.steps, lr=args.lr, seed=seed)
    embedded = states @ weights.T
    embedded = embedded / (np.linalg.norm(embedded, axis=1, keepdims=True) + 1e-8)
    batch = EmbeddingBatch(embedded, mode_ids)
    loss = context_loss(batch, config)
    means = batch.mode_means()
    distance = float(np.linalg.norm(means[0] - means[1]))
    out = _out_dir(args)
    path = out / "context_map.json"
    payload = {
        "weights": [[float(w) for w in row] for row in weights],
        "loss_total": loss.total,
        "loss_consistency": loss.consistency,
        "loss_diversity": loss.diversity,
        "mode_mean_distance": distance,
    }
    try:
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write context map to {path}: {exc}") from exc
    print(f"fitted linear context encoder: mode-mean distance {distance:.3f}")
    print(f"loss total={loss.total:.4f} consistency={loss.consistency:.4f} diversity={loss.diversity:.4f}")
    print(f"wrote {path}")
    return EXIT_OK


_COMMANDS = {
    "piecewise": _cmd_piecewise,
    "threshold-sweep": _cmd_threshold_sweep,
    "delay-table": _cmd_delay_table,
    "certify": _cmd_certify,
    "rmdm-demo": _cmd_demo,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
