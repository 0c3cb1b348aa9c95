"""Command-line frontend.

Subcommands: prior (initial prior from support/query features), propagate
(fixed-point refinement), pipeline (full K-shot episode), bench (dense vs
sparse scaling CSV), eval (mask metrics), report (figures from CSVs).

Exit codes: 0 ok, 2 format/parse error, 3 empty support mask,
4 non-convergence (outputs still written), 5 contraction certification
failure, 6 dense benchmark over its size cap.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .core import (
    ContractionError,
    EmptyMaskError,
    FormatError,
    Prior,
    SolverConfig,
    Tensor,
    read_mask_pgm,
    read_tensor,
    write_mask_pgm,
    write_tensor,
)
from .episodes import load_episode, parse_config_file, parse_episode_spec, run_episode
from .fusion import format_report
from .graph import build_transfer
from .prior import initial_prior, mask_to_feature_prior
from .solver import solve_fixed_point, write_trace_csv

EXIT_OK = 0
EXIT_FORMAT = 2
EXIT_EMPTY_MASK = 3
EXIT_NO_CONVERGENCE = 4
EXIT_NOT_CONTRACTIVE = 5
EXIT_BENCH_CAP = 6

_DEFAULTS = SolverConfig()


def _read_prior_file(path) -> Prior:
    t = read_tensor(path)
    a = t.data
    if a.ndim == 3 and a.shape[0] == 1:
        a = a[0]
    if a.ndim != 2:
        raise FormatError(f"prior file must be 1×H×W or H×W, got dims {t.dims} in {path}")
    return Prior(np.ascontiguousarray(a))


def _write_prior_file(prior: Prior, path) -> None:
    write_tensor(Tensor(prior.values[None, :, :].copy()), path)


def _solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, default=_DEFAULTS.alpha,
                        help="anchoring trade-off weight in (0,1]")
    parser.add_argument("--delta", type=float, default=_DEFAULTS.delta,
                        help="dynamic range floor of the normalization g")
    parser.add_argument("--epsilon", type=float, default=_DEFAULTS.epsilon,
                        help="numerical stabilizer in g's denominator")
    parser.add_argument("--temperature", type=float, default=_DEFAULTS.temperature,
                        help="similarity temperature for the transfer matrix")
    parser.add_argument("--top-k", type=int, default=_DEFAULTS.top_k,
                        help="neighbors kept per pixel row")
    parser.add_argument("--max-iters", type=int, default=_DEFAULTS.max_iters,
                        help="iteration cap")
    parser.add_argument("--tol", type=float, default=_DEFAULTS.tol,
                        help="∞-norm residual stopping tolerance")


def _config_from_args(args: argparse.Namespace) -> SolverConfig:
    return SolverConfig(
        alpha=args.alpha,
        delta=args.delta,
        epsilon=args.epsilon,
        temperature=args.temperature,
        top_k=args.top_k,
        max_iters=args.max_iters,
        tol=args.tol,
    )


def cmd_prior(args) -> int:
    f_s = read_tensor(args.support_feat)
    f_q = read_tensor(args.query_feat)
    if f_s.data.ndim != 3 or f_q.data.ndim != 3:
        raise FormatError("feature files must hold C×H×W tensors")
    if f_s.dims[0] != f_q.dims[0]:
        raise FormatError(
            f"channel mismatch: support C={f_s.dims[0]}, query C={f_q.dims[0]}"
        )
    mask = read_mask_pgm(args.support_mask)
    soft = mask_to_feature_prior(mask, f_s.dims[1], f_s.dims[2])
    m0 = initial_prior(f_s, soft, f_q)
    _write_prior_file(m0, args.out)
    return EXIT_OK


def cmd_propagate(args) -> int:
    cfg = _config_from_args(args)
    cfg.certify()
    f_q = read_tensor(args.query_feat)
    m0 = _read_prior_file(args.prior)
    if m0.values.size != f_q.dims[1] * f_q.dims[2]:
        raise FormatError(
            f"prior {m0.shape} does not match query feature grid "
            f"{f_q.dims[1]}×{f_q.dims[2]}"
        )
    p = build_transfer(f_q, cfg.top_k, cfg.temperature)
    solved = solve_fixed_point(m0, p, cfg)
    _write_prior_file(solved.prior, args.out)
    if args.trace_out:
        write_trace_csv(solved.trace, args.trace_out)
    return EXIT_OK if solved.trace.converged else EXIT_NO_CONVERGENCE


def cmd_pipeline(args) -> int:
    spec = parse_episode_spec(args.episode)
    overrides = parse_config_file(args.config) if args.config else {}
    cfg = replace(SolverConfig(), **overrides)
    cfg.certify()
    supports, f_q, gt = load_episode(spec)
    result = run_episode(supports, f_q, cfg, gt=gt, class_id=spec.class_id)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_prior_file(result.initial, out_dir / "prior_initial.cmpt")
    _write_prior_file(result.converged, out_dir / "prior_converged.cmpt")
    write_mask_pgm(result.mask, out_dir / "mask.pgm")
    write_mask_pgm(result.mask_initial, out_dir / "mask_initial.pgm")
    for k, trace in enumerate(result.traces):
        write_trace_csv(trace, out_dir / f"trace_shot{k}.csv")
    if result.report is not None:
        text = format_report(result.report)
        (out_dir / "report.txt").write_text(text)
        sys.stdout.write(text)
    return EXIT_OK


def cmd_bench(args) -> int:
    from .bench import run_bench, write_bench_csv

    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    if not sizes or any(s < 1 for s in sizes):
        raise FormatError(f"bad --sizes list: {args.sizes!r}")
    rows = run_bench(
        sizes,
        top_k=args.top_k,
        mode=args.mode,
        reps=args.reps,
        iters=args.iters,
        seed=args.seed,
        channels=args.channels,
    )
    write_bench_csv(rows, args.csv_out)
    return EXIT_OK


def cmd_eval(args) -> int:
    from .fusion import fb_iou, iou

    pred = read_mask_pgm(args.pred)
    gt = read_mask_pgm(args.gt)
    if pred.shape != gt.shape:
        raise FormatError(f"mask shapes disagree: {pred.shape} vs {gt.shape}")
    sys.stdout.write(f"iou={iou(pred, gt):.6f} fbiou={fb_iou(pred, gt):.6f}\n")
    return EXIT_OK


def cmd_report(args) -> int:
    from .report import render_bench_figure, render_trace_figure

    if not args.trace and not args.bench:
        raise FormatError("report needs --trace and/or --bench CSV inputs")
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)

    def target(csv_path: str) -> Path | None:
        return out_dir / (Path(csv_path).stem + ".png") if out_dir else None

    written = []
    for path in args.trace or []:
        written.append(render_trace_figure(path, target(path)))
    for path in args.bench or []:
        written.append(render_bench_figure(path, target(path)))
    for p in written:
        sys.stdout.write(f"{p}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cmprior",
        description="Contraction-mapping position-prior optimization for "
        "few-shot segmentation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("prior", formatter_class=fmt,
                       help="compute the initial prior from support features+mask")
    p.add_argument("--support-feat", required=True, help="support CMPT feature file (C×H×W)")
    p.add_argument("--support-mask", required=True, help="support PGM mask (any resolution)")
    p.add_argument("--query-feat", required=True, help="query CMPT feature file (C×H×W)")
    p.add_argument("--out", required=True, help="output CMPT prior (1×H×W)")
    p.set_defaults(func=cmd_prior)

    p = sub.add_parser("propagate", formatter_class=fmt,
                       help="refine a prior to its fixed point over the query graph")
    p.add_argument("--query-feat", required=True, help="query CMPT feature file (C×H×W)")
    p.add_argument("--prior", required=True, help="input CMPT prior (1×H×W or H×W)")
    _solver_flags(p)
    p.add_argument("--trace-out", default=None, help="optional trace CSV path")
    p.add_argument("--out", required=True, help="output CMPT fixed prior (1×H×W)")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("pipeline", formatter_class=fmt,
                       help="run a K-shot episode: priors, solve, fuse, binarize, report")
    p.add_argument("--episode", required=True,
                   help="episode spec file: support=<feat>,<mask> lines, query=<feat>, "
                        "optional gt=<mask> and class=<id>")
    p.add_argument("--config", default=None, help="key=value solver config file")
    p.add_argument("--out-dir", required=True,
                   help="output directory (prior_initial.cmpt, prior_converged.cmpt, "
                        "mask.pgm, mask_initial.pgm, trace_shot<k>.csv, report.txt)")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("bench", formatter_class=fmt,
                       help="time transfer build and per-iteration cost, CSV out")
    p.add_argument("--sizes", required=True, help="comma-separated feature-map side lengths")
    p.add_argument("--top-k", type=int, default=_DEFAULTS.top_k, help="neighbors per row")
    p.add_argument("--mode", choices=["sparse", "dense", "both"], default="sparse",
                   help="which propagation modes to time")
    p.add_argument("--csv-out", required=True, help="output CSV path")
    p.add_argument("--reps", type=int, default=5, help="repetitions per cell (median)")
    p.add_argument("--iters", type=int, default=20, help="iterations per timing loop")
    p.add_argument("--seed", type=int, default=42, help="RNG seed for synthetic features")
    p.add_argument("--channels", type=int, default=32, help="feature channels")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("eval", formatter_class=fmt,
                       help="IoU / FB-IoU between a predicted and ground-truth PGM mask")
    p.add_argument("--pred", required=True, help="predicted PGM mask")
    p.add_argument("--gt", required=True, help="ground-truth PGM mask")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", formatter_class=fmt,
                       help="render PNG figures from trace/bench CSVs")
    p.add_argument("--trace", action="append", default=None,
                   help="solver trace CSV (repeatable)")
    p.add_argument("--bench", action="append", default=None,
                   help="benchmark CSV (repeatable)")
    p.add_argument("--out-dir", default=None,
                   help="figure directory (default: PNG beside each CSV)")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ContractionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONTRACTIVE
    except EmptyMaskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY_MASK
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except Exception as exc:
        from .bench import BenchCapError

        if isinstance(exc, BenchCapError):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_BENCH_CAP
        if isinstance(exc, (ValueError, OSError)):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FORMAT
        raise


if __name__ == "__main__":
    sys.exit(main())
