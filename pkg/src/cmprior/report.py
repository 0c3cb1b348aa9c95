"""Figure rendering for solver traces and benchmark CSVs.

Reads the CSVs the CLI emits and writes PNG figures next to them (or into a
chosen directory): a convergence panel for traces and a log-log scaling
panel for benchmarks.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _read_trace_csv(path) -> tuple[list[int], list[float], list[float], list[float]]:
    iters, residuals, ranges, ratios = [], [], [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            iters.append(int(row["iter"]))
            residuals.append(float(row["residual"]))
            ranges.append(float(row["range"]))
            ratios.append(float(row["ratio"]) if row["ratio"] else float("nan"))
    return iters, residuals, ranges, ratios


def render_trace_figure(trace_csv, out_png=None) -> Path:
    """Residual decay (log scale), combination-term range, and step ratios."""
    trace_csv = Path(trace_csv)
    out = Path(out_png) if out_png else trace_csv.with_suffix(".png")
    iters, residuals, ranges, ratios = _read_trace_csv(trace_csv)

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    ax1.semilogy(iters, residuals, marker="o", ms=3, label="residual")
    ax1.set_xlabel("iteration")
    ax1.set_ylabel(r"$\|M^{t+1}-M^t\|_\infty$")
    ax1.grid(True, alpha=0.4)
    ax1.legend()

    ax2.plot(iters, ranges, marker="s", ms=3, color="tab:green", label="range")
    ax2.plot(iters, ratios, marker="^", ms=3, color="tab:red", label="ratio")
    ax2.set_xlabel("iteration")
    ax2.set_ylim(bottom=0.0)
    ax2.grid(True, alpha=0.4)
    ax2.legend()

    fig.suptitle(trace_csv.name)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def _read_bench_csv(path) -> dict[str, list[tuple[int, float, float]]]:
    by_mode: dict[str, list[tuple[int, float, float]]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            by_mode.setdefault(row["mode"], []).append(
                (int(row["n"]), float(row["build_ms"]), float(row["iter_ms"]))
            )
    for rows in by_mode.values():
        rows.sort()
    return by_mode


def render_bench_figure(bench_csv, out_png=None) -> Path:
    """Per-iteration and build time versus N_q, log-log, one line per mode."""
    bench_csv = Path(bench_csv)
    out = Path(out_png) if out_png else bench_csv.with_suffix(".png")
    by_mode = _read_bench_csv(bench_csv)

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    for mode, rows in sorted(by_mode.items()):
        ns = [r[0] for r in rows]
        ax1.loglog(ns, [r[2] for r in rows], marker="o", label=mode)
        ax2.loglog(ns, [r[1] for r in rows], marker="o", label=mode)
    ax1.set_xlabel(r"$N_q$")
    ax1.set_ylabel("per-iteration ms")
    ax1.grid(True, which="both", alpha=0.4)
    ax1.legend()
    ax2.set_xlabel(r"$N_q$")
    ax2.set_ylabel("build ms")
    ax2.grid(True, which="both", alpha=0.4)
    ax2.legend()

    fig.suptitle(bench_csv.name)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
