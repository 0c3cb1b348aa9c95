"""Dense-vs-sparse propagation benchmark.

Times transfer-matrix construction and the per-iteration solver step across
feature-map sizes, in sparse CSR and literal dense modes, writing one CSV
row per (mode, size) cell. Iteration cost is the quantity of interest: the
sparse step is O(k·N) against the dense O(N²). BLAS thread pools are pinned
to one thread during timing (when threadpoolctl is available) so the
scaling signature is not distorted by threads kicking in at larger sizes.
"""

from __future__ import annotations

import csv
import time
from contextlib import nullcontext
from dataclasses import dataclass
from statistics import median

import numpy as np

from .core import SolverConfig
from .graph import build_transfer, dense_transfer_oracle
from .solver import iterate_once
from .synthetic import spanning_prior, unit_features

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover
    def threadpool_limits(limits=None):
        return nullcontext()

DENSE_BENCH_CAP = 4096  # N_q limit for dense mode


class BenchCapError(ValueError):
    """Dense benchmark requested above the N_q cap."""


@dataclass(frozen=True)
class BenchRow:
    mode: str
    n: int
    build_ms: float
    iter_ms: float
    total_ms: float


def _time_cell(side: int, mode: str, top_k: int, reps: int, iters: int,
               seed: int, channels: int) -> BenchRow:
    n = side * side
    rng = np.random.default_rng(seed + side)
    feats = unit_features(channels, side, side, rng)
    m0 = spanning_prior(side, side, rng)
    cfg = SolverConfig(top_k=min(top_k, n))

    build_times: list[float] = []
    iter_times: list[float] = []
    for _ in range(reps):
        t0 = time.perf_counter()
        if mode == "sparse":
            p = build_transfer(feats, cfg.top_k, cfg.temperature)
        else:
            p = dense_transfer_oracle(feats, cfg.top_k, cfg.temperature)
        t1 = time.perf_counter()
        build_times.append((t1 - t0) * 1e3)

        m = m0
        t2 = time.perf_counter()
        for _ in range(iters):
            m, _, _ = iterate_once(m, m0, p, cfg)
        t3 = time.perf_counter()
        iter_times.append((t3 - t2) * 1e3 / iters)

    build_ms = median(build_times)
    iter_ms = median(iter_times)
    return BenchRow(
        mode=mode,
        n=n,
        build_ms=build_ms,
        iter_ms=iter_ms,
        total_ms=build_ms + iter_ms * iters,
    )


def run_bench(
    sizes: list[int],
    top_k: int = 8,
    mode: str = "sparse",
    reps: int = 5,
    iters: int = 20,
    seed: int = 42,
    channels: int = 32,
) -> list[BenchRow]:
    """Benchmark the given feature-map side lengths; mode is sparse|dense|both."""
    if mode not in ("sparse", "dense", "both"):
        raise ValueError(f"mode must be sparse|dense|both, got {mode!r}")
    modes = ["sparse", "dense"] if mode == "both" else [mode]
    if "dense" in modes:
        over = [s for s in sizes if s * s > DENSE_BENCH_CAP]
        if over:
            raise BenchCapError(
                f"dense mode capped at N_q={DENSE_BENCH_CAP}; "
                f"side {over[0]} gives N_q={over[0] ** 2}"
            )
    rows: list[BenchRow] = []
    with threadpool_limits(limits=1):
        for m in modes:
            for side in sizes:
                rows.append(_time_cell(side, m, top_k, reps, iters, seed, channels))
    return rows


def write_bench_csv(rows: list[BenchRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mode", "n", "build_ms", "iter_ms", "total_ms"])
        for r in rows:
            writer.writerow(
                [r.mode, r.n, f"{r.build_ms:.3f}", f"{r.iter_ms:.3f}", f"{r.total_ms:.3f}"]
            )
