"""Area-average downsampling of masks to feature resolution."""

from __future__ import annotations

import numpy as np


def area_average(values: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Box-filter resample preserving fractional coverage.

    Each output cell integrates the input over its exact (possibly
    fractional) source rectangle. Matches plain block averaging whenever the
    scale factors are integers.
    """
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected H×W array, got {a.shape}")
    in_h, in_w = a.shape
    if out_h < 1 or out_w < 1:
        raise ValueError("output size must be positive")

    out = np.empty((out_h, out_w), dtype=np.float64)
    sy = in_h / out_h
    sx = in_w / out_w
    for i in range(out_h):
        y0, y1 = i * sy, (i + 1) * sy
        rows = range(int(np.floor(y0)), min(int(np.ceil(y1)), in_h))
        for j in range(out_w):
            x0, x1 = j * sx, (j + 1) * sx
            cols = range(int(np.floor(x0)), min(int(np.ceil(x1)), in_w))
            acc = 0.0
            for r in rows:
                wy = min(y1, r + 1) - max(y0, r)
                for c in cols:
                    wx = min(x1, c + 1) - max(x0, c)
                    acc += wy * wx * a[r, c]
            out[i, j] = acc / (sy * sx)
    return out.astype(np.float32)
