"""Binary (P5) PGM masks, 8-bit, maxval 255."""

from __future__ import annotations

import numpy as np


def write_pgm(mask01: np.ndarray, path) -> None:
    """Write a {0,1} array as P5 PGM with 1 -> 255."""
    m = np.asarray(mask01)
    if m.ndim != 2:
        raise ValueError(f"mask must be H×W, got {m.shape}")
    h, w = m.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write((m.astype(np.uint8) * np.uint8(255)).tobytes(order="C"))


def read_pgm(path) -> np.ndarray:
    """Read a P5 PGM into a {0,1} uint8 array (>=128 maps to 1)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    parts = blob.split(maxsplit=4)
    if len(parts) < 4 or parts[0] != b"P5":
        raise ValueError(f"not a P5 PGM: {path}")
    width, height, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise ValueError(f"PGM maxval must be 255 in {path}")
    header_len = len(blob) - width * height
    raster = blob[header_len:]
    if len(raster) != width * height:
        raise ValueError(f"PGM raster length mismatch in {path}")
    return (np.frombuffer(raster, dtype=np.uint8).reshape(height, width) >= 128).astype(
        np.uint8
    )
