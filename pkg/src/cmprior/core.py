"""Core data types and the binary file formats shared across components.

Everything downstream (prior construction, the transfer graph, the solver)
works on these types. Tensors are 32-bit float, row-major, batch-free: one
image per invocation, callers loop externally.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

CMPT_MAGIC = b"CMPT"
CMPT_VERSION = 1
CMPT_DTYPE_F32 = 1

PRIOR_TOL = 1e-6  # values this far outside [0,1] are clamped, further is an error


class FormatError(ValueError):
    """Malformed or unsupported file content (CMPT, PGM, spec/config files)."""


class EmptyMaskError(ValueError):
    """Support mask selects (numerically) nothing."""


class ContractionError(ValueError):
    """Solver configuration violates the contraction condition."""


def _require_finite(a: np.ndarray, what: str) -> None:
    if not np.isfinite(a).all():
        raise FormatError(f"{what} contains non-finite values")


@dataclass(frozen=True)
class Tensor:
    """Dense row-major float32 array with finite entries.

    `data` is always C-contiguous float32; `dims` mirrors its shape.
    """

    data: np.ndarray

    def __post_init__(self):
        a = self.data
        if not isinstance(a, np.ndarray) or a.dtype != np.float32 or not a.flags.c_contiguous:
            raise ValueError("Tensor.data must be a C-contiguous float32 ndarray")
        if a.ndim < 1 or any(d < 1 for d in a.shape):
            raise ValueError(f"Tensor dims must be positive, got {a.shape}")
        _require_finite(a, "tensor data")

    @classmethod
    def from_array(cls, a) -> "Tensor":
        return cls(np.ascontiguousarray(a, dtype=np.float32))

    @property
    def dims(self) -> tuple[int, ...]:
        return self.data.shape


@dataclass(frozen=True)
class Prior:
    """Probabilistic position prior: H×W float32 values in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if not isinstance(v, np.ndarray) or v.dtype != np.float32 or v.ndim != 2:
            raise ValueError("Prior.values must be an H×W float32 ndarray")
        _require_finite(v, "prior")
        lo = float(v.min())
        hi = float(v.max())
        if lo < -PRIOR_TOL or hi > 1.0 + PRIOR_TOL:
            raise ValueError(f"prior values outside [0,1]: min={lo}, max={hi}")
        if lo < 0.0 or hi > 1.0:
            # within tolerance: clamp (copy; the source may be read-only)
            object.__setattr__(self, "values", np.clip(v, 0.0, 1.0))

    @classmethod
    def from_array(cls, a) -> "Prior":
        return cls(np.ascontiguousarray(a, dtype=np.float32))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class BinaryMask:
    """H×W mask with entries exactly 0 or 1 (stored uint8)."""

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if not isinstance(v, np.ndarray) or v.dtype != np.uint8 or v.ndim != 2:
            raise ValueError("BinaryMask.values must be an H×W uint8 ndarray")
        bad = (v != 0) & (v != 1)
        if bad.any():
            raise ValueError("mask values must be exactly 0 or 1")

    @classmethod
    def from_array(cls, a) -> "BinaryMask":
        return cls(np.ascontiguousarray(a, dtype=np.uint8))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def complement(self) -> "BinaryMask":
        return BinaryMask((1 - self.values).astype(np.uint8))


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of the anchored fixed-point iteration.

    The contraction condition alpha/(delta+epsilon)^2 < 1 must hold for a
    certified run; `certify` enforces it. Defaults alpha=0.03, delta=0.2
    give a Lipschitz bound of ~0.75.
    """

    alpha: float = 0.03
    delta: float = 0.2
    epsilon: float = 1e-8
    temperature: float = 0.1
    top_k: int = 8
    max_iters: int = 200
    tol: float = 1e-6
    threshold: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha must be in (0,1], got {self.alpha}")
        if self.delta <= 0.0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.temperature <= 0.0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol <= 0.0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if not (0.0 < self.threshold < 1.0):
            raise ValueError(f"threshold must be in (0,1), got {self.threshold}")

    @property
    def lipschitz_bound(self) -> float:
        return self.alpha / (self.delta + self.epsilon) ** 2

    @property
    def certified(self) -> bool:
        return self.lipschitz_bound < 1.0

    def certify(self) -> None:
        bound = self.lipschitz_bound
        if bound >= 1.0:
            raise ContractionError(
                f"contraction condition violated: alpha/(delta+epsilon)^2 = {bound:.9g} >= 1"
            )


# ---------------------------------------------------------------------------
# CMPT tensor container
#
# Layout (all little-endian):
#   magic "CMPT" | version u16 = 1 | dtype u8 = 1 (float32) | ndim u8 |
#   ndim × dim u32 | row-major float32 data
# ---------------------------------------------------------------------------


def write_tensor(t: Tensor, path) -> None:
    """Write `t` to `path` in the CMPT container."""
    a = t.data
    header = CMPT_MAGIC + struct.pack("<HBB", CMPT_VERSION, CMPT_DTYPE_F32, a.ndim)
    header += struct.pack(f"<{a.ndim}I", *a.shape)
    payload = a.astype("<f4", copy=False).tobytes(order="C")
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(payload)
    except OSError as exc:
        raise OSError(f"cannot write tensor to {path}: {exc}") from exc


def read_tensor(path) -> Tensor:
    """Read a CMPT file, rejecting anything off-contract."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read tensor from {path}: {exc}") from exc

    if len(blob) < 8:
        raise FormatError(f"format error: truncated header in {path}")
    if blob[:4] != CMPT_MAGIC:
        raise FormatError(f"format error: bad magic {blob[:4]!r} in {path}")
    version, dtype_code, ndim = struct.unpack("<HBB", blob[4:8])
    if version != CMPT_VERSION:
        raise FormatError(f"format error: unsupported version {version} in {path}")
    if dtype_code != CMPT_DTYPE_F32:
        raise FormatError(f"format error: unsupported dtype code {dtype_code} in {path}")
    if ndim < 1:
        raise FormatError(f"format error: ndim must be >= 1 in {path}")
    dims_end = 8 + 4 * ndim
    if len(blob) < dims_end:
        raise FormatError(f"format error: truncated dims in {path}")
    dims = struct.unpack(f"<{ndim}I", blob[8:dims_end])
    if any(d < 1 for d in dims):
        raise FormatError(f"format error: non-positive dim in {dims} in {path}")

    count = int(np.prod(dims, dtype=np.int64))
    data = blob[dims_end:]
    if len(data) != 4 * count:
        raise FormatError(
            f"length mismatch: {dims} declares {count} floats "
            f"but file holds {len(data) // 4} in {path}"
        )
    a = np.frombuffer(data, dtype="<f4").reshape(dims).astype(np.float32)
    if not np.isfinite(a).all():
        raise FormatError(f"format error: non-finite data in {path}")
    return Tensor(np.ascontiguousarray(a))


# ---------------------------------------------------------------------------
# PGM (P5, 8-bit, maxval 255) binary masks
# ---------------------------------------------------------------------------


def _pgm_tokens(blob: bytes, n: int) -> tuple[list[bytes], int]:
    """First `n` whitespace-separated header tokens, skipping # comments.

    Returns the tokens and the offset just past the single whitespace byte
    that terminates the last one (raster starts there).
    """
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < n:
        if i >= len(blob):
            raise FormatError("format error: truncated PGM header")
        c = blob[i : i + 1]
        if c in b" \t\r\n":
            i += 1
        elif c == b"#":
            while i < len(blob) and blob[i : i + 1] != b"\n":
                i += 1
        else:
            j = i
            while j < len(blob) and blob[j : j + 1] not in b" \t\r\n#":
                j += 1
            tokens.append(blob[i:j])
            i = j
            if len(tokens) == n:
                if i >= len(blob):
                    raise FormatError("format error: truncated PGM header")
                i += 1  # exactly one whitespace byte before the raster
    return tokens, i


def read_mask_pgm(path) -> BinaryMask:
    """Read a binary (P5) 8-bit PGM; pixel >= 128 maps to 1."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read mask from {path}: {exc}") from exc

    (magic, w_tok, h_tok, maxval_tok), offset = _pgm_tokens(blob, 4)
    if magic != b"P5":
        raise FormatError(f"format error: not a P5 PGM (magic {magic!r}) in {path}")
    try:
        width, height, maxval = int(w_tok), int(h_tok), int(maxval_tok)
    except ValueError as exc:
        raise FormatError(f"format error: bad PGM header numbers in {path}") from exc
    if maxval != 255:
        raise FormatError(f"format error: PGM maxval must be 255, got {maxval} in {path}")
    if width < 1 or height < 1:
        raise FormatError(f"format error: bad PGM size {width}x{height} in {path}")
    raster = blob[offset : offset + width * height]
    if len(raster) != width * height:
        raise FormatError(f"length mismatch: PGM raster short in {path}")
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return BinaryMask((pixels >= 128).astype(np.uint8))


def write_mask_pgm(m: BinaryMask, path) -> None:
    """Write a BinaryMask as P5 PGM (0 -> 0, 1 -> 255)."""
    h, w = m.shape
    try:
        with open(path, "wb") as fh:
            fh.write(b"P5\n%d %d\n255\n" % (w, h))
            fh.write((m.values * np.uint8(255)).tobytes(order="C"))
    except OSError as exc:
        raise OSError(f"cannot write mask to {path}: {exc}") from exc
