"""CMPT tensor container, independently implemented against the byte contract.

Layout (little-endian): magic "CMPT", version u16 = 1, dtype u8 = 1
(float32), ndim u8, ndim dimension sizes as u32, then row-major float32
data. Files must be byte-for-byte interchangeable with the consumer side,
which golden-file tests enforce.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"CMPT"
VERSION = 1
DTYPE_F32 = 1


class TensorFileError(ValueError):
    pass


def write_cmpt(array: np.ndarray, path) -> None:
    a = np.ascontiguousarray(array, dtype="<f4")
    if a.ndim < 1 or any(d < 1 for d in a.shape):
        raise TensorFileError(f"tensor dims must be positive, got {a.shape}")
    if not np.isfinite(a).all():
        raise TensorFileError("tensor data must be finite")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HBB", VERSION, DTYPE_F32, a.ndim))
        fh.write(struct.pack(f"<{a.ndim}I", *a.shape))
        fh.write(a.tobytes(order="C"))


def read_cmpt(path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 8 or blob[:4] != MAGIC:
        raise TensorFileError(f"not a CMPT file: {path}")
    version, dtype_code, ndim = struct.unpack("<HBB", blob[4:8])
    if version != VERSION or dtype_code != DTYPE_F32:
        raise TensorFileError(f"unsupported CMPT version/dtype in {path}")
    end = 8 + 4 * ndim
    if len(blob) < end:
        raise TensorFileError(f"truncated CMPT header in {path}")
    dims = struct.unpack(f"<{ndim}I", blob[8:end])
    count = int(np.prod(dims, dtype=np.int64))
    if len(blob) - end != 4 * count:
        raise TensorFileError(f"CMPT data length mismatch in {path}")
    return np.frombuffer(blob[end:], dtype="<f4").reshape(dims).astype(np.float32)
