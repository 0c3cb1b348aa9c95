"""Sparse row-stochastic structure transfer matrix over query pixels.

Rows are built from temperature-scaled dot-product similarity between pixel
features, kept to the top-k entries per row, and softmax-normalized. Storage
is compressed sparse rows so the propagation step costs O(k·N) instead of
O(N²); a literal dense construction is kept as the test/benchmark oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Prior, Tensor
from .prior import _as_chw

ROW_SUM_TOL = 1e-5
DENSE_ORACLE_LIMIT = 4096


@dataclass(frozen=True)
class TransferMatrix:
    """CSR row-stochastic N×N matrix with at most k nonzeros per row.

    col_indices are strictly increasing within each row and all stored
    weights are strictly positive; each row sums to 1 within 1e-5.
    """

    n: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        ro, ci, w = self.row_offsets, self.col_indices, self.weights
        if ro.shape != (self.n + 1,) or ro[0] != 0 or ro[-1] != ci.size:
            raise ValueError("row_offsets inconsistent with col_indices")
        if ci.shape != w.shape:
            raise ValueError("col_indices and weights length mismatch")
        counts = np.diff(ro)
        if counts.min(initial=1) < 1:
            raise ValueError("every row needs at least one entry")
        if ci.size and (ci.min() < 0 or ci.max() >= self.n):
            raise ValueError("column index out of range")
        # strictly increasing inside each row (diffs at row starts exempt)
        if ci.size > 1:
            diffs = np.diff(ci.astype(np.int64))
            starts = np.zeros(ci.size - 1, dtype=bool)
            starts[ro[1:-1] - 1] = True
            if np.any(diffs[~starts] <= 0):
                raise ValueError("column indices must be strictly increasing per row")
        if w.dtype != np.float32 or np.any(w <= 0.0):
            raise ValueError("weights must be positive float32")
        sums = np.add.reduceat(w.astype(np.float64), ro[:-1])
        if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
            raise ValueError("rows must be stochastic within 1e-5")

    @property
    def nnz(self) -> int:
        return int(self.col_indices.size)

    def matvec(self, v) -> np.ndarray:
        """Raw product P·v in float64; v is any flat or H×W array of size n."""
        v64 = np.asarray(v, dtype=np.float64).ravel()
        if v64.size != self.n:
            raise ValueError(f"vector length {v64.size} != matrix size {self.n}")
        contrib = self.weights.astype(np.float64) * v64[self.col_indices]
        return np.add.reduceat(contrib, self.row_offsets[:-1])

    def to_dense(self) -> np.ndarray:
        if self.n > DENSE_ORACLE_LIMIT:
            raise ValueError(f"refusing to densify N={self.n} > {DENSE_ORACLE_LIMIT}")
        dense = np.zeros((self.n, self.n), dtype=np.float64)
        rows = np.repeat(np.arange(self.n), np.diff(self.row_offsets))
        dense[rows, self.col_indices] = self.weights.astype(np.float64)
        return dense


def _topk_columns(row: np.ndarray, kth: float, k: int) -> np.ndarray:
    """Columns of the k largest entries; ties at the cutoff value go to the
    lowest column indices. Returned sorted ascending."""
    greater = np.nonzero(row > kth)[0]
    need = k - greater.size
    if need > 0:
        equal = np.nonzero(row == kth)[0][:need]
        greater = np.concatenate([greater, equal])
    greater.sort()
    return greater


def build_transfer(f_q, k: int, t: float, block_rows: int = 512) -> TransferMatrix:
    """Build the sparse transfer matrix from query features.

    Scores are s_ij = <f_i, f_j> / t on the raw (unnormalized) feature
    vectors, computed blockwise in float64. Each row keeps its k largest
    scores and softmax-normalizes them (max-subtracted for overflow safety
    at small temperatures). Entries that round to zero in float32 are
    dropped, which matches the −∞ masking semantics of the dense form.
    """
    feats = _as_chw(f_q)
    c, h, w = feats.shape
    n = h * w
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > n:
        raise ValueError(f"k exceeds pixel count: k={k}, N_q={n}")
    if t <= 0.0:
        raise ValueError(f"temperature must be > 0, got {t}")

    x = feats.reshape(c, n).T.astype(np.float64)  # N×C
    all_cols: list[np.ndarray] = []
    all_weights: list[np.ndarray] = []
    counts = np.empty(n, dtype=np.int64)

    for start in range(0, n, block_rows):
        stop = min(start + block_rows, n)
        scores = (x[start:stop] @ x.T) / t  # b×N
        kth = np.partition(scores, n - k, axis=1)[:, n - k]
        for r in range(stop - start):
            cols = _topk_columns(scores[r], kth[r], k)
            s = scores[r, cols]
            s -= s.max()
            w_row = np.exp(s)
            w_row /= w_row.sum()
            w32 = w_row.astype(np.float32)
            keep = w32 > 0.0
            all_cols.append(cols[keep])
            all_weights.append(w32[keep])
            counts[start + r] = int(keep.sum())

    row_offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=row_offsets[1:])
    return TransferMatrix(
        n=n,
        row_offsets=row_offsets,
        col_indices=np.concatenate(all_cols),
        weights=np.concatenate(all_weights),
    )


def dense_transfer_oracle(f_q, k: int, t: float) -> np.ndarray:
    """Literal dense N×N construction: top-k mask to −∞, then row softmax.

    Float64 throughout; selection uses a stable descending argsort so ties
    resolve to the lowest column indices. Test/benchmark use only; refuses
    N above the oracle cap.
    """
    feats = _as_chw(f_q)
    c, h, w = feats.shape
    n = h * w
    if n > DENSE_ORACLE_LIMIT:
        raise ValueError(f"N_q={n} over dense oracle limit {DENSE_ORACLE_LIMIT}")
    if k < 1 or k > n:
        raise ValueError(f"k exceeds pixel count: k={k}, N_q={n}")
    if t <= 0.0:
        raise ValueError(f"temperature must be > 0, got {t}")

    x = feats.reshape(c, n).T.astype(np.float64)
    scores = (x @ x.T) / t
    order = np.argsort(-scores, axis=1, kind="stable")[:, :k]
    masked = np.full_like(scores, -np.inf)
    np.put_along_axis(masked, order, np.take_along_axis(scores, order, axis=1), axis=1)
    masked -= masked.max(axis=1, keepdims=True)
    p = np.exp(masked)
    p /= p.sum(axis=1, keepdims=True)
    return p


def spmv(p: TransferMatrix, m) -> Tensor:
    """Propagate a prior through the transfer matrix: out_i = Σ_j P_ij m_j.

    Rows are convex combinations, so the output stays in [0,1]; the clip
    only absorbs float32 row-sum rounding (≲2e-7).
    """
    values = m.values if isinstance(m, Prior) else (
        m.data if isinstance(m, Tensor) else np.asarray(m, dtype=np.float32)
    )
    if values.ndim != 2:
        raise ValueError(f"expected an H×W map, got shape {values.shape}")
    if values.size != p.n:
        raise ValueError(f"prior has {values.size} pixels, matrix expects {p.n}")
    out = p.matvec(values).reshape(values.shape)
    np.clip(out, 0.0, 1.0, out=out)
    return Tensor(np.ascontiguousarray(out, dtype=np.float32))


def transfer_to_tensor(p: TransferMatrix) -> Tensor:
    """Dense float32 dump of P for CMPT export (test scale only)."""
    return Tensor(p.to_dense().astype(np.float32))
