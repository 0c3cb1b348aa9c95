"""Initial semantic prior: prototype pooling, cosine matching, normalization.

The pipeline is: pool the support features under the (soft) support mask
into a single class prototype, score every query pixel by cosine similarity
against it, then min-max normalize the score map into a [0,1] prior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EmptyMaskError, Prior, Tensor

EMPTY_MASK_EPS = 1e-12
ZERO_NORM_EPS = 1e-12
CONSTANT_RANGE_EPS = 1e-12


def _as_chw(f) -> np.ndarray:
    """Accept a Tensor or ndarray and return a C×H×W float32 view."""
    a = f.data if isinstance(f, Tensor) else np.asarray(f, dtype=np.float32)
    if a.ndim == 4 and a.shape[0] == 1:
        a = a[0]
    if a.ndim != 3:
        raise ValueError(f"feature map must be C×H×W, got shape {a.shape}")
    return a


def _as_hw(m) -> np.ndarray:
    a = m.values if isinstance(m, Prior) else np.asarray(m, dtype=np.float32)
    if a.ndim != 2:
        raise ValueError(f"mask must be H×W, got shape {a.shape}")
    return a.astype(np.float32, copy=False)


@dataclass(frozen=True)
class Prototype:
    """Mask-weighted mean feature vector of the target class."""

    channels: np.ndarray

    def __post_init__(self):
        c = self.channels
        if not isinstance(c, np.ndarray) or c.dtype != np.float32 or c.ndim != 1:
            raise ValueError("Prototype.channels must be a 1-D float32 ndarray")
        if not np.isfinite(c).all():
            raise ValueError("prototype contains non-finite values")
        if float(np.linalg.norm(c.astype(np.float64))) <= ZERO_NORM_EPS:
            raise ValueError("prototype is the zero vector; cosine similarity undefined")


def masked_average_pool(f_s, m_s) -> Prototype:
    """Pool support features under a soft mask into a class prototype.

    prototype[c] = sum_hw f_s[c,h,w] * m_s[h,w] / sum_hw m_s[h,w], with
    sums accumulated in float64.
    """
    feats = _as_chw(f_s)
    mask = _as_hw(m_s)
    if feats.shape[1:] != mask.shape:
        raise ValueError(
            f"support features {feats.shape[1:]} and mask {mask.shape} disagree"
        )
    m64 = mask.astype(np.float64)
    denom = m64.sum()
    if denom <= EMPTY_MASK_EPS:
        raise EmptyMaskError("empty support mask")
    pooled = np.tensordot(feats.astype(np.float64), m64, axes=([1, 2], [0, 1])) / denom
    return Prototype(pooled.astype(np.float32))


def cosine_prior(f_q, p: Prototype) -> Tensor:
    """Cosine similarity of every query pixel's feature against the prototype.

    Zero-norm query pixels score 0. Output is H×W in [-1, 1].
    """
    feats = _as_chw(f_q)
    proto = p.channels.astype(np.float64)
    if feats.shape[0] != proto.shape[0]:
        raise ValueError(
            f"channel mismatch: query has {feats.shape[0]}, prototype {proto.shape[0]}"
        )
    f64 = feats.astype(np.float64)
    dots = np.tensordot(proto, f64, axes=(0, 0))  # H×W
    norms = np.sqrt((f64 * f64).sum(axis=0))
    pnorm = np.linalg.norm(proto)
    sims = np.zeros_like(dots)
    ok = norms > ZERO_NORM_EPS
    sims[ok] = dots[ok] / (norms[ok] * pnorm)
    np.clip(sims, -1.0, 1.0, out=sims)
    return Tensor(np.ascontiguousarray(sims, dtype=np.float32))


def minmax_normalize(raw) -> Prior:
    """Rescale a raw score map to span [0, 1]; constant maps become all-zero."""
    a = raw.data if isinstance(raw, Tensor) else np.asarray(raw, dtype=np.float32)
    if a.ndim != 2:
        raise ValueError(f"expected H×W map, got shape {a.shape}")
    a64 = a.astype(np.float64)
    lo = a64.min()
    hi = a64.max()
    if hi - lo <= CONSTANT_RANGE_EPS:
        return Prior(np.zeros(a.shape, dtype=np.float32))
    out = (a64 - lo) / (hi - lo)
    return Prior(np.ascontiguousarray(out, dtype=np.float32))


def initial_prior(f_s, m_s, f_q) -> Prior:
    """Compose pooling, cosine matching and normalization into the initial prior."""
    return minmax_normalize(cosine_prior(f_q, masked_average_pool(f_s, m_s)))


# ---------------------------------------------------------------------------
# Mask resampling to feature resolution
# ---------------------------------------------------------------------------


def _overlap_weights(n_in: int, n_out: int) -> np.ndarray:
    """Row-stochastic n_out×n_in matrix of box-overlap fractions.

    Each output cell covers [i*n_in/n_out, (i+1)*n_in/n_out) of the input
    axis; weights are the fractional overlaps with each input cell.
    """
    w = np.zeros((n_out, n_in), dtype=np.float64)
    scale = n_in / n_out
    for i in range(n_out):
        start = i * scale
        stop = (i + 1) * scale
        j0 = int(np.floor(start))
        j1 = min(int(np.ceil(stop)), n_in)
        for j in range(j0, j1):
            w[i, j] = min(stop, j + 1) - max(start, j)
    w /= w.sum(axis=1, keepdims=True)
    return w


def area_resample(values: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Area-average resample an H×W map to out_h×out_w (float32).

    Exact block means for integer downscale factors; preserves constants and
    the value range for any factor. Used to bring image-resolution support
    masks down to feature resolution while keeping fractional coverage.
    """
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected H×W map, got shape {a.shape}")
    if out_h < 1 or out_w < 1:
        raise ValueError("output size must be positive")
    if a.shape == (out_h, out_w):
        return a.astype(np.float32)
    wh = _overlap_weights(a.shape[0], out_h)
    ww = _overlap_weights(a.shape[1], out_w)
    return (wh @ a @ ww.T).astype(np.float32)


def mask_to_feature_prior(mask, feat_h: int, feat_w: int) -> Prior:
    """Soft prior at feature resolution from a (possibly larger) binary mask."""
    values = mask.values.astype(np.float32) if hasattr(mask, "values") else np.asarray(
        mask, dtype=np.float32
    )
    return Prior(np.clip(area_resample(values, feat_h, feat_w), 0.0, 1.0))
