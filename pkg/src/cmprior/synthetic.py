"""Seeded synthetic inputs: random solver instances and two-blob episodes.

Used by the benchmark harness and the test suite. Feature vectors are drawn
unit-norm (realistic embedding scale): with raw gaussian features the
self-similarity term dominates every row at temperature 0.1 and the
transfer matrix degenerates to identity, which would leave the propagation
path unexercised.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BinaryMask, Prior, Tensor


def unit_features(channels: int, height: int, width: int, rng: np.random.Generator) -> Tensor:
    """C×H×W feature map of unit-norm gaussian vectors."""
    f = rng.standard_normal((channels, height, width))
    norms = np.sqrt((f * f).sum(axis=0, keepdims=True))
    norms[norms == 0.0] = 1.0
    return Tensor((f / norms).astype(np.float32))


def spanning_prior(height: int, width: int, rng: np.random.Generator) -> Prior:
    """Random prior min-max normalized to span [0, 1] exactly."""
    v = rng.standard_normal((height, width))
    v = (v - v.min()) / (v.max() - v.min())
    return Prior(v.astype(np.float32))


def random_instance(
    seed: int, channels: int = 32, side: int | None = None
) -> tuple[Tensor, Prior]:
    """One (query features, initial prior) pair; side cycles 8..64 with the seed."""
    sides = (8, 12, 16, 24, 32, 48, 64)
    if side is None:
        side = sides[seed % len(sides)]
    rng = np.random.default_rng(seed)
    return unit_features(channels, side, side, rng), spanning_prior(side, side, rng)


def _ellipse_mask(
    height: int, width: int, cy: float, cx: float, ry: float, rx: float
) -> np.ndarray:
    yy, xx = np.mgrid[0:height, 0:width]
    return (((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0).astype(np.uint8)


@dataclass(frozen=True)
class BlobEpisode:
    """Synthetic support/query pair with clustered features and blob masks."""

    support_features: Tensor
    support_mask: BinaryMask
    query_features: Tensor
    query_gt: BinaryMask


def two_blob_episode(
    seed: int,
    side: int = 20,
    channels: int = 16,
    noise: float = 0.15,
    angle_deg: float = 70.0,
) -> BlobEpisode:
    """Foreground/background feature clusters with an elliptical target blob.

    Support and query share the cluster centers but place the blob at
    different positions and sizes; per-pixel features are unit-normalized
    cluster centers plus gaussian noise. The defaults put the cluster
    centers 70 degrees apart with noise that leaves a populated borderline
    band around the binarization threshold: the initial prior is informative
    but imperfect, and structural propagation has something to repair.
    """
    rng = np.random.default_rng(seed)
    mu_fg = rng.standard_normal(channels)
    mu_fg /= np.linalg.norm(mu_fg)
    # background center at a controlled angle from the foreground one
    orth = rng.standard_normal(channels)
    orth -= mu_fg * (orth @ mu_fg)
    orth /= np.linalg.norm(orth)
    theta = np.deg2rad(angle_deg)
    mu_bg = np.cos(theta) * mu_fg + np.sin(theta) * orth

    def blob(low_r: float, high_r: float) -> np.ndarray:
        ry = rng.uniform(low_r, high_r) * side
        rx = rng.uniform(low_r, high_r) * side
        cy = rng.uniform(ry, side - ry)
        cx = rng.uniform(rx, side - rx)
        return _ellipse_mask(side, side, cy, cx, ry, rx)

    def clustered_features(mask: np.ndarray) -> Tensor:
        base = np.where(mask[None, :, :] > 0, mu_fg[:, None, None], mu_bg[:, None, None])
        f = base + noise * rng.standard_normal((channels, side, side))
        norms = np.sqrt((f * f).sum(axis=0, keepdims=True))
        return Tensor((f / norms).astype(np.float32))

    support_mask = blob(0.18, 0.32)
    query_gt = blob(0.18, 0.32)
    return BlobEpisode(
        support_features=clustered_features(support_mask),
        support_mask=BinaryMask(support_mask),
        query_features=clustered_features(query_gt),
        query_gt=BinaryMask(query_gt),
    )
