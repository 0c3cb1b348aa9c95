"""Extraction jobs: image (+ optional mask) to CMPT features and PGM masks."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .backbones import get_backbone
from .pgm import read_pgm, write_pgm
from .resample import area_average
from .tensorfile import write_cmpt


@dataclass(frozen=True)
class ExtractJob:
    image: str
    out_feat: str
    feat_h: int
    feat_w: int
    mask: str | None = None
    out_mask: str | None = None
    backbone: str = "stub"

    def __post_init__(self):
        if self.feat_h < 1 or self.feat_w < 1:
            raise ValueError("feature resolution must be positive")
        if self.mask and not self.out_mask:
            raise ValueError("a mask input needs --out-mask")


def _load_image(path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def _load_mask(path) -> np.ndarray:
    p = str(path)
    if p.endswith(".pgm"):
        return read_pgm(p)
    with Image.open(p) as img:
        return (np.asarray(img.convert("L")) >= 128).astype(np.uint8)


def extract(job: ExtractJob) -> None:
    """Run the backbone and write every requested artifact.

    Features go to `out_feat` as CMPT C×H_s×W_s. A mask, when given, is
    area-averaged to feature resolution and written twice: thresholded PGM
    at `out_mask` and the soft coverage map as CMPT next to it (same stem,
    .cmpt suffix).
    """
    image = _load_image(job.image)
    backbone = get_backbone(job.backbone)
    feats = backbone(image, job.feat_h, job.feat_w)
    if feats.shape[1:] != (job.feat_h, job.feat_w):
        raise RuntimeError(
            f"backbone returned grid {feats.shape[1:]}, expected "
            f"{(job.feat_h, job.feat_w)}"
        )
    if not np.isfinite(feats).all():
        raise RuntimeError("backbone produced non-finite features")
    write_cmpt(feats, job.out_feat)

    if job.mask:
        soft = area_average(_load_mask(job.mask).astype(np.float64), job.feat_h, job.feat_w)
        soft = np.clip(soft, 0.0, 1.0)
        write_pgm((soft > 0.5).astype(np.uint8), job.out_mask)
        write_cmpt(soft[None, :, :], Path(job.out_mask).with_suffix(".cmpt"))
