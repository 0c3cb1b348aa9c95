"""Dual-prior assembly, binarization, K-shot fusion, and IoU-family metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import BinaryMask, Prior


@dataclass(frozen=True)
class DualPrior:
    """Foreground/background prior pair over the same grid."""

    foreground: Prior
    background: Prior

    def __post_init__(self):
        if self.foreground.shape != self.background.shape:
            raise ValueError(
                f"dual prior shapes disagree: {self.foreground.shape} "
                f"vs {self.background.shape}"
            )


def make_dual_prior(m_star: Prior, m_bg: Prior | None = None) -> DualPrior:
    """Pair the converged foreground prior with a background prior.

    Without an explicit background, the complement 1 − M* is used.
    """
    if m_bg is None:
        m_bg = Prior((1.0 - m_star.values).astype(np.float32))
    return DualPrior(foreground=m_star, background=m_bg)


def binarize(m: Prior, threshold: float = 0.5) -> BinaryMask:
    """Strictly-greater threshold: 1 where m > threshold."""
    if not (0.0 < threshold < 1.0):
        raise ValueError(f"threshold must be in (0,1), got {threshold}")
    return BinaryMask((m.values > np.float32(threshold)).astype(np.uint8))


def kshot_fuse(priors: Sequence[Prior]) -> Prior:
    """Pixelwise mean of K per-shot priors."""
    if len(priors) == 0:
        raise ValueError("kshot_fuse needs at least one prior")
    shape = priors[0].shape
    acc = np.zeros(shape, dtype=np.float64)
    for p in priors:
        if p.shape != shape:
            raise ValueError(f"prior shapes disagree: {p.shape} vs {shape}")
        acc += p.values
    return Prior((acc / len(priors)).astype(np.float32))


def iou(pred: BinaryMask, gt: BinaryMask) -> float:
    """Intersection over union; two empty masks agree perfectly (1.0)."""
    if pred.shape != gt.shape:
        raise ValueError(f"mask shapes disagree: {pred.shape} vs {gt.shape}")
    inter = int(np.count_nonzero(pred.values & gt.values))
    union = int(np.count_nonzero(pred.values | gt.values))
    if union == 0:
        return 1.0
    return inter / union


def fb_iou(pred: BinaryMask, gt: BinaryMask) -> float:
    """Mean of foreground IoU and background (complement) IoU."""
    return 0.5 * (iou(pred, gt) + iou(pred.complement(), gt.complement()))


@dataclass(frozen=True)
class EvalReport:
    """Per-class IoU (dataset-style accumulation), their mean, and FB-IoU."""

    per_class_iou: dict[int, float]
    miou: float
    fb_iou: float


def evaluate_episodes(
    episodes: Iterable[tuple[BinaryMask, BinaryMask, int]]
) -> EvalReport:
    """Aggregate (pred, gt, class_id) episodes into an evaluation report.

    Per-class IoU divides the class's summed intersections by its summed
    unions across episodes; miou is the unweighted mean over classes;
    fb_iou is averaged per episode.
    """
    episodes = list(episodes)
    if not episodes:
        raise ValueError("evaluate_episodes needs at least one episode")
    inter_by_class: dict[int, int] = {}
    union_by_class: dict[int, int] = {}
    fb_sum = 0.0
    for pred, gt, class_id in episodes:
        if pred.shape != gt.shape:
            raise ValueError(f"mask shapes disagree: {pred.shape} vs {gt.shape}")
        inter_by_class.setdefault(class_id, 0)
        union_by_class.setdefault(class_id, 0)
        inter_by_class[class_id] += int(np.count_nonzero(pred.values & gt.values))
        union_by_class[class_id] += int(np.count_nonzero(pred.values | gt.values))
        fb_sum += fb_iou(pred, gt)
    per_class = {
        cid: (inter_by_class[cid] / union_by_class[cid] if union_by_class[cid] else 1.0)
        for cid in sorted(inter_by_class)
    }
    miou = float(np.mean(list(per_class.values())))
    return EvalReport(per_class_iou=per_class, miou=miou, fb_iou=fb_sum / len(episodes))


def format_report(report: EvalReport) -> str:
    """Line-oriented serialization: class=<id> iou=<v> rows, then miou/fbiou."""
    lines = [f"class={cid} iou={v:.6f}" for cid, v in report.per_class_iou.items()]
    lines.append(f"miou={report.miou:.6f}")
    lines.append(f"fbiou={report.fb_iou:.6f}")
    return "\n".join(lines) + "\n"
