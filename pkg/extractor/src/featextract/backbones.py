"""Feature backbones: an offline identity-patch stub plus a torch-hub ViT.

The stub needs no weights or network and exists so every test can run
offline; the real backbone path loads a self-supervised ViT from the local
torch hub cache and refuses (with the expected path in the message) rather
than downloading anything.
"""

from __future__ import annotations

import numpy as np


class BackboneUnavailableError(RuntimeError):
    """Named backbone cannot run here; message says what to install where."""


def stub_features(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Identity-patch stub: per-channel area average over the output grid.

    image is H×W×C uint8 (or float in [0,255]); features are the patch mean
    colors scaled to [0,1], so C equals the image channel count and constant
    regions yield constant feature vectors.
    """
    from .resample import area_average

    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    channels = [
        area_average(img[:, :, c], out_h, out_w) for c in range(img.shape[2])
    ]
    return (np.stack(channels, axis=0) / 255.0).astype(np.float32)


_DINO_REPO = "facebookresearch_dinov2_main"
_DINO_MODEL = "dinov2_vitb14"
_PATCH = 14


def dinov2_features(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Patch tokens from a locally cached DINOv2 ViT-B/14.

    The image is resized so the patch grid is exactly out_h×out_w. Never
    downloads: a missing local hub checkout raises BackboneUnavailableError
    naming the expected path.
    """
    try:
        import torch
    except ImportError as exc:
        raise BackboneUnavailableError(
            "backbone 'dinov2' needs torch (pip install featextract[torch])"
        ) from exc

    from pathlib import Path

    repo_dir = Path(torch.hub.get_dir()) / _DINO_REPO
    if not repo_dir.exists():
        raise BackboneUnavailableError(
            f"backbone weights not found; expected a local torch hub checkout at "
            f"{repo_dir} (run torch.hub.load('facebookresearch/dinov2', "
            f"'{_DINO_MODEL}') once on a networked machine, or use --backbone stub)"
        )
    model = torch.hub.load(str(repo_dir), _DINO_MODEL, source="local")
    model.eval()

    img = np.asarray(image, dtype=np.float32)
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    mean = np.array([0.485, 0.456, 0.406], dtype=np.float32) * 255.0
    std = np.array([0.229, 0.224, 0.225], dtype=np.float32) * 255.0
    x = torch.from_numpy(((img - mean) / std).transpose(2, 0, 1)[None])
    x = torch.nn.functional.interpolate(
        x, size=(out_h * _PATCH, out_w * _PATCH), mode="bilinear", align_corners=False
    )
    with torch.no_grad():
        tokens = model.forward_features(x)["x_norm_patchtokens"]
    feats = tokens[0].reshape(out_h, out_w, -1).permute(2, 0, 1).numpy()
    return np.ascontiguousarray(feats, dtype=np.float32)


BACKBONES = {
    "stub": stub_features,
    "dinov2": dinov2_features,
}


def get_backbone(name: str):
    try:
        return BACKBONES[name]
    except KeyError:
        raise BackboneUnavailableError(
            f"unknown backbone {name!r}; available: {', '.join(sorted(BACKBONES))}"
        ) from None
