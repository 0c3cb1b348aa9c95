#!/usr/bin/env python3
"""Regenerate the extractor-written golden CMPT used for cross-component checks.

The output is committed here and copied into the consumer package's test
data so its suite can verify it reads our bytes without this package
installed. Deterministic.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from featextract.backbones import stub_features  # noqa: E402
from featextract.tensorfile import write_cmpt  # noqa: E402

OUT = Path(__file__).resolve().parents[1] / "tests" / "data"


def main() -> None:
    # two constant color regions plus a gradient strip, 24x24 RGB
    img = np.zeros((24, 24, 3), dtype=np.uint8)
    img[:, :12] = (220, 40, 40)
    img[:, 12:] = (40, 40, 220)
    img[20:, :, 1] = np.linspace(0, 255, 24, dtype=np.uint8)
    feats = stub_features(img, 6, 6)
    path = OUT / "stub_feat_3x6x6.cmpt"
    write_cmpt(feats, path)
    print(f"golden written to {path}")


if __name__ == "__main__":
    main()
