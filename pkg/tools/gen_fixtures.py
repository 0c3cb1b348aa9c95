#!/usr/bin/env python3
"""Regenerate the checked-in test fixtures under tests/data/.

The committed files let the full primary test suite run without the
extractor component being built. Deterministic given the seeds below.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from cmprior.core import BinaryMask, Tensor, write_mask_pgm, write_tensor  # noqa: E402
from cmprior.synthetic import two_blob_episode  # noqa: E402

OUT = Path(__file__).resolve().parents[1] / "tests" / "data"


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    ep = two_blob_episode(seed=7, side=12, channels=8)
    write_tensor(ep.support_features, OUT / "support_feat.cmpt")
    write_tensor(ep.query_features, OUT / "query_feat.cmpt")
    write_mask_pgm(ep.support_mask, OUT / "support_mask.pgm")
    write_mask_pgm(ep.query_gt, OUT / "gt_mask.pgm")

    # image-resolution variant (4x nearest upscale) to exercise area pooling
    big = np.repeat(np.repeat(ep.support_mask.values, 4, axis=0), 4, axis=1)
    write_mask_pgm(BinaryMask(big), OUT / "support_mask_48.pgm")

    # small deterministic tensor shared with the extractor's golden tests
    rng = np.random.default_rng(20240501)
    t = Tensor(rng.uniform(-2.0, 2.0, size=(3, 4, 5)).astype(np.float32))
    write_tensor(t, OUT / "golden_3x4x5.cmpt")
    print(f"fixtures written to {OUT}")


if __name__ == "__main__":
    main()
