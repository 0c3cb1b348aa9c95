"""The committed extraction golden matches a fresh stub run bit for bit."""

from pathlib import Path

import numpy as np

from featextract.backbones import stub_features
from featextract.tensorfile import write_cmpt

DATA = Path(__file__).parent / "data"


def test_stub_golden_regenerates_identically(tmp_path):
    img = np.zeros((24, 24, 3), dtype=np.uint8)
    img[:, :12] = (220, 40, 40)
    img[:, 12:] = (40, 40, 220)
    img[20:, :, 1] = np.linspace(0, 255, 24, dtype=np.uint8)
    out = tmp_path / "fresh.cmpt"
    write_cmpt(stub_features(img, 6, 6), out)
    assert out.read_bytes() == (DATA / "stub_feat_3x6x6.cmpt").read_bytes()
