from pathlib import Path

import numpy as np
import pytest

from cmprior.graph import TransferMatrix

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


def identity_transfer(n: int) -> TransferMatrix:
    """k=1 self-loop rows: P = I."""
    return TransferMatrix(
        n=n,
        row_offsets=np.arange(n + 1, dtype=np.int64),
        col_indices=np.arange(n, dtype=np.int64),
        weights=np.ones(n, dtype=np.float32),
    )


def uniform_transfer(n: int) -> TransferMatrix:
    """Every row averages all pixels: P = 11ᵀ/n."""
    return TransferMatrix(
        n=n,
        row_offsets=np.arange(0, n * n + 1, n, dtype=np.int64),
        col_indices=np.tile(np.arange(n, dtype=np.int64), n),
        weights=np.full(n * n, 1.0 / n, dtype=np.float32),
    )
