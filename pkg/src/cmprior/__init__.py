"""Contraction-mapping position-prior optimization for few-shot segmentation.

From pre-extracted feature tensors and a support mask this package builds an
initial semantic prior, refines it by an anchored fixed-point iteration over
a sparse pixel-similarity graph (with a certified contraction condition),
and emits binarized masks, K-shot fusions, losses and IoU metrics.
"""

from .core import (
    BinaryMask,
    ContractionError,
    EmptyMaskError,
    FormatError,
    Prior,
    SolverConfig,
    Tensor,
    read_mask_pgm,
    read_tensor,
    write_mask_pgm,
    write_tensor,
)
from .episodes import EpisodeResult, EpisodeSpec, parse_episode_spec, run_episode
from .fusion import (
    DualPrior,
    EvalReport,
    binarize,
    evaluate_episodes,
    fb_iou,
    format_report,
    iou,
    kshot_fuse,
    make_dual_prior,
)
from .graph import TransferMatrix, build_transfer, dense_transfer_oracle, spmv
from .losses import LossValue, bce_loss, dice_loss, total_loss
from .prior import (
    Prototype,
    area_resample,
    cosine_prior,
    initial_prior,
    masked_average_pool,
    mask_to_feature_prior,
    minmax_normalize,
)
from .solver import (
    FixedPrior,
    SolverTrace,
    iterate_once,
    normalize_g,
    solve_fixed_point,
    write_trace_csv,
)

__version__ = "0.1.0"

__all__ = [
    "BinaryMask",
    "ContractionError",
    "DualPrior",
    "EmptyMaskError",
    "EpisodeResult",
    "EpisodeSpec",
    "EvalReport",
    "FixedPrior",
    "FormatError",
    "LossValue",
    "Prior",
    "Prototype",
    "SolverConfig",
    "SolverTrace",
    "Tensor",
    "TransferMatrix",
    "area_resample",
    "bce_loss",
    "binarize",
    "build_transfer",
    "cosine_prior",
    "dense_transfer_oracle",
    "dice_loss",
    "evaluate_episodes",
    "fb_iou",
    "format_report",
    "initial_prior",
    "iou",
    "iterate_once",
    "kshot_fuse",
    "make_dual_prior",
    "mask_to_feature_prior",
    "masked_average_pool",
    "minmax_normalize",
    "normalize_g",
    "parse_episode_spec",
    "read_mask_pgm",
    "read_tensor",
    "run_episode",
    "solve_fixed_point",
    "spmv",
    "total_loss",
    "write_mask_pgm",
    "write_tensor",
    "write_trace_csv",
]
