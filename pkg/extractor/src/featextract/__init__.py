"""Image-to-feature-grid extraction adapter for the prior-optimization toolchain."""

from .backbones import BACKBONES, BackboneUnavailableError, stub_features
from .extract import ExtractJob, extract
from .pgm import read_pgm, write_pgm
from .resample import area_average
from .tensorfile import TensorFileError, read_cmpt, write_cmpt

__version__ = "0.1.0"

__all__ = [
    "BACKBONES",
    "BackboneUnavailableError",
    "ExtractJob",
    "TensorFileError",
    "area_average",
    "extract",
    "read_cmpt",
    "read_pgm",
    "stub_features",
    "write_cmpt",
    "write_pgm",
]
