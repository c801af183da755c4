"""Distance-based segmentation metrics with switchable implementation variants."""

from ._kernels import BACKEND
from .boundary import BoundaryMode, BoundarySet, extract, extract_pair
from .distance import DistanceField, DistanceSet, count_edt, directed_distances, edt
from .grid import GridMask, crop_joint, load_mask, resample_nn, save_mask
from .metrics import (
    METRICS,
    AssdMode,
    EdgePolicy,
    EmptyMaskError,
    HdpMode,
    MasdMode,
    MetricConfig,
    MetricResult,
    NsdMode,
    SpacingMode,
    compute_all,
)
from .oracle import oracle_all_metrics
from .presets import PRESET_NAMES, PRESETS, Preset, UnknownPresetError, evaluate, preset

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BoundaryMode", "BoundarySet", "extract", "extract_pair",
    "DistanceField", "DistanceSet", "count_edt", "directed_distances", "edt",
    "GridMask", "crop_joint", "load_mask", "resample_nn", "save_mask",
    "METRICS", "AssdMode", "EdgePolicy", "EmptyMaskError", "HdpMode", "MasdMode",
    "MetricConfig", "MetricResult", "NsdMode", "SpacingMode", "compute_all",
    "oracle_all_metrics", "PRESET_NAMES", "PRESETS", "Preset", "UnknownPresetError",
    "evaluate", "preset",
]
