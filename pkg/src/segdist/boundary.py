"""Query-point extraction from masks.

Points are stored as integer coordinates in half-element units
(``half_index``): element centres sit at even coordinates and faces between
neighbouring elements at odd ones. Physical positions are
``half_index * spacing / 2``, with the centre of element (0, ..., 0) at the
origin.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .grid import GridMask, check_same_grid


class BoundaryMode(str, Enum):
    ERODE_FACE = "erode_face"
    ERODE_FULL = "erode_full"
    INTERFACE = "interface"
    FOREGROUND_ALL = "foreground_all"
    FOREGROUND_NON_OVERLAP = "foreground_non_overlap"

    @property
    def weighted(self) -> bool:
        return self is BoundaryMode.INTERFACE

    @property
    def on_centres(self) -> bool:
        return self is not BoundaryMode.INTERFACE


@dataclass(frozen=True, eq=False)
class BoundarySet:
    half_index: np.ndarray  # (n, ndim) int64
    weights: np.ndarray  # (n,) float64, all > 0
    spacing: tuple[float, ...]

    def __post_init__(self):
        hi = np.asarray(self.half_index, dtype=np.int64).reshape(-1, len(self.spacing))
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if len(hi) != len(w):
            raise ValueError(f"{len(hi)} points but {len(w)} weights")
        if w.size and not (w > 0).all():
            raise ValueError("boundary weights must be positive")
        hi.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "half_index", hi)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.weights)

    @property
    def ndim(self) -> int:
        return len(self.spacing)

    @property
    def points(self) -> np.ndarray:
        """Physical coordinates in mm, shape (n, ndim)."""
        return self.half_index * (np.asarray(self.spacing) / 2.0)

    @property
    def on_centres(self) -> bool:
        return bool((self.half_index % 2 == 0).all())

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def shifted(self, offset) -> BoundarySet:
        """Translate by ``offset`` whole elements per axis."""
        return BoundarySet(self.half_index + 2 * np.asarray(offset, dtype=np.int64),
                           self.weights, self.spacing)


def _centres(data: np.ndarray, spacing) -> BoundarySet:
    idx = np.argwhere(data)
    return BoundarySet(2 * idx, np.ones(len(idx)), tuple(spacing))


def structuring_offsets(ndim: int, connectivity: str) -> list[tuple[int, ...]]:
    """Offsets of the 3^d structuring element ('face' = cross, 'full' = box)."""
    if connectivity not in ("face", "full"):
        raise ValueError(f"connectivity must be 'face' or 'full', got {connectivity!r}")
    offsets = []
    for off in itertools.product((-1, 0, 1), repeat=ndim):
        if connectivity == "face" and sum(map(abs, off)) > 1:
            continue
        offsets.append(off)
    return offsets


def erode(data: np.ndarray, connectivity: str) -> np.ndarray:
    """Binary erosion with outside-grid treated as background."""
    padded = np.pad(data, 1, constant_values=False)
    out = np.ones(data.shape, dtype=bool)
    for off in structuring_offsets(data.ndim, connectivity):
        sl = tuple(slice(1 + o, 1 + o + n) for o, n in zip(off, data.shape))
        out &= padded[sl]
    return out


def boundary_mask(data: np.ndarray, connectivity: str) -> np.ndarray:
    return data & ~erode(data, connectivity)


def extract_erode(mask: GridMask, connectivity: str = "face") -> BoundarySet:
    return _centres(boundary_mask(mask.data, connectivity), mask.spacing)


def extract_foreground(mask: GridMask) -> BoundarySet:
    return _centres(mask.data, mask.spacing)


def face_weights(spacing) -> np.ndarray:
    """Physical measure of a face normal to each axis (length in 2D, area in 3D)."""
    spacing = np.asarray(spacing, dtype=np.float64)
    return np.array([np.prod(np.delete(spacing, k)) for k in range(len(spacing))])


def extract_interface(mask: GridMask) -> BoundarySet:
    """One point per foreground/background face, weighted by the face measure."""
    data = mask.data
    padded = np.pad(data, 1, constant_values=False)
    measures = face_weights(mask.spacing)
    chunks, weights = [], []
    for axis in range(data.ndim):
        for step in (-1, 1):
            sl = tuple(
                slice(1 + step, 1 + step + n) if k == axis else slice(1, 1 + n)
                for k, n in enumerate(data.shape)
            )
            idx = np.argwhere(data & ~padded[sl])
            hi = 2 * idx
            hi[:, axis] += step
            chunks.append(hi)
            weights.append(np.full(len(idx), measures[axis]))
    return BoundarySet(np.concatenate(chunks), np.concatenate(weights), mask.spacing)


def extract(mask: GridMask, mode: BoundaryMode) -> BoundarySet:
    mode = BoundaryMode(mode)
    if mode is BoundaryMode.ERODE_FACE:
        return extract_erode(mask, "face")
    if mode is BoundaryMode.ERODE_FULL:
        return extract_erode(mask, "full")
    if mode is BoundaryMode.INTERFACE:
        return extract_interface(mask)
    if mode is BoundaryMode.FOREGROUND_ALL:
        return extract_foreground(mask)
    raise ValueError(f"{mode.value} needs both masks; use extract_pair")


def extract_pair(a: GridMask, b: GridMask, mode: BoundaryMode) -> tuple[BoundarySet, BoundarySet]:
    """Query sets for both masks.

    ``FOREGROUND_NON_OVERLAP`` keeps only elements outside the other mask; all
    other modes extract each mask independently.
    """
    check_same_grid(a, b)
    mode = BoundaryMode(mode)
    if mode is BoundaryMode.FOREGROUND_NON_OVERLAP:
        return (_centres(a.data & ~b.data, a.spacing),
                _centres(b.data & ~a.data, b.spacing))
    return extract(a, mode), extract(b, mode)


def target_set(mask: GridMask, query: BoundarySet, mode: BoundaryMode) -> BoundarySet:
    """Points that distances *to* ``mask`` are measured against.

    For ``FOREGROUND_NON_OVERLAP`` this is the whole foreground (the
    overlapping elements only drop out of the query side); otherwise it is the
    query set itself.
    """
    if BoundaryMode(mode) is BoundaryMode.FOREGROUND_NON_OVERLAP:
        return extract_foreground(mask)
    return query
