"""Binary masks on regular 2D/3D grids: representation, file IO, resampling, cropping."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

RAW_SUFFIX = ".raw"


class MaskFormatError(ValueError):
    """Raised for malformed header/raw mask file pairs."""


@dataclass(frozen=True, eq=False)
class GridMask:
    """Binary mask with per-axis physical element size in mm.

    ``spacing[k]`` is the element size along array axis ``k``. The data array is
    stored read-only so masks can be shared between workers.
    """

    data: np.ndarray
    spacing: tuple[float, ...]
    label: str | None = None

    def __post_init__(self):
        data = np.array(self.data, dtype=bool, order="C", copy=True)
        if data.ndim not in (2, 3):
            raise ValueError(f"mask must be 2D or 3D, got {data.ndim}D")
        if any(n < 1 for n in data.shape):
            raise ValueError(f"all dims must be positive, got {data.shape}")
        spacing = tuple(float(s) for s in self.spacing)
        if len(spacing) != data.ndim:
            raise ValueError(f"spacing {spacing} does not match {data.ndim}D data")
        if not all(s > 0 and math.isfinite(s) for s in spacing):
            raise ValueError(f"spacing components must be positive, got {spacing}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "spacing", spacing)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.data))

    @property
    def empty(self) -> bool:
        return not self.data.any()

    def with_spacing(self, spacing: Sequence[float]) -> GridMask:
        return GridMask(self.data, tuple(spacing), self.label)

    def __eq__(self, other):
        if not isinstance(other, GridMask):
            return NotImplemented
        return (
            self.spacing == other.spacing
            and self.dims == other.dims
            and bool(np.array_equal(self.data, other.data))
        )

    def __repr__(self):
        return f"GridMask(dims={self.dims}, spacing={self.spacing}, count={self.count})"


def same_grid(a: GridMask, b: GridMask) -> bool:
    return a.dims == b.dims and a.spacing == b.spacing


def check_same_grid(a: GridMask, b: GridMask) -> None:
    if not same_grid(a, b):
        raise ValueError(
            f"masks must share a grid: {a.dims}@{a.spacing} vs {b.dims}@{b.spacing}"
        )


# ---------------------------------------------------------------------------
# file IO

def raw_path_for(header_path: str | os.PathLike) -> Path:
    return Path(header_path).with_suffix(RAW_SUFFIX)


def _format_float(x: float) -> str:
    return repr(float(x))


def _parse_header(text: str, path) -> dict:
    fields = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise MaskFormatError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        fields[key.strip()] = value.strip()
    for key in ("dims", "spacing", "dtype", "order"):
        if key not in fields:
            raise MaskFormatError(f"{path}: missing header key {key!r}")
    if fields["dtype"] != "uint8":
        raise MaskFormatError(f"{path}: dtype must be 'uint8', got {fields['dtype']!r}")
    if fields["order"] != "C":
        raise MaskFormatError(f"{path}: order must be 'C', got {fields['order']!r}")
    try:
        dims = tuple(int(v) for v in fields["dims"].split())
        spacing = tuple(float(v) for v in fields["spacing"].split())
    except ValueError as exc:
        raise MaskFormatError(f"{path}: {exc}") from None
    if len(dims) not in (2, 3) or len(spacing) != len(dims):
        raise MaskFormatError(f"{path}: dims {dims} / spacing {spacing} must both have 2 or 3 entries")
    return {"dims": dims, "spacing": spacing, "label": fields.get("label")}


def load_mask(header_path: str | os.PathLike, strict: bool = True) -> GridMask:
    """Read a mask from a header file and its companion ``.raw`` file.

    In strict mode every raw byte must be 0 or 1; otherwise any nonzero byte is
    foreground.
    """
    header_path = Path(header_path)
    if not header_path.is_file():
        raise FileNotFoundError(f"mask header not found: {header_path}")
    header = _parse_header(header_path.read_text(), header_path)
    raw_path = raw_path_for(header_path)
    if not raw_path.is_file():
        raise FileNotFoundError(f"mask raw file not found: {raw_path}")
    raw = np.fromfile(raw_path, dtype=np.uint8)
    expected = math.prod(header["dims"])
    if raw.size != expected:
        raise MaskFormatError(
            f"{raw_path}: expected {expected} bytes for dims {header['dims']}, got {raw.size}"
        )
    if strict:
        bad = np.flatnonzero(raw > 1)
        if bad.size:
            i = int(bad[0])
            raise MaskFormatError(f"{raw_path}: byte {i} has value {raw[i]}, expected 0 or 1")
    return GridMask(raw.reshape(header["dims"]) != 0, header["spacing"], header["label"])


def save_mask(mask: GridMask, header_path: str | os.PathLike) -> None:
    header_path = Path(header_path)
    lines = [
        "dims = " + " ".join(str(n) for n in mask.dims),
        "spacing = " + " ".join(_format_float(s) for s in mask.spacing),
        "dtype = uint8",
        "order = C",
    ]
    if mask.label:
        lines.append(f"label = {mask.label}")
    header_path.write_text("\n".join(lines) + "\n")
    mask.data.astype(np.uint8).tofile(raw_path_for(header_path))


# ---------------------------------------------------------------------------
# resampling

def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def resampled_dims(dims: Sequence[int], spacing: Sequence[float], target: Sequence[float]) -> tuple[int, ...]:
    return tuple(max(1, _round_half_up(n * s / t)) for n, s, t in zip(dims, spacing, target))


def _nearest_source_index(n_out: int, n_in: int, s_in: float, t_out: float) -> np.ndarray:
    # Grids share their outer corner; positions are in input-index units.
    x = (np.arange(n_out) + 0.5) * t_out / s_in - 0.5
    # ceil(x - 0.5) picks the lower index on exact midpoints
    idx = np.ceil(x - 0.5).astype(np.int64)
    return np.clip(idx, 0, n_in - 1)


def resample_nn(mask: GridMask, target_spacing: Sequence[float]) -> GridMask:
    """Nearest-neighbour resampling to ``target_spacing`` (mm per axis)."""
    target = tuple(float(t) for t in target_spacing)
    if len(target) != mask.ndim:
        raise ValueError(f"target spacing {target} does not match {mask.ndim}D mask")
    if not all(t > 0 and math.isfinite(t) for t in target):
        raise ValueError(f"target spacing components must be positive, got {target}")
    if target == mask.spacing:
        return mask
    out_dims = resampled_dims(mask.dims, mask.spacing, target)
    index = [
        _nearest_source_index(n_out, n_in, s, t)
        for n_out, n_in, s, t in zip(out_dims, mask.dims, mask.spacing, target)
    ]
    return GridMask(mask.data[np.ix_(*index)], target, mask.label)


# ---------------------------------------------------------------------------
# cropping

class Crop(NamedTuple):
    a: GridMask
    b: GridMask
    offset: tuple[int, ...]

    @property
    def empty(self) -> bool:
        return self.a.empty and self.b.empty


def bounding_box(data: np.ndarray) -> tuple[tuple[int, int], ...] | None:
    """Inclusive-exclusive ``(lo, hi)`` per axis of the nonzero region, or None."""
    if not data.any():
        return None
    box = []
    for axis in range(data.ndim):
        other = tuple(k for k in range(data.ndim) if k != axis)
        hits = np.flatnonzero(data.any(axis=other))
        box.append((int(hits[0]), int(hits[-1]) + 1))
    return tuple(box)


def crop_joint(a: GridMask, b: GridMask, margin: int = 1) -> Crop:
    """Crop both masks to the union of their foreground boxes plus ``margin``.

    With two empty masks a single-element crop at the origin is returned
    (``Crop.empty`` is then True).
    """
    check_same_grid(a, b)
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    box = bounding_box(a.data | b.data)
    if box is None:
        one = (slice(0, 1),) * a.ndim
        return Crop(GridMask(a.data[one], a.spacing, a.label),
                    GridMask(b.data[one], b.spacing, b.label),
                    (0,) * a.ndim)
    sl = tuple(
        slice(max(0, lo - margin), min(n, hi + margin))
        for (lo, hi), n in zip(box, a.dims)
    )
    return Crop(GridMask(a.data[sl], a.spacing, a.label),
                GridMask(b.data[sl], b.spacing, b.label),
                tuple(s.start for s in sl))
