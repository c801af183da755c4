"""Exact anisotropic distance fields and directed distance sets."""

from __future__ import annotations

import contextlib
import contextvars
from collections import Counter
from dataclasses import dataclass

import numpy as np

from ._kernels import squared_edt
from .boundary import BoundarySet

_EDT_COUNTER: contextvars.ContextVar[Counter | None] = contextvars.ContextVar(
    "segdist_edt_counter", default=None
)


@contextlib.contextmanager
def count_edt():
    """Count EDT evaluations by kind ('boundary', 'band') inside the block."""
    counter = Counter()
    token = _EDT_COUNTER.set(counter)
    try:
        yield counter
    finally:
        _EDT_COUNTER.reset(token)


def _tally(kind):
    counter = _EDT_COUNTER.get()
    if counter is not None:
        counter[kind] += 1


@dataclass(frozen=True, eq=False)
class DistanceField:
    """Distances (mm) on a lattice of points.

    Lattice element ``j`` sits at half-index ``origin + step * j`` per axis
    (see :mod:`segdist.boundary`); ``step=2, origin=0`` is the element grid and
    ``step=1, origin=-1`` the half-shifted lattice that also holds faces.
    """

    values: np.ndarray
    spacing: tuple[float, ...]
    origin: int = 0
    step: int = 2

    @property
    def dims(self):
        return self.values.shape

    @property
    def empty_source(self) -> bool:
        return bool(np.isinf(self.values).all())

    def sample(self, half_index: np.ndarray) -> np.ndarray:
        rel = np.asarray(half_index) - self.origin
        if (rel % self.step).any():
            raise ValueError("query points do not lie on the distance-field lattice; use exact mode")
        idx = rel // self.step
        if len(idx) and ((idx < 0).any() or (idx >= np.array(self.dims)).any()):
            raise ValueError("query points fall outside the distance field")
        return self.values[tuple(idx.T)]


def edt(source, dims=None, spacing=None, *, lattice="element", kind="boundary") -> DistanceField:
    """Exact Euclidean distance field to ``source``.

    ``source`` is either a boolean array on the element grid (``spacing``
    required) or a :class:`BoundarySet` (``dims`` required). ``lattice`` picks
    the element grid or the half-shifted lattice, which is needed when the
    source or query points lie on faces. An empty source gives an all-inf
    field.
    """
    if isinstance(source, BoundarySet):
        spacing = source.spacing
        if dims is None:
            raise ValueError("dims required for point-set sources")
        dims = tuple(int(n) for n in dims)
        if lattice == "element":
            origin, step, shape = 0, 2, dims
        elif lattice == "half":
            origin, step, shape = -1, 1, tuple(2 * n + 1 for n in dims)
        else:
            raise ValueError(f"unknown lattice {lattice!r}")
        grid = np.zeros(shape, dtype=bool)
        if len(source):
            rel = source.half_index - origin
            if (rel % step).any():
                raise ValueError("source points do not lie on the requested lattice")
            grid[tuple((rel // step).T)] = True
    else:
        grid = np.asarray(source, dtype=bool)
        if spacing is None:
            raise ValueError("spacing required for array sources")
        spacing = tuple(float(s) for s in spacing)
        if lattice != "element":
            raise ValueError("array sources live on the element grid")
        origin, step = 0, 2
    lattice_spacing = tuple(s * step / 2.0 for s in spacing)
    _tally(kind)
    values = np.sqrt(squared_edt(grid, lattice_spacing))
    values.setflags(write=False)
    return DistanceField(values, tuple(spacing), origin, step)


@dataclass(frozen=True, eq=False)
class DistanceSet:
    """Directed nearest-neighbour distances with the query points' weights.

    ``mask_empty`` records whether the mask the queries came from had no
    foreground; an empty distance list from a nonempty mask (all of its
    elements overlap the other mask) is a legitimate zero-distance case.
    """

    distances: np.ndarray
    weights: np.ndarray
    direction: str = "AB"
    mask_empty: bool | None = None

    def __post_init__(self):
        d = np.asarray(self.distances, dtype=np.float64).reshape(-1)
        w = (np.ones_like(d) if self.weights is None
             else np.asarray(self.weights, dtype=np.float64).reshape(-1))
        if len(d) != len(w):
            raise ValueError(f"{len(d)} distances but {len(w)} weights")
        if (d < 0).any():
            raise ValueError("distances must be nonnegative")
        d.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "distances", d)
        object.__setattr__(self, "weights", w)
        if self.mask_empty is None:
            object.__setattr__(self, "mask_empty", len(d) == 0)

    def __len__(self):
        return len(self.distances)


def _exact_min_distances(frm: np.ndarray, to: np.ndarray, chunk: int = 1 << 22) -> np.ndarray:
    rows = max(1, chunk // max(1, len(to)))
    out = np.empty(len(frm))
    for start in range(0, len(frm), rows):
        diff = frm[start:start + rows, None, :] - to[None, :, :]
        sq = diff * diff
        total = sq[..., 0]
        for k in range(1, sq.shape[-1]):
            total = total + sq[..., k]
        out[start:start + rows] = total.min(axis=1)
    return np.sqrt(out)


def directed_distances(frm: BoundarySet, to: BoundarySet | None = None, via="exact",
                       direction: str = "AB", mask_empty: bool | None = None) -> DistanceSet:
    """Distance from every point of ``frm`` to its nearest point of ``to``.

    ``via`` is either ``"exact"`` (pairwise minima over the point coordinates)
    or a precomputed :class:`DistanceField` of ``to`` that is sampled at the
    query positions.
    """
    if isinstance(via, DistanceField):
        if via.spacing != frm.spacing:
            raise ValueError("distance field and query set use different spacings")
        if len(frm) and via.empty_source:
            raise ValueError("cannot measure distances to an empty target set")
        d = via.sample(frm.half_index)
    elif via == "exact":
        if to is None:
            raise ValueError("exact mode needs the target set")
        if to.spacing != frm.spacing:
            raise ValueError("query and target sets use different spacings")
        if len(frm) and not len(to):
            raise ValueError("cannot measure distances to an empty target set")
        d = _exact_min_distances(frm.points, to.points) if len(frm) else np.empty(0)
    else:
        raise ValueError(f"via must be 'exact' or a DistanceField, got {via!r}")
    return DistanceSet(d, frm.weights, direction, mask_empty)
