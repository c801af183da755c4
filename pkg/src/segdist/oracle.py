"""Brute-force reference evaluation for small masks.

Everything here is a literal transcription: neighbourhood lookups per element,
all-pairs distances (a k-d tree for large point sets), and the aggregation
formulas written out again. It shares no code path with
:func:`segdist.metrics.compute_all` beyond the data types, and is meant for
grids up to roughly 64x64 or 32x32x32.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.spatial import cKDTree

from .boundary import BoundaryMode
from .grid import GridMask
from .metrics import (
    ABSOLUTE,
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
)


def _inside(idx, dims):
    return np.all((idx >= 0) & (idx < np.asarray(dims)), axis=-1)


def _lookup(data, idx):
    """Mask value at integer indices, background outside the grid."""
    ok = _inside(idx, data.shape)
    out = np.zeros(len(idx), dtype=bool)
    out[ok] = data[tuple(idx[ok].T)]
    return out


def _erosion_boundary(data, full):
    fg = np.argwhere(data)
    keep = np.zeros(len(fg), dtype=bool)
    for off in itertools.product((-1, 0, 1), repeat=data.ndim):
        if not full and sum(abs(o) for o in off) > 1:
            continue
        keep |= ~_lookup(data, fg + np.array(off))
    return fg[keep]


def _points_weights(data, spacing, mode, other=None):
    spacing = np.asarray(spacing, dtype=np.float64)
    if mode is BoundaryMode.FOREGROUND_ALL:
        idx = np.argwhere(data)
    elif mode is BoundaryMode.FOREGROUND_NON_OVERLAP:
        idx = np.argwhere(data & ~other)
    elif mode in (BoundaryMode.ERODE_FACE, BoundaryMode.ERODE_FULL):
        idx = _erosion_boundary(data, mode is BoundaryMode.ERODE_FULL)
    else:
        fg = np.argwhere(data)
        pts, wts = [], []
        for axis in range(data.ndim):
            tangent = 1.0
            for k in range(data.ndim):
                if k != axis:
                    tangent *= spacing[k]
            for step in (-1, 1):
                off = np.zeros(data.ndim, dtype=np.int64)
                off[axis] = step
                faces = fg[~_lookup(data, fg + off)]
                centre = faces * spacing
                centre[:, axis] += step * spacing[axis] / 2.0
                pts.append(centre)
                wts.append(np.full(len(faces), tangent))
        return np.concatenate(pts), np.concatenate(wts)
    return idx * spacing, np.ones(len(idx))


# above this many point pairs the all-pairs minimum becomes impractically
# slow; scipy's k-d tree answers the same exact nearest-neighbour query
PAIRWISE_LIMIT = 20_000_000


def _pairwise_min(frm, to, limit=None):
    if len(frm) == 0:
        return np.empty(0)
    limit = PAIRWISE_LIMIT if limit is None else limit
    if len(frm) * len(to) > limit:
        return cKDTree(to).query(frm, k=1)[0]
    out = np.empty(len(frm))
    rows = max(1, (1 << 21) // max(1, len(to)))
    for s in range(0, len(frm), rows):
        diff = frm[s:s + rows, None, :] - to[None, :, :]
        sq = diff * diff
        total = sq[..., 0]
        for k in range(1, sq.shape[-1]):
            total = total + sq[..., k]
        out[s:s + rows] = np.sqrt(total.min(axis=1))
    return out


def _position_percentile(d, p):
    if len(d) == 0:
        return 0.0
    s = sorted(d.tolist())
    pos = math.floor(p * len(s) / 100.0 + 0.5)
    pos = min(max(pos, 1), len(s))
    return s[pos - 1]


def _weighted_percentile(d, w, p):
    if len(d) == 0:
        return 0.0
    # total weight at each distinct distance, accumulated in increasing order
    values, inverse = np.unique(d, return_inverse=True)
    cum = np.cumsum(np.bincount(inverse.ravel(), weights=w))
    hit = np.nonzero(cum >= p / 100.0 * w.sum())[0]
    return float(values[hit[0]] if len(hit) else values[-1])


def _mean(d):
    return float(d.sum() / len(d)) if len(d) else 0.0


def _wmean(d, w):
    return float((w * d).sum() / w.sum()) if len(d) else 0.0


def _band(data, spacing, tau):
    padded = np.pad(data, 1)
    spacing = np.asarray(spacing, dtype=np.float64)
    fg = np.argwhere(padded)
    # only background elements touching foreground (any of the 3^d offsets)
    # can be nearest: stepping from any other one towards the query lands on
    # background that is strictly closer
    bg = np.argwhere(~padded)
    touch = np.zeros(len(bg), dtype=bool)
    for off in itertools.product((-1, 0, 1), repeat=data.ndim):
        touch |= _lookup(padded, bg + np.array(off))
    bg = bg[touch]
    dist = _pairwise_min(fg * spacing, bg * spacing)
    band = np.zeros_like(padded)
    band[tuple(fg[dist <= tau].T)] = True
    return band


def _edge(metric, ea, eb, policy):
    if policy is EdgePolicy.ERROR:
        raise EmptyMaskError(metric, ea, eb)
    if policy is EdgePolicy.NAN:
        return math.nan
    if metric in ABSOLUTE:
        return 0.0 if (ea and eb) else math.inf
    return 1.0 if (ea and eb) else 0.0


def oracle_all_metrics(a: GridMask, b: GridMask, config: MetricConfig | None = None,
                       metrics=METRICS) -> MetricResult:
    config = config or MetricConfig()
    if a.dims != b.dims or a.spacing != b.spacing:
        raise ValueError("masks must share a grid")
    spacing = (1.0,) * a.ndim if config.spacing_mode is SpacingMode.UNIT_FLAW else a.spacing
    ea, eb = not a.data.any(), not b.data.any()
    res = MetricResult(empty_a=ea, empty_b=eb)
    if ea or eb:
        flag = "empty_both" if ea and eb else ("empty_a" if ea else "empty_b")
        for m in metrics:
            try:
                res.values[m] = _edge(m, ea, eb, config.edge_policy)
                res.warnings[m] = flag
            except EmptyMaskError as exc:
                res.errors[m] = str(exc)
        return res

    mode = config.boundary_mode
    pa, wa = _points_weights(a.data, spacing, mode, b.data)
    pb, wb = _points_weights(b.data, spacing, mode, a.data)
    if mode is BoundaryMode.FOREGROUND_NON_OVERLAP:
        ta, _ = _points_weights(a.data, spacing, BoundaryMode.FOREGROUND_ALL)
        tb, _ = _points_weights(b.data, spacing, BoundaryMode.FOREGROUND_ALL)
    else:
        ta, tb = pa, pb
    dab = _pairwise_min(pa, tb)
    dba = _pairwise_min(pb, ta)
    n, m = len(dab), len(dba)
    p, tau = config.p, config.tau

    for metric in metrics:
        if metric == "hd":
            v = max(dab.max() if n else 0.0, dba.max() if m else 0.0)
        elif metric == "hdp":
            if config.hdp_mode is HdpMode.MAX_OF_DIRECTED:
                v = max(_position_percentile(dab, p), _position_percentile(dba, p))
            elif config.hdp_mode is HdpMode.POOLED:
                v = _position_percentile(np.concatenate([dab, dba]), p)
            elif config.hdp_mode is HdpMode.MEAN_OF_DIRECTED:
                v = (_position_percentile(dab, p) + _position_percentile(dba, p)) / 2.0
            else:
                v = max(_weighted_percentile(dab, wa, p), _weighted_percentile(dba, wb, p))
        elif metric == "masd":
            if config.masd_mode is MasdMode.MEAN_OF_MEANS:
                v = (_mean(dab) + _mean(dba)) / 2.0
            elif config.masd_mode is MasdMode.MAX_OF_MEANS:
                v = max(_mean(dab), _mean(dba))
            else:
                v = (_wmean(dab, wa) + _wmean(dba, wb)) / 2.0
        elif metric == "assd":
            if n + m == 0:
                v = 0.0
            elif config.assd_mode is AssdMode.POOLED_MEAN:
                v = (dab.sum() + dba.sum()) / (n + m)
            else:
                v = ((wa * dab).sum() + (wb * dba).sum()) / (wa.sum() + wb.sum())
        elif metric == "nsd":
            if n + m == 0:
                v = 1.0
            elif config.nsd_mode is NsdMode.COUNT:
                v = (np.count_nonzero(dab <= tau) + np.count_nonzero(dba <= tau)) / (n + m)
            else:
                v = (wa[dab <= tau].sum() + wb[dba <= tau].sum()) / (wa.sum() + wb.sum())
        elif metric == "biou":
            band_a = _band(a.data, spacing, tau)
            band_b = _band(b.data, spacing, tau)
            union = np.count_nonzero(band_a | band_b)
            if union == 0:
                try:
                    v = _edge(metric, True, True, config.edge_policy)
                except EmptyMaskError as exc:
                    res.errors[metric] = str(exc)
                    continue
                res.warnings[metric] = "empty_bands"
            else:
                v = np.count_nonzero(band_a & band_b) / union
        elif metric == "dsc":
            v = 2 * np.count_nonzero(a.data & b.data) / (np.count_nonzero(a.data) + np.count_nonzero(b.data))
        else:
            raise ValueError(f"unknown metric {metric!r}")
        res.values[metric] = float(v)
    return res
