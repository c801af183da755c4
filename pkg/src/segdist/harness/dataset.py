"""Seeded synthetic reference/prediction mask pairs."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from ..grid import GridMask, load_mask, save_mask

MANIFEST_FIELDS = ("id", "ref", "pred", "tag")
HEADER_SUFFIX = ".hdr"


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class PairEntry:
    id: str
    ref: Path
    pred: Path
    tag: str = ""

    def load(self) -> tuple[GridMask, GridMask]:
        return load_mask(self.ref), load_mask(self.pred)


def read_manifest(path) -> list[PairEntry]:
    path = Path(path)
    base = path.parent
    entries, seen = [], set()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"id", "ref", "pred"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: manifest lacks columns {sorted(missing)}")
        for row in reader:
            pid = row["id"]
            if pid in seen:
                raise ValueError(f"{path}: duplicate pair id {pid!r}")
            seen.add(pid)
            entries.append(PairEntry(pid, base / row["ref"], base / row["pred"],
                                     row.get("tag") or ""))
    return entries


def write_manifest(path, entries) -> None:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_FIELDS)
        for e in entries:
            writer.writerow([e.id, Path(e.ref).relative_to(path.parent).as_posix(),
                             Path(e.pred).relative_to(path.parent).as_posix(), e.tag])


def _smooth_noise(rng, dims, sigma):
    field = ndimage.gaussian_filter(rng.standard_normal(dims), sigma, mode="wrap")
    return field / (field.std() or 1.0)


def _largest_component(data):
    labels, n = ndimage.label(data)
    if n <= 1:
        return data
    sizes = np.bincount(labels.ravel())[1:]
    return labels == (1 + int(np.argmax(sizes)))


def _size_tag(fraction):
    if fraction < 0.01:
        return "small"
    if fraction < 0.08:
        return "midsize"
    return "large"


def make_pair(rng, dims, level=0.3, fill=0.6, empty_pred=False):
    """One reference blob and its perturbed prediction as boolean arrays.

    The reference is a noisy ellipsoid occupying about ``fill`` of each axis.
    The prediction re-thresholds a shifted copy of the same field with extra
    noise and threshold jitter, then flips boundary elements; every
    perturbation scales with ``level`` so ``level=0`` reproduces the reference.
    """
    dims = tuple(int(n) for n in dims)
    nd = len(dims)
    grids = np.meshgrid(*[np.arange(n, dtype=np.float64) for n in dims], indexing="ij")
    radii = np.array([max(1.0, fill * n / 2.0) for n in dims]) * rng.uniform(0.6, 1.0, nd)
    centre = np.array([rng.uniform(r, n - 1 - r) if n - 1 > 2 * r else (n - 1) / 2.0
                       for r, n in zip(radii, dims)])
    sigma = max(1.0, 0.15 * float(np.mean(radii)))
    base = 1.0 - sum(((g - c) / r) ** 2 for g, c, r in zip(grids, centre, radii))
    field = base + 0.35 * _smooth_noise(rng, dims, sigma)
    ref = _largest_component(field > 0)

    max_shift = level * 0.25 * radii
    shift = [int(math.floor(rng.uniform(-m, m) + 0.5)) for m in max_shift]
    moved = np.roll(field, shift, axis=tuple(range(nd)))
    jitter = level * rng.uniform(-0.5, 0.5)
    pfield = moved + level * 0.5 * _smooth_noise(rng, dims, sigma) + jitter
    pred = pfield > 0
    flip_p = 0.3 * level
    if flip_p > 0:
        edge = pred ^ ndimage.binary_erosion(pred, border_value=0)
        pred = pred ^ (edge & (rng.random(dims) < flip_p))
    pred = _largest_component(pred)
    if empty_pred:
        pred = np.zeros(dims, dtype=bool)
    return ref, pred


def gen_dataset(out_dir, seed=0, count=10, dims=(64, 64), spacing=None, level=0.3,
                fill=0.6, empty_fraction=0.0, max_retries=20) -> Path:
    """Write ``count`` mask pairs plus ``manifest.csv`` and ``stats.json`` to ``out_dir``.

    Deterministic for a given seed and argument set. Non-empty pairs are
    guaranteed nonempty and overlapping; ``empty_fraction`` of the pairs get an
    empty prediction.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    dims = tuple(int(n) for n in dims)
    spacing = tuple(float(s) for s in (spacing or (1.0,) * len(dims)))
    if len(dims) not in (2, 3) or len(spacing) != len(dims):
        raise ValueError(f"dims {dims} and spacing {spacing} must both be 2D or 3D")
    out_dir = Path(out_dir)
    (out_dir / "masks").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    entries, dscs = [], []
    n_empty = int(round(empty_fraction * count))
    empty_ids = set(rng.choice(count, size=n_empty, replace=False).tolist()) if n_empty else set()
    for i in range(count):
        for _ in range(max_retries):
            ref, pred = make_pair(rng, dims, level, fill, empty_pred=i in empty_ids)
            if ref.any() and (i in empty_ids or (ref & pred).any()):
                break
        else:
            raise GenerationError(f"pair {i}: no nonempty overlapping pair after {max_retries} tries")
        pid = f"pair{i:04d}"
        tag = _size_tag(ref.mean())
        ref_path = out_dir / "masks" / f"{pid}_ref{HEADER_SUFFIX}"
        pred_path = out_dir / "masks" / f"{pid}_pred{HEADER_SUFFIX}"
        save_mask(GridMask(ref, spacing, "reference"), ref_path)
        save_mask(GridMask(pred, spacing, "prediction"), pred_path)
        entries.append(PairEntry(pid, ref_path, pred_path, tag))
        if pred.any():
            dscs.append(2 * np.count_nonzero(ref & pred) / (ref.sum() + pred.sum()))
    manifest = out_dir / "manifest.csv"
    write_manifest(manifest, entries)
    stats = {
        "seed": seed, "count": count, "dims": list(dims), "spacing": list(spacing),
        "level": level, "fill": fill, "empty_pairs": n_empty,
        "mean_dsc": float(np.mean(dscs)) if dscs else None,
    }
    (out_dir / "stats.json").write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n")
    return manifest
