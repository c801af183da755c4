"""Evaluate manifests of mask pairs across presets and element sizes."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from ..grid import resample_nn
from ..metrics import METRICS
from ..presets import evaluate
from ..presets import preset as get_preset
from .dataset import PairEntry, read_manifest

RESULT_FIELDS = ("pair_id", "spacing", "preset", "metric", "value", "flag")
DEFAULT_SPACINGS_2D = ((1.0, 1.0), (0.07, 0.07), (0.07, 1.0))
DEFAULT_SPACINGS_3D = ((1.0, 1.0, 1.0), (2.0, 2.0, 2.0), (0.5, 0.5, 2.0))


@dataclass(frozen=True)
class ResultRow:
    pair_id: str
    spacing: str
    preset: str
    metric: str
    value: float
    flag: str = "ok"

    @property
    def is_error(self) -> bool:
        return self.flag.startswith("error")


def format_spacing(spacing) -> str:
    return "x".join(format(float(s), "g") for s in spacing)


def parse_spacing(text: str) -> tuple[float, ...]:
    parts = text.replace("x", ",").split(",")
    values = tuple(float(p) for p in parts if p.strip())
    if len(values) not in (2, 3) or not all(v > 0 for v in values):
        raise ValueError(f"invalid spacing {text!r}")
    return values


def parse_spacings(text: str) -> list[tuple[float, ...]]:
    """Semicolon-separated spacings, e.g. ``"1,1,1;2,2,2;0.5,0.5,2"``."""
    return [parse_spacing(chunk) for chunk in text.split(";") if chunk.strip()]


def format_value(value: float) -> str:
    return repr(float(value))


def _error_rows(pair_id, spacing_key, presets, msg):
    rows = []
    for name in presets:
        pr = get_preset(name)
        for metric in METRICS:
            if pr.supports(metric):
                rows.append(ResultRow(pair_id, spacing_key, name, metric, math.nan, f"error:{msg}"))
    return rows


def evaluate_pair(entry: PairEntry, presets, spacings=None, p=95.0, tau=2.0,
                  edge_policy="reloaded", crop=True) -> list[ResultRow]:
    """All result rows for one pair, ordered by spacing, preset and metric."""
    try:
        ref, pred = entry.load()
    except (OSError, ValueError) as exc:
        keys = [format_spacing(s) for s in spacings] if spacings else ["native"]
        return [r for k in keys for r in _error_rows(entry.id, k, presets, type(exc).__name__)]
    if ref.dims != pred.dims or ref.spacing != pred.spacing:
        keys = [format_spacing(s) for s in spacings] if spacings else [format_spacing(ref.spacing)]
        return [r for k in keys for r in _error_rows(entry.id, k, presets, "grid_mismatch")]
    rows = []
    for spacing in spacings or [ref.spacing]:
        key = format_spacing(spacing)
        if len(spacing) != ref.ndim:
            rows.extend(_error_rows(entry.id, key, presets, "rank_mismatch"))
            continue
        a, b = resample_nn(ref, spacing), resample_nn(pred, spacing)
        for name in presets:
            result = evaluate(a, b, name, p=p, tau=tau, edge_policy=edge_policy, crop=crop)
            for metric in METRICS:
                if metric in result.unsupported:
                    continue
                if metric in result.errors:
                    rows.append(ResultRow(entry.id, key, name, metric, math.nan, "error:empty_mask"))
                else:
                    rows.append(ResultRow(entry.id, key, name, metric,
                                          result.values[metric], result.flag(metric)))
    return rows


def _evaluate_star(args):
    return evaluate_pair(*args)


def run_batch(manifest, presets, spacings=None, p=95.0, tau=2.0, edge_policy="reloaded",
              crop=True, jobs=1) -> list[ResultRow]:
    """Rows for every pair x spacing x preset x supported metric.

    ``manifest`` is a path or a list of :class:`PairEntry`. Per-row failures are
    recorded in the flag column and the run continues. Row order is
    deterministic regardless of ``jobs``.
    """
    entries = read_manifest(manifest) if not isinstance(manifest, list) else manifest
    presets = [get_preset(n).name for n in presets]
    tasks = [(e, presets, spacings, p, tau, edge_policy, crop) for e in entries]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_evaluate_star, tasks))
    else:
        chunks = [_evaluate_star(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


def write_results(path_or_file, rows) -> None:
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_FIELDS)
        for r in rows:
            writer.writerow([r.pair_id, r.spacing, r.preset, r.metric, format_value(r.value), r.flag])
    finally:
        if own:
            fh.close()


def read_results(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        lines = (line for line in fh if not line.startswith("#"))
        reader = csv.DictReader(lines)
        if tuple(reader.fieldnames or ()) != RESULT_FIELDS:
            raise ValueError(f"{path}: expected header {','.join(RESULT_FIELDS)}")
        return [ResultRow(r["pair_id"], r["spacing"], r["preset"], r["metric"],
                          float(r["value"]), r["flag"]) for r in reader]
