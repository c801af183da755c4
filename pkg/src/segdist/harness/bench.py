"""Wall-clock timing of preset evaluation with and without bounding-box cropping."""

from __future__ import annotations

import csv
import statistics
import time
from dataclasses import dataclass

from ..distance import count_edt
from ..grid import resample_nn
from ..presets import evaluate
from ..presets import preset as get_preset
from .dataset import read_manifest

TIMING_FIELDS = ("pair_id", "preset", "crop", "repetitions", "median_s", "boundary_edts", "band_edts")


@dataclass(frozen=True)
class TimingRow:
    pair_id: str
    preset: str
    crop: bool
    repetitions: int
    median_s: float
    boundary_edts: int
    band_edts: int


def bench(manifest, presets, repetitions: int = 3, crops=(True, False), spacing=None,
          p=95.0, tau=2.0) -> list[TimingRow]:
    """Median wall time of one full preset evaluation per pair.

    EDT counts are taken from the first repetition and are per pair, summed
    over the preset's configurations.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    entries = read_manifest(manifest) if not isinstance(manifest, list) else manifest
    names = [get_preset(n).name for n in presets]
    rows = []
    for entry in entries:
        a, b = entry.load()
        if spacing is not None:
            a, b = resample_nn(a, spacing), resample_nn(b, spacing)
        for name in names:
            for crop in crops:
                samples, counts = [], None
                for _ in range(repetitions):
                    with count_edt() as counter:
                        start = time.perf_counter()
                        evaluate(a, b, name, p=p, tau=tau, crop=crop)
                        samples.append(time.perf_counter() - start)
                    counts = counts or dict(counter)
                rows.append(TimingRow(entry.id, name, crop, repetitions,
                                      statistics.median(samples),
                                      counts.get("boundary", 0), counts.get("band", 0)))
    return rows


def write_timings(path_or_file, rows) -> None:
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TIMING_FIELDS)
        for r in rows:
            writer.writerow([r.pair_id, r.preset, "on" if r.crop else "off", r.repetitions,
                             f"{r.median_s:.6f}", r.boundary_edts, r.band_edts])
    finally:
        if own:
            fh.close()


def median_speedup(rows, preset=None) -> float:
    """Ratio of median crop-off time to median crop-on time."""
    sel = [r for r in rows if preset is None or r.preset == preset]
    on = statistics.median(r.median_s for r in sel if r.crop)
    off = statistics.median(r.median_s for r in sel if not r.crop)
    return off / on
