"""Deviation analysis against a reference preset and paired significance tests."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..metrics import METRICS

ALPHA = 0.05
EXACT_MAX_N = 25


@dataclass(frozen=True)
class DeviationRecord:
    pair_id: str
    spacing: str
    metric: str
    preset: str
    reference: str
    value: float
    reference_value: float

    @property
    def delta(self) -> float:
        return self.value - self.reference_value

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value) and math.isfinite(self.reference_value)


@dataclass(frozen=True)
class DeviationSummary:
    metric: str
    preset: str
    spacing: str
    stratum: str
    n: int
    excluded: int
    min: float
    max: float
    mean: float
    sd: float


SUMMARY_FIELDS = ("metric", "preset", "spacing", "stratum", "n", "excluded",
                  "min", "max", "mean", "sd")
RECORD_FIELDS = ("pair_id", "spacing", "metric", "preset", "reference", "value",
                 "reference_value", "delta")


def deviation_records(rows, reference: str) -> list[DeviationRecord]:
    """Pair every preset's rows with the reference rows of the same pair, spacing and metric.

    The reference preset itself is included (its deltas are all zero). Error
    rows are treated as NaN.
    """
    ref = {(r.pair_id, r.spacing, r.metric): r for r in rows if r.preset == reference}
    if not ref:
        raise ValueError(f"no rows for reference preset {reference!r}")
    out = []
    for r in rows:
        base = ref.get((r.pair_id, r.spacing, r.metric))
        if base is None:
            continue
        v = math.nan if r.is_error else r.value
        bv = math.nan if base.is_error else base.value
        out.append(DeviationRecord(r.pair_id, r.spacing, r.metric, r.preset, reference, v, bv))
    return out


def summarize(records, tags=None) -> list[DeviationSummary]:
    """min/max/mean/population-SD of finite deltas per (metric, preset, spacing, stratum).

    Non-finite deltas are left out and counted in ``excluded``. Stratum
    ``all`` is always present; ``tags`` (pair id -> tag) adds one stratum per
    tag.
    """
    groups: dict[tuple, list[DeviationRecord]] = {}
    order_preset, order_spacing = {}, {}
    for rec in records:
        order_preset.setdefault(rec.preset, len(order_preset))
        order_spacing.setdefault(rec.spacing, len(order_spacing))
        strata = ["all"]
        if tags and tags.get(rec.pair_id):
            strata.append(tags[rec.pair_id])
        for s in strata:
            groups.setdefault((rec.metric, rec.preset, rec.spacing, s), []).append(rec)

    def key(k):
        metric, preset, spacing, stratum = k
        return (METRICS.index(metric) if metric in METRICS else len(METRICS), metric,
                order_preset[preset], order_spacing[spacing], stratum != "all", stratum)

    out = []
    for k in sorted(groups, key=key):
        recs = groups[k]
        deltas = np.array([r.delta for r in recs if r.finite], dtype=np.float64)
        excluded = len(recs) - len(deltas)
        if len(deltas):
            stats = (float(deltas.min()), float(deltas.max()), float(deltas.mean()),
                     float(deltas.std(ddof=0)))
        else:
            stats = (math.nan,) * 4
        out.append(DeviationSummary(*k, len(deltas), excluded, *stats))
    return out


def deviations(rows, reference: str, tags=None):
    records = deviation_records(rows, reference)
    return records, summarize(records, tags)


def write_summary(path_or_file, summary) -> None:
    _write(path_or_file, SUMMARY_FIELDS,
           ([s.metric, s.preset, s.spacing, s.stratum, s.n, s.excluded,
             repr(s.min), repr(s.max), repr(s.mean), repr(s.sd)] for s in summary),
           comment="# delta = candidate - reference; sd is the population standard deviation; "
                   "non-finite deltas excluded and counted")


def write_records(path_or_file, records) -> None:
    _write(path_or_file, RECORD_FIELDS,
           ([r.pair_id, r.spacing, r.metric, r.preset, r.reference, repr(r.value),
             repr(r.reference_value), repr(r.delta)] for r in records))


def _write(path_or_file, header, rows, comment=None):
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        if comment:
            fh.write(comment + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if own:
            fh.close()


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank

@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # sum of ranks of positive differences
    p_value: float
    n: int  # nonzero differences used
    corrections: int
    significant: bool
    method: str


def _midranks(values):
    """Average ranks (1-based) of ``values``, ties sharing their mean rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j + 2) / 2.0
        i = j + 1
    return ranks


def signed_rank_null_counts(doubled_ranks) -> np.ndarray:
    """Number of sign assignments giving each doubled positive-rank sum.

    Counts every one of the 2^n assignments, via a subset-sum recursion.
    """
    total = int(sum(doubled_ranks))
    counts = np.zeros(total + 1, dtype=object)
    counts[0] = 1
    for r in doubled_ranks:
        r = int(r)
        counts[r:] = counts[r:] + counts[:total + 1 - r]
    return counts


def wilcoxon_paired(x, y, corrections: int = 1, alpha: float = ALPHA) -> WilcoxonResult:
    """Two-sided paired signed-rank test; significant iff p < alpha / corrections.

    Zero differences are dropped. Up to 25 remaining pairs the exact null
    distribution is used (ties handled through midranks); above that a normal
    approximation with tie correction.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 1:
        raise ValueError("x and y must be 1D with equal nonzero length")
    if corrections < 1:
        raise ValueError("corrections must be >= 1")
    d = x - y
    d = d[d != 0]
    n = len(d)
    if n == 0:
        return WilcoxonResult(0.0, 1.0, 0, corrections, False, "degenerate")
    ranks = _midranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    if n <= EXACT_MAX_N:
        doubled = np.rint(2 * ranks).astype(np.int64)
        counts = signed_rank_null_counts(doubled)
        t = int(round(2 * w_plus))
        total = 2 ** n
        lower = int(counts[:t + 1].sum())
        upper = int(counts[t:].sum())
        p = min(1.0, 2.0 * min(lower, upper) / total)
        method = "exact"
    else:
        mean = n * (n + 1) / 4.0
        _, tie_sizes = np.unique(np.abs(d), return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - float((tie_sizes ** 3 - tie_sizes).sum()) / 48.0
        z = (w_plus - mean) / math.sqrt(var) if var > 0 else 0.0
        p = min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))
        method = "normal"
    return WilcoxonResult(w_plus, p, n, corrections, p < alpha / corrections, method)


@dataclass(frozen=True)
class Comparison:
    metric: str
    spacing: str
    preset_a: str
    preset_b: str
    result: WilcoxonResult


COMPARISON_FIELDS = ("metric", "spacing", "preset_a", "preset_b", "n", "statistic",
                     "p_value", "method", "corrections", "significant")


def compare_presets(records, corrections: int | None = None, alpha: float = ALPHA,
                    presets=None) -> list[Comparison]:
    """Paired tests of deviation distributions between every two candidate presets.

    Pairs are matched on pair id within each (metric, spacing); only pairs
    where both deltas are finite enter a test. The Bonferroni denominator
    defaults to the number of tests actually run.
    """
    table: dict[tuple, dict[str, dict[str, float]]] = {}
    seen_presets = []
    for r in records:
        if r.preset == r.reference:
            continue
        if r.preset not in seen_presets:
            seen_presets.append(r.preset)
        if r.finite:
            table.setdefault((r.metric, r.spacing), {}).setdefault(r.preset, {})[r.pair_id] = r.delta
    chosen = [p for p in (presets or seen_presets)]
    plan = []
    for (metric, spacing), per_preset in table.items():
        for pa, pb in itertools.combinations(chosen, 2):
            if pa in per_preset and pb in per_preset:
                common = sorted(set(per_preset[pa]) & set(per_preset[pb]))
                if common:
                    plan.append((metric, spacing, pa, pb, common))
    k = corrections or max(1, len(plan))
    out = []
    for metric, spacing, pa, pb, common in plan:
        xs = [table[(metric, spacing)][pa][i] for i in common]
        ys = [table[(metric, spacing)][pb][i] for i in common]
        out.append(Comparison(metric, spacing, pa, pb, wilcoxon_paired(xs, ys, k, alpha)))
    return out


def write_comparisons(path_or_file, comparisons) -> None:
    _write(path_or_file, COMPARISON_FIELDS,
           ([c.metric, c.spacing, c.preset_a, c.preset_b, c.result.n, repr(c.result.statistic),
             repr(c.result.p_value), c.result.method, c.result.corrections,
             int(c.result.significant)] for c in comparisons),
           comment="# two-sided paired Wilcoxon signed-rank on deviations; "
                   "significant iff p < 0.05 / corrections")
