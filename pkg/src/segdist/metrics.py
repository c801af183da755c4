"""Metric aggregators, variant axes, edge-case policies and the combined pipeline."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from enum import Enum

import numpy as np

from .boundary import BoundaryMode, extract_pair, target_set
from .distance import DistanceSet, directed_distances, edt
from .grid import GridMask, check_same_grid, crop_joint

ABSOLUTE = ("hd", "hdp", "masd", "assd")
RELATIVE = ("nsd", "biou", "dsc")
METRICS = ("hd", "hdp", "masd", "assd", "nsd", "biou", "dsc")
DISTANCE_METRICS = ("hd", "hdp", "masd", "assd", "nsd")


class SpacingMode(str, Enum):
    PHYSICAL = "physical"
    UNIT_FLAW = "unit_flaw"


class HdpMode(str, Enum):
    MAX_OF_DIRECTED = "max_of_directed"
    POOLED = "pooled"
    MEAN_OF_DIRECTED = "mean_of_directed"
    WEIGHTED_MAX_OF_DIRECTED = "weighted_max_of_directed"


class MasdMode(str, Enum):
    MEAN_OF_MEANS = "mean_of_means"
    MAX_OF_MEANS = "max_of_means"
    WEIGHTED_MEAN = "weighted_mean"


class AssdMode(str, Enum):
    POOLED_MEAN = "pooled_mean"
    WEIGHTED_POOLED_MEAN = "weighted_pooled_mean"


class NsdMode(str, Enum):
    COUNT = "count"
    WEIGHTED_AREA = "weighted_area"


class EdgePolicy(str, Enum):
    RELOADED = "reloaded"
    NAN = "nan"
    ERROR = "error"


WEIGHTED_MODES = {
    HdpMode.WEIGHTED_MAX_OF_DIRECTED,
    MasdMode.WEIGHTED_MEAN,
    AssdMode.WEIGHTED_POOLED_MEAN,
    NsdMode.WEIGHTED_AREA,
}


class EmptyMaskError(ValueError):
    """A metric was refused because an input segmentation is empty."""

    def __init__(self, metric, empty_a, empty_b, detail=None):
        self.metric = metric
        self.empty_a = empty_a
        self.empty_b = empty_b
        which = {(True, False): "A", (False, True): "B"}.get((empty_a, empty_b), "A and B")
        msg = f"{metric}: segmentation {which} is empty"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class EmptyMaskWarning(UserWarning):
    pass


@dataclass(frozen=True)
class MetricConfig:
    boundary_mode: BoundaryMode = BoundaryMode.INTERFACE
    spacing_mode: SpacingMode = SpacingMode.PHYSICAL
    hdp_mode: HdpMode = HdpMode.WEIGHTED_MAX_OF_DIRECTED
    masd_mode: MasdMode = MasdMode.WEIGHTED_MEAN
    assd_mode: AssdMode = AssdMode.WEIGHTED_POOLED_MEAN
    nsd_mode: NsdMode = NsdMode.WEIGHTED_AREA
    edge_policy: EdgePolicy = EdgePolicy.RELOADED
    p: float = 95.0
    tau: float = 2.0

    def __post_init__(self):
        for name, enum in (("boundary_mode", BoundaryMode), ("spacing_mode", SpacingMode),
                           ("hdp_mode", HdpMode), ("masd_mode", MasdMode),
                           ("assd_mode", AssdMode), ("nsd_mode", NsdMode),
                           ("edge_policy", EdgePolicy)):
            object.__setattr__(self, name, enum(getattr(self, name)))
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "tau", float(self.tau))
        if not 0 < self.p <= 100:
            raise ValueError(f"p must lie in (0, 100], got {self.p}")
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.boundary_mode.weighted:
            bad = [m.value for m in (self.hdp_mode, self.masd_mode, self.assd_mode, self.nsd_mode)
                   if m in WEIGHTED_MODES]
            if bad:
                raise ValueError(
                    f"weighted aggregation {bad} needs the interface boundary mode, "
                    f"got {self.boundary_mode.value}"
                )

    def replace(self, **changes) -> MetricConfig:
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {k: (v.value if isinstance(v, Enum) else v) for k, v in asdict(self).items()}


@dataclass
class MetricResult:
    values: dict = field(default_factory=dict)
    warnings: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    unsupported: tuple = ()
    empty_a: bool = False
    empty_b: bool = False

    def __getitem__(self, metric):
        return self.values[metric]

    def flag(self, metric) -> str:
        if metric in self.unsupported:
            return "unsupported"
        if metric in self.errors:
            return "error"
        return self.warnings.get(metric, "ok")

    def merge(self, other: MetricResult) -> MetricResult:
        return MetricResult(
            {**self.values, **other.values},
            {**self.warnings, **other.warnings},
            {**self.errors, **other.errors},
            tuple(sorted(set(self.unsupported) | set(other.unsupported), key=METRICS.index)),
            self.empty_a or other.empty_a,
            self.empty_b or other.empty_b,
        )

    def to_dict(self) -> dict:
        out = {}
        for metric in METRICS:
            if metric in self.unsupported:
                out[metric] = {"value": None, "flag": "unsupported"}
            elif metric in self.values or metric in self.errors:
                value = self.values.get(metric)
                out[metric] = {"value": _json_number(value), "flag": self.flag(metric)}
                if metric in self.errors:
                    out[metric]["error"] = self.errors[metric]
        return {"metrics": out, "empty_a": self.empty_a, "empty_b": self.empty_b}


def _json_number(x):
    if x is None:
        return None
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


# ---------------------------------------------------------------------------
# edge cases

def edge_flag(empty_a: bool, empty_b: bool) -> str:
    if empty_a and empty_b:
        return "empty_both"
    return "empty_a" if empty_a else "empty_b"


def edge_case(metric: str, empty_a: bool, empty_b: bool, policy=EdgePolicy.RELOADED) -> float:
    """Value of ``metric`` when one or both segmentations are empty.

    The reloaded convention gives inf mm / 0 for one empty input and 0 mm / 1
    for two, NaN gives NaN and error raises :class:`EmptyMaskError`.
    """
    policy = EdgePolicy(policy)
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    if not (empty_a or empty_b):
        raise ValueError("edge_case called without an empty input")
    if policy is EdgePolicy.ERROR:
        raise EmptyMaskError(metric, empty_a, empty_b)
    if policy is EdgePolicy.NAN:
        return math.nan
    both = empty_a and empty_b
    if metric in ABSOLUTE:
        return 0.0 if both else math.inf
    return 1.0 if both else 0.0


def _edge(metric, dab: DistanceSet, dba: DistanceSet, policy):
    if dab.mask_empty or dba.mask_empty:
        value = edge_case(metric, dab.mask_empty, dba.mask_empty, policy)
        warnings.warn(f"{metric}: {edge_flag(dab.mask_empty, dba.mask_empty)}",
                      EmptyMaskWarning, stacklevel=3)
        return value
    return None


# ---------------------------------------------------------------------------
# aggregation primitives
#
# An empty directed set from a nonempty mask means every query element lies
# inside the other mask, so that direction contributes zero distance.

def percentile(values, p: float) -> float:
    """Value at 1-based position round_half_up(p * n / 100), clamped to [1, n]."""
    values = np.sort(np.asarray(values, dtype=np.float64))
    n = len(values)
    if n == 0:
        return 0.0
    k = min(max(math.floor(p * n / 100.0 + 0.5), 1), n)
    return float(values[k - 1])


def weighted_percentile(values, weights, p: float) -> float:
    """Smallest d whose cumulative weight of distances <= d reaches p% of the total."""
    values = np.asarray(values, dtype=np.float64)
    if len(values) == 0:
        return 0.0
    order = np.lexsort((weights, values))
    cum = np.cumsum(np.asarray(weights, dtype=np.float64)[order])
    i = int(np.searchsorted(cum, p / 100.0 * cum[-1], side="left"))
    return float(values[order[min(i, len(values) - 1)]])


def _mean(ds: DistanceSet) -> float:
    return float(ds.distances.sum() / len(ds)) if len(ds) else 0.0


def _weighted_mean(ds: DistanceSet) -> float:
    return float((ds.weights * ds.distances).sum() / ds.weights.sum()) if len(ds) else 0.0


def _max(ds: DistanceSet) -> float:
    return float(ds.distances.max()) if len(ds) else 0.0


def hd(dab: DistanceSet, dba: DistanceSet, policy=EdgePolicy.RELOADED) -> float:
    edge = _edge("hd", dab, dba, policy)
    if edge is not None:
        return edge
    return max(_max(dab), _max(dba))


def hdp(dab: DistanceSet, dba: DistanceSet, p: float = 95.0,
        mode=HdpMode.MAX_OF_DIRECTED, policy=EdgePolicy.RELOADED) -> float:
    if not 0 < p <= 100:
        raise ValueError(f"p must lie in (0, 100], got {p}")
    edge = _edge("hdp", dab, dba, policy)
    if edge is not None:
        return edge
    mode = HdpMode(mode)
    if mode is HdpMode.MAX_OF_DIRECTED:
        return max(percentile(dab.distances, p), percentile(dba.distances, p))
    if mode is HdpMode.POOLED:
        return percentile(np.concatenate([dab.distances, dba.distances]), p)
    if mode is HdpMode.MEAN_OF_DIRECTED:
        return (percentile(dab.distances, p) + percentile(dba.distances, p)) / 2.0
    return max(weighted_percentile(dab.distances, dab.weights, p),
               weighted_percentile(dba.distances, dba.weights, p))


def masd(dab: DistanceSet, dba: DistanceSet, mode=MasdMode.MEAN_OF_MEANS,
         policy=EdgePolicy.RELOADED) -> float:
    edge = _edge("masd", dab, dba, policy)
    if edge is not None:
        return edge
    mode = MasdMode(mode)
    if mode is MasdMode.MEAN_OF_MEANS:
        return (_mean(dab) + _mean(dba)) / 2.0
    if mode is MasdMode.MAX_OF_MEANS:
        return max(_mean(dab), _mean(dba))
    return (_weighted_mean(dab) + _weighted_mean(dba)) / 2.0


def assd(dab: DistanceSet, dba: DistanceSet, mode=AssdMode.POOLED_MEAN,
         policy=EdgePolicy.RELOADED) -> float:
    edge = _edge("assd", dab, dba, policy)
    if edge is not None:
        return edge
    if len(dab) + len(dba) == 0:
        return 0.0
    if AssdMode(mode) is AssdMode.POOLED_MEAN:
        return float((dab.distances.sum() + dba.distances.sum()) / (len(dab) + len(dba)))
    num = (dab.weights * dab.distances).sum() + (dba.weights * dba.distances).sum()
    return float(num / (dab.weights.sum() + dba.weights.sum()))


def nsd(dab: DistanceSet, dba: DistanceSet, tau: float = 2.0, mode=NsdMode.COUNT,
        policy=EdgePolicy.RELOADED) -> float:
    """Fraction of boundary within ``tau`` mm of the other boundary (inclusive)."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    edge = _edge("nsd", dab, dba, policy)
    if edge is not None:
        return edge
    if len(dab) + len(dba) == 0:
        return 1.0
    in_ab = dab.distances <= tau
    in_ba = dba.distances <= tau
    if NsdMode(mode) is NsdMode.COUNT:
        return float((np.count_nonzero(in_ab) + np.count_nonzero(in_ba)) / (len(dab) + len(dba)))
    num = dab.weights[in_ab].sum() + dba.weights[in_ba].sum()
    return float(num / (dab.weights.sum() + dba.weights.sum()))


# ---------------------------------------------------------------------------
# mask-level metrics

def inner_band(mask: GridMask, tau: float, spacing=None) -> np.ndarray:
    """Foreground elements within ``tau`` mm of a background element centre.

    Outside the grid counts as background.
    """
    spacing = mask.spacing if spacing is None else tuple(spacing)
    padded = np.pad(mask.data, 1, constant_values=False)
    field = edt(~padded, spacing=spacing, kind="band")
    inner = field.values[(slice(1, -1),) * mask.ndim]
    return mask.data & (inner <= tau)


def biou(a: GridMask, b: GridMask, tau: float = 2.0, policy=EdgePolicy.RELOADED,
         spacing=None) -> float:
    """IoU of the inward ``tau`` bands; ``spacing`` overrides the masks' spacing."""
    check_same_grid(a, b)
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if a.empty or b.empty:
        warnings.warn(f"biou: {edge_flag(a.empty, b.empty)}", EmptyMaskWarning, stacklevel=2)
        return edge_case("biou", a.empty, b.empty, policy)
    band_a = inner_band(a, tau, spacing)
    band_b = inner_band(b, tau, spacing)
    union = np.count_nonzero(band_a | band_b)
    if union == 0:
        # tau below the element size: no band on either side
        if EdgePolicy(policy) is EdgePolicy.ERROR:
            raise EmptyMaskError("biou", True, True, "both inner bands are empty")
        warnings.warn("biou: empty_bands", EmptyMaskWarning, stacklevel=2)
        return edge_case("biou", True, True, policy)
    return float(np.count_nonzero(band_a & band_b) / union)


def dsc(a: GridMask, b: GridMask, policy=EdgePolicy.RELOADED) -> float:
    check_same_grid(a, b)
    if a.empty or b.empty:
        warnings.warn(f"dsc: {edge_flag(a.empty, b.empty)}", EmptyMaskWarning, stacklevel=2)
        return edge_case("dsc", a.empty, b.empty, policy)
    inter = np.count_nonzero(a.data & b.data)
    return float(2 * inter / (a.count + b.count))


# ---------------------------------------------------------------------------
# combined pipeline

def effective_spacing(mask: GridMask, config: MetricConfig) -> tuple[float, ...]:
    if config.spacing_mode is SpacingMode.UNIT_FLAW:
        return (1.0,) * mask.ndim
    return mask.spacing


def directed_pair(a: GridMask, b: GridMask, mode: BoundaryMode) -> tuple[DistanceSet, DistanceSet]:
    """Both directed distance sets, with one EDT per direction.

    Centre-based modes use the element grid; the interface mode uses the
    half-shifted lattice, on which every face centre is a lattice point.
    """
    mode = BoundaryMode(mode)
    qa, qb = extract_pair(a, b, mode)
    ta, tb = target_set(a, qa, mode), target_set(b, qb, mode)
    lattice = "element" if mode.on_centres else "half"
    field_b = edt(tb, a.dims, lattice=lattice)
    dab = directed_distances(qa, via=field_b, direction="AB", mask_empty=False)
    del field_b
    field_a = edt(ta, a.dims, lattice=lattice)
    dba = directed_distances(qb, via=field_a, direction="BA", mask_empty=False)
    return dab, dba


def compute_all(a: GridMask, b: GridMask, config: MetricConfig | None = None,
                metrics=METRICS, crop: bool = True, margin: int = 1) -> MetricResult:
    """Evaluate ``metrics`` for one pair, sharing the two directed distance sets.

    Edge-case failures are recorded per metric and never abort the others.
    """
    config = config or MetricConfig()
    check_same_grid(a, b)
    metrics = tuple(metrics)
    unknown = set(metrics) - set(METRICS)
    if unknown:
        raise ValueError(f"unknown metrics {sorted(unknown)}")
    empty_a, empty_b = a.empty, b.empty
    result = MetricResult(empty_a=empty_a, empty_b=empty_b)
    spacing = effective_spacing(a, config)
    if crop:
        a, b, _ = crop_joint(a, b, margin)
    if spacing != a.spacing:
        a, b = a.with_spacing(spacing), b.with_spacing(spacing)

    if empty_a or empty_b:
        flag = edge_flag(empty_a, empty_b)
        for metric in metrics:
            try:
                result.values[metric] = edge_case(metric, empty_a, empty_b, config.edge_policy)
                result.warnings[metric] = flag
            except EmptyMaskError as exc:
                result.errors[metric] = str(exc)
        return result

    if any(m in DISTANCE_METRICS for m in metrics):
        dab, dba = directed_pair(a, b, config.boundary_mode)
    policy = config.edge_policy
    for metric in metrics:
        try:
            if metric == "hd":
                value = hd(dab, dba, policy)
            elif metric == "hdp":
                value = hdp(dab, dba, config.p, config.hdp_mode, policy)
            elif metric == "masd":
                value = masd(dab, dba, config.masd_mode, policy)
            elif metric == "assd":
                value = assd(dab, dba, config.assd_mode, policy)
            elif metric == "nsd":
                value = nsd(dab, dba, config.tau, config.nsd_mode, policy)
            elif metric == "biou":
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always", EmptyMaskWarning)
                    value = biou(a, b, config.tau, policy)
                if caught:
                    result.warnings[metric] = "empty_bands"
            else:
                value = dsc(a, b, policy)
        except EmptyMaskError as exc:
            result.errors[metric] = str(exc)
        else:
            result.values[metric] = value
    return result
