"""Named configurations reproducing the definitional choices of surveyed tools."""

from __future__ import annotations

from dataclasses import dataclass, field

from .boundary import BoundaryMode as B
from .grid import GridMask
from .metrics import (
    METRICS,
    AssdMode,
    EdgePolicy,
    HdpMode,
    MasdMode,
    MetricConfig,
    MetricResult,
    NsdMode,
    SpacingMode,
    compute_all,
)


class UnknownPresetError(KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")

    def __str__(self):
        return self.args[0]


@dataclass(frozen=True)
class Preset:
    name: str
    config: MetricConfig
    supported: tuple[str, ...]
    fixed_p: float | None = None
    # metric -> MetricConfig field overrides for tools that mix extraction methods
    overrides: dict = field(default_factory=dict)
    notes: tuple[str, ...] = ()

    def supports(self, metric: str) -> bool:
        return metric in self.supported

    def configure(self, p=None, tau=None, edge_policy=None) -> Preset:
        """Copy with user parameters applied; a fixed percentile is kept."""
        changes = {}
        if p is not None and self.fixed_p is None:
            changes["p"] = p
        if tau is not None:
            changes["tau"] = tau
        if edge_policy is not None:
            changes["edge_policy"] = edge_policy
        if not changes:
            return self
        return Preset(self.name, self.config.replace(**changes), self.supported,
                      self.fixed_p, self.overrides, self.notes)

    def config_for(self, metric: str) -> MetricConfig:
        over = self.overrides.get(metric)
        return self.config.replace(**over) if over else self.config

    def groups(self, metrics=METRICS) -> list[tuple[MetricConfig, tuple[str, ...]]]:
        """Supported metrics grouped by the configuration that computes them."""
        out: dict[MetricConfig, list[str]] = {}
        for metric in metrics:
            if self.supports(metric):
                out.setdefault(self.config_for(metric), []).append(metric)
        return [(cfg, tuple(ms)) for cfg, ms in out.items()]


def _cfg(boundary, hdp=HdpMode.MAX_OF_DIRECTED, masd=MasdMode.MEAN_OF_MEANS,
         assd=AssdMode.POOLED_MEAN, nsd=NsdMode.COUNT, spacing=SpacingMode.PHYSICAL, p=95.0):
    return MetricConfig(boundary_mode=boundary, spacing_mode=spacing, hdp_mode=hdp,
                        masd_mode=masd, assd_mode=assd, nsd_mode=nsd, p=p)


_WEIGHTED = dict(hdp=HdpMode.WEIGHTED_MAX_OF_DIRECTED, masd=MasdMode.WEIGHTED_MEAN,
                 assd=AssdMode.WEIGHTED_POOLED_MEAN, nsd=NsdMode.WEIGHTED_AREA)

PRESETS: dict[str, Preset] = {
    p.name: p for p in [
        Preset("anima", _cfg(B.ERODE_FACE, masd=MasdMode.MAX_OF_MEANS),
               ("hd", "masd", "assd", "dsc"),
               notes=("MASD is the maximum of the two directed means",)),
        Preset("evaluatesegmentation", _cfg(B.FOREGROUND_NON_OVERLAP, hdp=HdpMode.POOLED),
               ("hd", "hdp", "masd", "dsc"), fixed_p=95.0,
               notes=("queries only non-overlapping foreground elements",
                      "non-deterministic optimisation of the original is not emulated")),
        Preset("gdm", _cfg(B.INTERFACE, **_WEIGHTED),
               ("hd", "hdp", "masd", "assd", "nsd", "dsc"),
               notes=("face-centre interface points with exact face measures stand in "
                      "for the marching-cubes surfel lookup",)),
        Preset("medpy", _cfg(B.ERODE_FACE, hdp=HdpMode.POOLED),
               ("hd", "hdp", "assd", "dsc"), fixed_p=95.0),
        Preset("metricsreloaded", _cfg(B.ERODE_FACE),
               ("hd", "hdp", "masd", "assd", "nsd", "biou", "dsc"),
               notes=("BIoU spacing flaw is reproducible with spacing_mode=unit_flaw",)),
        Preset("miseval", _cfg(B.ERODE_FACE, spacing=SpacingMode.UNIT_FLAW),
               ("hd", "dsc"),
               notes=("ignores element spacing for all distances",)),
        Preset("monai", _cfg(B.ERODE_FACE), ("hd", "hdp", "assd", "nsd", "dsc")),
        Preset("plastimatch", _cfg(B.ERODE_FACE, hdp=HdpMode.MEAN_OF_DIRECTED),
               ("hd", "hdp", "masd", "dsc"), fixed_p=95.0,
               notes=("HDp averages the two directed percentiles",)),
        Preset("pymia", _cfg(B.INTERFACE, hdp=HdpMode.WEIGHTED_MAX_OF_DIRECTED,
                             nsd=NsdMode.WEIGHTED_AREA),
               ("hd", "hdp", "masd", "nsd", "dsc"),
               overrides={"masd": {"boundary_mode": B.FOREGROUND_ALL,
                                  "hdp_mode": HdpMode.MAX_OF_DIRECTED,
                                  "nsd_mode": NsdMode.COUNT}},
               notes=("MASD uses all foreground elements",
                      "2D path of the original differs; interface extraction is used "
                      "for both ranks (approximate)")),
        Preset("segmetrics", _cfg(B.ERODE_FULL, hdp=HdpMode.POOLED),
               ("hd", "hdp", "assd", "dsc"), fixed_p=95.0),
        Preset("simpleitk", _cfg(B.FOREGROUND_ALL), ("hd", "masd", "dsc")),
    ]
}

PRESET_NAMES = tuple(sorted(PRESETS))
REFERENCE_PRESET = "gdm"


def preset(name: str) -> Preset:
    try:
        return PRESETS[name.lower()]
    except KeyError:
        raise UnknownPresetError(name) from None


def evaluate(a: GridMask, b: GridMask, name_or_preset, p=None, tau=None,
             edge_policy: EdgePolicy | str | None = None, metrics=METRICS,
             crop: bool = True) -> MetricResult:
    """Compute every supported metric of a preset; the rest are marked unsupported."""
    pr = name_or_preset if isinstance(name_or_preset, Preset) else preset(name_or_preset)
    pr = pr.configure(p=p, tau=tau, edge_policy=edge_policy)
    result = MetricResult(empty_a=a.empty, empty_b=b.empty,
                          unsupported=tuple(m for m in metrics if not pr.supports(m)))
    for cfg, group in pr.groups(metrics):
        result = result.merge(compute_all(a, b, cfg, group, crop=crop))
    if p is not None and pr.fixed_p is not None and float(p) != pr.fixed_p and "hdp" in result.values:
        result.warnings.setdefault("hdp", f"fixed_p{pr.fixed_p:g}")
    return result
