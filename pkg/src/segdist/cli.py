"""Command-line interface: ``segdist {gen,compute,batch,compare,bench}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .grid import load_mask, resample_nn
from .harness.batch import (
    DEFAULT_SPACINGS_2D,
    DEFAULT_SPACINGS_3D,
    parse_spacing,
    parse_spacings,
    read_results,
    run_batch,
    write_results,
)
from .harness.bench import bench, median_speedup, write_timings
from .harness.dataset import gen_dataset, read_manifest
from .harness.stats import (
    compare_presets,
    deviations,
    write_comparisons,
    write_records,
    write_summary,
)
from .metrics import EdgePolicy
from .presets import PRESET_NAMES, REFERENCE_PRESET, UnknownPresetError, evaluate, preset


def _dims(text):
    try:
        dims = tuple(int(v) for v in text.replace("x", ",").split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid dims {text!r}") from None
    if len(dims) not in (2, 3) or min(dims) < 1:
        raise argparse.ArgumentTypeError(f"dims must be 2 or 3 positive integers, got {text!r}")
    return dims


def _spacing(text):
    try:
        return parse_spacing(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _spacings(text):
    if text in ("default2d", "default3d"):
        return list(DEFAULT_SPACINGS_2D if text == "default2d" else DEFAULT_SPACINGS_3D)
    try:
        return parse_spacings(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _presets(text):
    names = [n.strip().lower() for n in text.split(",") if n.strip()]
    if names == ["all"]:
        return list(PRESET_NAMES)
    for n in names:
        if n not in PRESET_NAMES:
            raise argparse.ArgumentTypeError(f"unknown preset {n!r}; choose from {', '.join(PRESET_NAMES)}")
    return names


def _on_off(text):
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return text == "on"


def _positive(kind):
    def parse(text):
        value = kind(text)
        if value <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value
    return parse


def _add_metric_params(sp):
    sp.add_argument("--p", type=float, default=95.0, help="percentile for HDp (default 95)")
    sp.add_argument("--tau", type=_positive(float), default=2.0, help="tolerance in mm (default 2)")
    sp.add_argument("--edge-policy", choices=[e.value for e in EdgePolicy], default="reloaded")
    sp.add_argument("--crop", type=_on_off, default=True, metavar="on|off")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="segdist", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("gen", help="generate a synthetic dataset")
    sp.add_argument("--out", required=True, type=Path)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--count", type=_positive(int), default=10)
    sp.add_argument("--dims", type=_dims, default=(64, 64))
    sp.add_argument("--spacing", type=_spacing, default=None)
    sp.add_argument("--level", type=float, default=0.3, help="perturbation level")
    sp.add_argument("--fill", type=float, default=0.6, help="blob extent per axis (fraction)")
    sp.add_argument("--empty-fraction", type=float, default=0.0)

    sp = sub.add_parser("compute", help="metrics for one pair as JSON")
    sp.add_argument("--ref", required=True, type=Path)
    sp.add_argument("--pred", required=True, type=Path)
    sp.add_argument("--preset", type=str.lower, choices=PRESET_NAMES, default=REFERENCE_PRESET)
    sp.add_argument("--spacing", type=_spacing, default=None, help="resample both masks first")
    sp.add_argument("--out", type=Path, default=None)
    sp.add_argument("--strict", action="store_true")
    _add_metric_params(sp)

    sp = sub.add_parser("batch", help="evaluate a manifest across presets and spacings")
    sp.add_argument("--manifest", required=True, type=Path)
    sp.add_argument("--presets", "--preset", dest="presets", type=_presets, default=list(PRESET_NAMES))
    sp.add_argument("--spacing", type=_spacings, default=None,
                    help="semicolon-separated spacings, e.g. '1,1,1;2,2,2;0.5,0.5,2', "
                         "or default2d/default3d")
    sp.add_argument("--out", type=Path, default=None)
    sp.add_argument("--jobs", type=_positive(int), default=1)
    sp.add_argument("--seed", type=int, default=0, help="accepted for uniformity; batch is deterministic")
    sp.add_argument("--strict", action="store_true")
    _add_metric_params(sp)

    sp = sub.add_parser("compare", help="deviations of a batch CSV against a reference preset")
    sp.add_argument("--results", required=True, type=Path)
    sp.add_argument("--reference", type=str.lower, choices=PRESET_NAMES, default=REFERENCE_PRESET)
    sp.add_argument("--manifest", type=Path, default=None, help="adds per-tag strata")
    sp.add_argument("--out", type=Path, default=None)
    sp.add_argument("--records-out", type=Path, default=None)
    sp.add_argument("--wilcoxon-out", type=Path, default=None)
    sp.add_argument("--corrections", type=_positive(int), default=None,
                    help="Bonferroni denominator (default: number of tests run)")

    sp = sub.add_parser("bench", help="time preset evaluation with crop on and off")
    sp.add_argument("--manifest", required=True, type=Path)
    sp.add_argument("--presets", "--preset", dest="presets", type=_presets, default=[REFERENCE_PRESET])
    sp.add_argument("--repetitions", type=_positive(int), default=3)
    sp.add_argument("--crop", choices=("on", "off", "both"), default="both")
    sp.add_argument("--spacing", type=_spacing, default=None)
    sp.add_argument("--out", type=Path, default=None)
    return parser


def _cmd_gen(args):
    manifest = gen_dataset(args.out, seed=args.seed, count=args.count, dims=args.dims,
                           spacing=args.spacing, level=args.level, fill=args.fill,
                           empty_fraction=args.empty_fraction)
    print(manifest)
    return 0


def _cmd_compute(args):
    a, b = load_mask(args.ref), load_mask(args.pred)
    if args.spacing is not None:
        a, b = resample_nn(a, args.spacing), resample_nn(b, args.spacing)
    result = evaluate(a, b, args.preset, p=args.p, tau=args.tau,
                      edge_policy=args.edge_policy, crop=args.crop)
    pr = preset(args.preset)
    doc = {
        "preset": pr.name,
        "config": pr.configure(p=args.p, tau=args.tau, edge_policy=args.edge_policy).config.to_dict(),
        "spacing": list(a.spacing),
        **result.to_dict(),
    }
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return 1 if args.strict and result.errors else 0


def _cmd_batch(args):
    rows = run_batch(args.manifest, args.presets, args.spacing, p=args.p, tau=args.tau,
                     edge_policy=args.edge_policy, crop=args.crop, jobs=args.jobs)
    if args.out:
        write_results(args.out, rows)
    else:
        write_results(sys.stdout, rows)
    errors = sum(r.is_error for r in rows)
    if errors:
        print(f"segdist: {errors} row(s) with errors", file=sys.stderr)
    return 1 if args.strict and errors else 0


def _cmd_compare(args):
    rows = read_results(args.results)
    tags = {e.id: e.tag for e in read_manifest(args.manifest)} if args.manifest else None
    records, summary = deviations(rows, args.reference, tags)
    write_summary(args.out if args.out else sys.stdout, summary)
    if args.records_out:
        write_records(args.records_out, records)
    if args.wilcoxon_out:
        write_comparisons(args.wilcoxon_out, compare_presets(records, args.corrections))
    return 0


def _cmd_bench(args):
    crops = {"on": (True,), "off": (False,), "both": (True, False)}[args.crop]
    rows = bench(args.manifest, args.presets, args.repetitions, crops, args.spacing)
    write_timings(args.out if args.out else sys.stdout, rows)
    if args.crop == "both":
        for name in args.presets:
            print(f"{name}: crop speedup x{median_speedup(rows, name):.2f}", file=sys.stderr)
    return 0


COMMANDS = {"gen": _cmd_gen, "compute": _cmd_compute, "batch": _cmd_batch,
            "compare": _cmd_compare, "bench": _cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "p", None) is not None and not 0 < args.p <= 100:
        parser.error("--p must lie in (0, 100]")
    try:
        return COMMANDS[args.command](args)
    except (OSError, ValueError, UnknownPresetError) as exc:
        print(f"segdist: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
