"""Acceptance criteria 1-11, one PASS/FAIL line each."""

import math
import time

import numpy as np
import pytest

from segdist.boundary import BoundaryMode
from segdist.cli import main
from segdist.distance import count_edt
from segdist.grid import GridMask
from segdist.harness.batch import run_batch
from segdist.harness.bench import bench, median_speedup
from segdist.harness.dataset import gen_dataset, make_pair
from segdist.harness.stats import compare_presets, deviation_records, wilcoxon_paired
from segdist.metrics import ABSOLUTE, METRICS, MetricConfig, compute_all
from segdist.oracle import oracle_all_metrics
from segdist.presets import PRESETS, evaluate, preset

from conftest import DYADIC, random_pair
from test_harness import enumerate_p

pytestmark = pytest.mark.slow

ISO = (0.5, 1.0, 2.0)
ANISO = ((0.5, 2.0), (0.07, 1.0), (1.25, 0.75), (0.5, 0.5, 2.0), (1.0, 0.07, 0.75), (2.0, 1.0, 0.5))
UNWEIGHTED = dict(hdp_mode="max_of_directed", masd_mode="mean_of_means",
                  assd_mode="pooled_mean", nsd_mode="count")


def oracle_pairs(seed=2024, count=200):
    """Seeded pairs: half 2D up to 64^2, half 3D up to 32^3, spacing iso or aniso."""
    rng = np.random.default_rng(seed)
    pairs = []
    for i in range(count):
        ndim = 2 if i % 2 == 0 else 3
        if rng.random() < 0.5:
            spacing = (float(rng.choice(ISO)),) * ndim
        else:
            choices = [s for s in ANISO if len(s) == ndim]
            spacing = choices[rng.integers(len(choices))]
        pairs.append(random_pair(rng, ndim=ndim, spacing=spacing))
    return pairs


@pytest.fixture(scope="module")
def pairs():
    return oracle_pairs()


def close(x, y, rel=1e-9):
    if math.isinf(y) or math.isnan(y):
        return x == y or (math.isnan(x) and math.isnan(y))
    return x == y or abs(x - y) <= rel * abs(y)


def test_c01_oracle_equivalence(pairs, verdict):
    start = time.perf_counter()
    checked, bad = 0, []
    for k, (a, b) in enumerate(pairs):
        for name, pr in PRESETS.items():
            for cfg, group in pr.groups():
                got = compute_all(a, b, cfg, group)
                want = oracle_all_metrics(a, b, cfg, group)
                for m in group:
                    checked += 1
                    if not close(got.values[m], want.values[m]):
                        bad.append((k, name, m, got.values[m], want.values[m]))
    elapsed = time.perf_counter() - start
    verdict("C1 oracle equivalence", not bad and elapsed < 300,
            f"{len(pairs)} pairs, {checked} values, {len(bad)} mismatches, {elapsed:.1f}s")


def test_c02_hd_identity(pairs, verdict):
    bad = 0
    for a, b in pairs:
        for mode in BoundaryMode:
            base = MetricConfig(boundary_mode=mode, **UNWEIGHTED)
            r = compute_all(a, b, base.replace(p=100.0), ("hd", "hdp")).values
            bad += r["hdp"] != r["hd"]
    # asymmetric pair: one direction is all zeros, the other has one far element
    x = np.zeros((8, 1), bool)
    y = np.zeros((8, 1), bool)
    x[0] = y[0] = y[7] = True
    cfg = preset("plastimatch").config.replace(p=100.0)
    r = compute_all(GridMask(x, (1, 1)), GridMask(y, (1, 1)), cfg, ("hd", "hdp")).values
    verdict("C2 HDp(100) == HD under MaxOfDirected; MeanOfDirected breaks it",
            bad == 0 and r["hdp"] < r["hd"],
            f"{bad} mismatches over {len(pairs) * len(BoundaryMode)} cases; "
            f"plastimatch HDp(100)={r['hdp']} < HD={r['hd']}")


def test_c03_symmetry(pairs, verdict):
    bad = 0
    for a, b in pairs[:100]:
        for name in PRESETS:
            ab, ba = evaluate(a, b, name).values, evaluate(b, a, name).values
            bad += sum(ab[m] != ba[m] for m in ab)
    verdict("C3 symmetry", bad == 0, f"100 pairs x 11 presets, {bad} asymmetric values")


def test_c04_scale_equivariance(verdict):
    rng = np.random.default_rng(404)
    bad = []
    for k in range(40):
        ndim = 2 + k % 2
        spacing = tuple(float(s) for s in rng.choice(DYADIC, size=ndim))
        a, b = random_pair(rng, ndim=ndim, max_2d=48, max_3d=24, spacing=spacing)
        a2, b2 = a.with_spacing([2 * s for s in spacing]), b.with_spacing([2 * s for s in spacing])
        for name, pr in PRESETS.items():
            r1 = evaluate(a, b, name, tau=2.0).values
            r2 = evaluate(a2, b2, name, tau=4.0).values
            flaw = pr.config.spacing_mode.value == "unit_flaw"
            for m, v in r1.items():
                if m in ABSOLUTE and not flaw:
                    ok = close(r2[m], 2 * v, 1e-12)
                else:
                    # relative metrics; the spacing-blind preset is invariant by design
                    ok = r2[m] == v
                if not ok:
                    bad.append((k, name, m, v, r2[m]))
    verdict("C4 scale equivariance", not bad, f"40 pairs x 11 presets, {len(bad)} violations")


def test_c05_hd_boundary_mode_stability(pairs, verdict):
    face = MetricConfig(boundary_mode="erode_face", **UNWEIGHTED)
    inter = MetricConfig()
    worst = 0.0
    for a, b in pairs:
        diag = math.sqrt(sum(s * s for s in a.spacing))
        gap = abs(compute_all(a, b, face, ("hd",)).values["hd"] - compute_all(a, b, inter, ("hd",)).values["hd"])
        worst = max(worst, gap / diag)
    verdict("C5 |HD(ErodeFace) - HD(Interface)| <= element diagonal", worst <= 1.0,
            f"largest gap {worst:.3f} diagonals")


def test_c06_foreground_bias(verdict):
    rng = np.random.default_rng(606)
    fg = MetricConfig(boundary_mode="foreground_all", **UNWEIGHTED)
    face = MetricConfig(boundary_mode="erode_face", **UNWEIGHTED)
    deltas = {"masd": [], "assd": [], "hdp": []}
    dscs = []
    for k in range(50):
        dims = (48, 48) if k % 2 == 0 else (24, 24, 24)
        ref, pred = make_pair(rng, dims, level=0.15, fill=0.6)
        a, b = GridMask(ref, (1.0,) * len(dims)), GridMask(pred, (1.0,) * len(dims))
        r_fg = compute_all(a, b, fg, ("masd", "assd", "hdp", "dsc")).values
        r_face = compute_all(a, b, face, ("masd", "assd", "hdp")).values
        dscs.append(r_fg["dsc"])
        for m in deltas:
            deltas[m].append(r_fg[m] - r_face[m])
    means = {m: float(np.mean(v)) for m, v in deltas.items()}
    verdict("C6 ForegroundAll biases MASD/ASSD/HD95 downward",
            all(v < 0 for v in means.values()),
            f"mean DSC {np.mean(dscs):.3f}; mean deltas " +
            ", ".join(f"{'hd95' if m == 'hdp' else m}={v:.3f}" for m, v in means.items()))


def test_c07_spacing_flaw(verdict):
    rng = np.random.default_rng(707)
    bad = 0
    for _ in range(20):
        a, b = random_pair(rng, ndim=3, max_3d=24, spacing=(1.0, 1.0, 1.0))
        at1 = evaluate(a, b, "monai").values["hd"]
        at2 = evaluate(a.with_spacing((2, 2, 2)), b.with_spacing((2, 2, 2)), "miseval").values["hd"]
        bad += at1 != at2
    verdict("C7 miseval HD at (2,2,2) equals ErodeFace HD at (1,1,1)", bad == 0, f"20 pairs, {bad} differ")


def test_c08_edge_table(verdict):
    empty = GridMask(np.zeros((6, 6), bool), (1, 1))
    full = np.zeros((6, 6), bool)
    full[1:4, 2:5] = True
    full = GridMask(full, (1, 1))
    bad = []
    for a, b, flag in ((empty, full, "empty_a"), (full, empty, "empty_b"), (empty, empty, "empty_both")):
        res = evaluate(a, b, "metricsreloaded", edge_policy="reloaded")
        both = flag == "empty_both"
        for m in METRICS:
            want = (0.0 if both else math.inf) if m in ABSOLUTE else (1.0 if both else 0.0)
            if res.values[m] != want or res.flag(m) != flag:
                bad.append((flag, m, res.values[m], res.flag(m)))
    verdict("C8 edge-case table (reloaded)", not bad, f"3 cases x 7 metrics, {len(bad)} wrong")


def test_c09_divergence_significance(tmp_path, verdict):
    manifest = gen_dataset(tmp_path, seed=909, count=100, dims=(24, 24, 24), level=0.4)
    spacings = [(1.0, 1.0, 1.0), (2.0, 2.0, 2.0), (0.5, 0.5, 2.0)]
    rows = run_batch(manifest, ["gdm", "medpy", "monai"], spacings)
    comps = compare_presets(deviation_records(rows, "gdm"))
    hd95 = [c for c in comps if c.metric == "hdp" and {c.preset_a, c.preset_b} == {"medpy", "monai"}]
    recs = [r for r in deviation_records(rows, "gdm") if r.metric == "hdp" and r.preset in ("medpy", "monai")]
    nonzero = any(r.delta != 0 for r in recs)
    sig = all(c.result.significant for c in hd95)
    # the test itself against sign enumeration
    rng = np.random.default_rng(9)
    enum_bad = 0
    for n in range(1, 13):
        d = np.round(rng.normal(0.4, 1.0, n), 1)
        r = wilcoxon_paired(d, np.zeros(n))
        enum_bad += r.n > 0 and abs(r.p_value - min(1.0, enumerate_p(d))) > 1e-12
    detail = "; ".join(f"{c.spacing}: p={c.result.p_value:.2e} n={c.result.n}" for c in hd95)
    verdict("C9 Pooled vs MaxOfDirected HD95 significant after Bonferroni",
            nonzero and sig and len(hd95) == 3 and enum_bad == 0,
            f"{len(comps)} tests; {detail}; enumeration mismatches {enum_bad}")


def test_c10_efficiency(tmp_path, verdict):
    manifest = gen_dataset(tmp_path, seed=1010, count=4, dims=(128, 128, 128), level=0.3, fill=0.12)
    rows = bench(manifest, ["gdm"], repetitions=2)
    speedup = median_speedup(rows, "gdm")
    # EDT reuse: at most two boundary EDTs per pair per configuration
    rng = np.random.default_rng(10)
    worst = 0
    for _ in range(5):
        a, b = random_pair(rng, ndim=3, max_3d=24, kind="blob")
        for pr in PRESETS.values():
            for cfg, _group in pr.groups():
                with count_edt() as c:
                    compute_all(a, b, cfg, METRICS)
                worst = max(worst, c["boundary"])
    verdict("C10 crop speedup >= 2x and <= 2 boundary EDTs per config", speedup >= 2.0 and worst <= 2,
            f"median speedup x{speedup:.2f} on 128^3, max boundary EDTs {worst}")


def test_c11_determinism(tmp_path, verdict):
    outputs = []
    for run in ("one", "two"):
        d = tmp_path / run
        assert main(["gen", "--out", str(d / "data"), "--seed", "11", "--count", "6",
                     "--dims", "16,16,12", "--empty-fraction", "0.17"]) == 0
        assert main(["batch", "--manifest", str(d / "data" / "manifest.csv"), "--presets", "all",
                     "--spacing", "default3d", "--seed", "11", "--out", str(d / "results.csv")]) == 0
        assert main(["compare", "--results", str(d / "results.csv"), "--reference", "gdm",
                     "--manifest", str(d / "data" / "manifest.csv"), "--out", str(d / "summary.csv"),
                     "--records-out", str(d / "records.csv"), "--wilcoxon-out", str(d / "wilcoxon.csv")]) == 0
        outputs.append({name: (d / name).read_bytes()
                        for name in ("results.csv", "summary.csv", "records.csv", "wilcoxon.csv")})
    same = outputs[0] == outputs[1]
    verdict("C11 byte-identical batch and compare CSVs", same,
            ", ".join(f"{k} {len(v)}B" for k, v in outputs[0].items()))
