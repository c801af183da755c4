import csv
import json
import subprocess
import sys

import pytest

from segdist.cli import main


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["gen", "--out", str(root / "d"), "--seed", "1", "--count", "3",
                 "--dims", "12,10,8", "--level", "0.4"]) == 0
    return root


def test_compute_json(data, capsys):
    masks = data / "d" / "masks"
    rc = main(["compute", "--ref", str(masks / "pair0000_ref.hdr"), "--pred", str(masks / "pair0000_pred.hdr"),
               "--preset", "gdm", "--tau", "2", "--p", "95"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["preset"] == "gdm" and doc["config"]["boundary_mode"] == "interface"
    supported = [m for m, v in doc["metrics"].items() if v["flag"] != "unsupported"]
    assert supported == ["hd", "hdp", "masd", "assd", "nsd", "dsc"]
    assert doc["metrics"]["biou"]["value"] is None
    assert all(isinstance(doc["metrics"][m]["value"], float) for m in supported)


def test_compute_empty_strict(tmp_path, capsys):
    assert main(["gen", "--out", str(tmp_path), "--count", "1", "--dims", "8,8", "--empty-fraction", "1"]) == 0
    capsys.readouterr()
    args = ["compute", "--ref", str(tmp_path / "masks/pair0000_ref.hdr"),
            "--pred", str(tmp_path / "masks/pair0000_pred.hdr"), "--preset", "monai"]
    assert main(args) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["metrics"]["hd"] == {"value": "inf", "flag": "empty_b"}
    assert main(args + ["--edge-policy", "error", "--strict"]) == 1


def test_batch_compare_files(data, tmp_path):
    manifest = data / "d" / "manifest.csv"
    results = tmp_path / "r.csv"
    assert main(["batch", "--manifest", str(manifest), "--presets", "all",
                 "--spacing", "1,1,1;2,2,2", "--out", str(results)]) == 0
    with open(results) as fh:
        rows = list(csv.DictReader(fh))
    assert {r["preset"] for r in rows} >= {"gdm", "medpy", "simpleitk"}
    assert {r["spacing"] for r in rows} == {"1x1x1", "2x2x2"}
    summary = tmp_path / "s.csv"
    wil = tmp_path / "w.csv"
    assert main(["compare", "--results", str(results), "--reference", "gdm", "--manifest", str(manifest),
                 "--out", str(summary), "--wilcoxon-out", str(wil)]) == 0
    lines = summary.read_text().splitlines()
    assert lines[0].startswith("#") and lines[1] == "metric,preset,spacing,stratum,n,excluded,min,max,mean,sd"
    body = list(csv.DictReader(lines[1:]))
    gdm_rows = [r for r in body if r["preset"] == "gdm"]
    assert gdm_rows and all(float(r["sd"]) == 0.0 for r in gdm_rows)
    assert wil.read_text().splitlines()[1].startswith("metric,spacing,preset_a,preset_b")


def test_bench_output(data, tmp_path):
    out = tmp_path / "t.csv"
    assert main(["bench", "--manifest", str(data / "d" / "manifest.csv"), "--repetitions", "1",
                 "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "pair_id,preset,crop,repetitions,median_s,boundary_edts,band_edts"


@pytest.mark.parametrize("argv", [
    ["compute", "--bogus"],
    ["batch", "--manifest", "m.csv", "--presets", "nosuch"],
    ["compute", "--ref", "a", "--pred", "b", "--p", "0"],
    ["gen", "--out", "x", "--dims", "1,2,3,4"],
    [],
])
def test_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_runtime_error_exit_1(tmp_path, capsys):
    rc = main(["compute", "--ref", str(tmp_path / "no.hdr"), "--pred", str(tmp_path / "no.hdr")])
    assert rc == 1 and "error" in capsys.readouterr().err


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "segdist", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "compute" in out.stdout
