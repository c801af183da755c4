import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from segdist.grid import (
    GridMask,
    MaskFormatError,
    crop_joint,
    load_mask,
    raw_path_for,
    resample_nn,
    resampled_dims,
    save_mask,
)
from segdist.metrics import compute_all, MetricConfig
from segdist.boundary import BoundaryMode

from conftest import random_pair


def write_pair(tmp_path, header, raw: bytes, name="m.hdr"):
    path = tmp_path / name
    path.write_text(header)
    raw_path_for(path).write_bytes(raw)
    return path


def test_gridmask_invariants():
    with pytest.raises(ValueError):
        GridMask(np.zeros((2, 2)), (1.0,))
    with pytest.raises(ValueError):
        GridMask(np.zeros((2, 2)), (1.0, 0.0))
    with pytest.raises(ValueError):
        GridMask(np.zeros(4), (1.0,))
    m = GridMask(np.zeros((2, 3)), (1, 2))
    assert m.dims == (2, 3) and m.spacing == (1.0, 2.0)
    with pytest.raises(ValueError):
        m.data[0, 0] = True


def test_load_two_foreground(tmp_path):
    path = write_pair(tmp_path, "dims = 2 2\nspacing = 1 1\ndtype = uint8\norder = C\n",
                      bytes([1, 1, 0, 0]))
    m = load_mask(path)
    assert m.count == 2
    assert m.data.tolist() == [[True, True], [False, False]]


def test_load_wrong_length(tmp_path):
    path = write_pair(tmp_path, "dims = 2 2\nspacing = 1 1\ndtype = uint8\norder = C\n",
                      bytes([1, 1, 0]))
    with pytest.raises(MaskFormatError, match="expected 4 bytes.*got 3"):
        load_mask(path)


def test_load_empty_3d_anisotropic(tmp_path):
    path = write_pair(tmp_path, "dims = 3 3 3\nspacing = 0.5 0.5 2.0\ndtype = uint8\norder = C\n",
                      bytes(27))
    m = load_mask(path)
    assert m.dims == (3, 3, 3) and m.spacing == (0.5, 0.5, 2.0) and m.empty


def test_load_rejects_bad_byte_in_strict_mode(tmp_path):
    path = write_pair(tmp_path, "dims = 2 2\nspacing = 1 1\ndtype = uint8\norder = C\n",
                      bytes([0, 1, 7, 0]))
    with pytest.raises(MaskFormatError, match="byte 2 has value 7"):
        load_mask(path)
    assert load_mask(path, strict=False).count == 2


@pytest.mark.parametrize("header", [
    "dims = 2 2\nspacing = 1 1\ndtype = int16\norder = C\n",
    "dims = 2 2\nspacing = 1 1\ndtype = uint8\norder = F\n",
    "dims = 2 2\nspacing = 1 1\ndtype = uint8\n",
    "dims = 2 2\nspacing = 1\ndtype = uint8\norder = C\n",
    "dims 2 2\n",
])
def test_load_rejects_bad_header(tmp_path, header):
    path = write_pair(tmp_path, header, bytes(4))
    with pytest.raises(MaskFormatError):
        load_mask(path)


def test_load_missing_files(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_mask(tmp_path / "nope.hdr")
    (tmp_path / "x.hdr").write_text("dims = 1 1\nspacing = 1 1\ndtype = uint8\norder = C\n")
    with pytest.raises(FileNotFoundError, match="raw"):
        load_mask(tmp_path / "x.hdr")


def test_roundtrip_with_label(tmp_path):
    m = GridMask(np.eye(3, dtype=bool), (0.07, 1.0), "lesion")
    save_mask(m, tmp_path / "m.hdr")
    back = load_mask(tmp_path / "m.hdr")
    assert back == m and back.label == "lesion"


def test_roundtrip_empty(tmp_path):
    m = GridMask(np.zeros((4, 5, 6), bool), (1, 1, 1))
    save_mask(m, tmp_path / "e.hdr")
    assert load_mask(tmp_path / "e.hdr") == m


def test_resave_64cube_byte_identical(tmp_path):
    rng = np.random.default_rng(7)
    m = GridMask(rng.random((64, 64, 64)) < 0.5, (0.5, 0.5, 2.0))
    save_mask(m, tmp_path / "a.hdr")
    save_mask(load_mask(tmp_path / "a.hdr"), tmp_path / "b.hdr")
    raw_a = (tmp_path / "a.raw").read_bytes()
    assert raw_a == (tmp_path / "b.raw").read_bytes()
    assert raw_a == m.data.astype(np.uint8).tobytes()
    assert (tmp_path / "a.hdr").read_text() == (tmp_path / "b.hdr").read_text()


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 3).flatmap(lambda nd: st.tuples(
    st.lists(st.integers(1, 6), min_size=nd, max_size=nd),
    st.lists(st.sampled_from([0.07, 0.5, 1.0, 2.0, 3.3]), min_size=nd, max_size=nd),
    st.integers(0, 2**32 - 1))))
def test_roundtrip_property(tmp_path_factory, args):
    dims, spacing, seed = args
    data = np.random.default_rng(seed).random(dims) < 0.5
    m = GridMask(data, spacing)
    path = tmp_path_factory.mktemp("rt") / "m.hdr"
    save_mask(m, path)
    assert load_mask(path) == m


# -- resampling

def test_resample_identity():
    m = GridMask(np.random.default_rng(0).random((5, 7)) < 0.5, (0.5, 2.0))
    out = resample_nn(m, (0.5, 2.0))
    assert out == m


def test_resample_constant_field():
    m = GridMask(np.ones((4, 4), bool), (1, 1))
    out = resample_nn(m, (2, 2))
    assert out.dims == (2, 2) and out.data.all() and out.spacing == (2.0, 2.0)


def test_resample_nn_rule_by_hand():
    # output centres at 1.0 and 3.0 mm from the grid corner fall on the
    # midpoints between inputs 0|1 and 2|3; ties go to the lower index
    m = GridMask(np.array([[1], [1], [0], [0]], bool), (1, 1))
    out = resample_nn(m, (2, 1))
    assert out.dims == (2, 1)
    assert out.data[:, 0].tolist() == [True, False]


def test_resample_upsampling_repeats_elements():
    m = GridMask(np.array([[1, 0, 1]], bool), (1, 1))
    out = resample_nn(m, (1, 0.5))
    assert out.data.tolist() == [[True, True, False, False, True, True]]


def test_resample_dims_formula_random():
    rng = np.random.default_rng(3)
    for _ in range(100):
        nd = int(rng.integers(2, 4))
        dims = tuple(int(n) for n in rng.integers(1, 40, size=nd))
        spacing = tuple(float(s) for s in rng.uniform(0.05, 3.0, size=nd))
        target = tuple(float(s) for s in rng.uniform(0.05, 3.0, size=nd))
        m = GridMask(np.zeros(dims, bool), spacing)
        out = resample_nn(m, target)
        expected = tuple(max(1, math.floor(n * s / t + 0.5)) for n, s, t in zip(dims, spacing, target))
        assert out.dims == expected == resampled_dims(dims, spacing, target)


def test_resample_rejects_bad_target():
    m = GridMask(np.zeros((2, 2), bool), (1, 1))
    with pytest.raises(ValueError):
        resample_nn(m, (1, 0))
    with pytest.raises(ValueError):
        resample_nn(m, (1, 1, 1))


# -- cropping

def test_crop_full_masks_is_noop():
    a = GridMask(np.ones((4, 5), bool), (1, 1))
    c = crop_joint(a, a, margin=1)
    assert c.offset == (0, 0) and c.a == a and c.b == a and not c.empty


def test_crop_single_element():
    data = np.zeros((10, 10), bool)
    data[5, 5] = True
    a = GridMask(data, (1, 1))
    c = crop_joint(a, a, margin=1)
    assert c.a.dims == (3, 3) and c.offset == (4, 4)
    assert c.a.data[1, 1] and c.a.count == 1


def test_crop_both_empty_is_degenerate():
    a = GridMask(np.zeros((6, 6, 6), bool), (1, 1, 1))
    c = crop_joint(a, a)
    assert c.empty and c.a.dims == (1, 1, 1)


def test_crop_requires_shared_grid():
    a = GridMask(np.zeros((3, 3), bool), (1, 1))
    with pytest.raises(ValueError):
        crop_joint(a, GridMask(np.zeros((3, 3), bool), (1, 2)))


@pytest.mark.parametrize("mode", list(BoundaryMode))
def test_crop_preserves_metrics(mode):
    rng = np.random.default_rng(11)
    config_kwargs = {}
    if mode is not BoundaryMode.INTERFACE:
        config_kwargs = dict(hdp_mode="max_of_directed", masd_mode="mean_of_means",
                             assd_mode="pooled_mean", nsd_mode="count")
    cfg = MetricConfig(boundary_mode=mode, **config_kwargs)
    for _ in range(8):
        a, b = random_pair(rng, max_2d=40, max_3d=16)
        # embed in a larger grid so that cropping actually removes something
        pad = [(3, 5)] * a.ndim
        a = GridMask(np.pad(a.data, pad), a.spacing)
        b = GridMask(np.pad(b.data, pad), b.spacing)
        full = compute_all(a, b, cfg, crop=False)
        for margin in (1, 2):
            cropped = compute_all(a, b, cfg, crop=True, margin=margin)
            for m, v in full.values.items():
                assert cropped.values[m] == pytest.approx(v, rel=1e-12, abs=0), m
