import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.signal import convolve2d

from gazehrl.ingest import EpisodeLog, FrameRecord, GazeSample, StateLabel
from gazehrl.saliency import (
    SaliencyConfig,
    SaliencyMap,
    fixation_map,
    gaussian_blur,
    gaussian_kernel,
    normalize,
    read_pgm,
    saliency_map,
    threshold_mask,
    write_pgm,
)
from oracles import gaussian_2d


def log_with(points, w=160, h=210):
    frames = tuple(FrameRecord(i, 0, (GazeSample(float(i), x, y),), StateLabel(0, 0, 1, 0, 0)) for i, (x, y) in enumerate(points))
    if not frames:
        frames = (FrameRecord(0, 0, (), StateLabel(0, 0, 1, 0, 0)),)
    return EpisodeLog("e", w, h, frames)


def impulse(h, w, y, x, v=1.0):
    m = np.zeros((h, w))
    m[y, x] = v
    return SaliencyMap(m)


maps_st = st.integers(0, 10**6).map(lambda s: np.random.default_rng(s).poisson(0.05, (30, 40)).astype(float))


def test_config_defaults_and_validation():
    cfg = SaliencyConfig()
    assert cfg.sigma == 10.0 and cfg.threshold == 0.4
    assert SaliencyConfig(px_per_degree=7).sigma == 7
    with pytest.raises(ValueError):
        SaliencyConfig(sigma_px=0)
    with pytest.raises(ValueError):
        SaliencyConfig(threshold=1.0)


def test_fixation_map_counts():
    assert fixation_map(log_with([])).values.sum() == 0
    m = fixation_map(log_with([(10, 10)] * 3)).values
    assert m[10, 10] == 3 and m.sum() == 3
    m = fixation_map(log_with([(10, 10), (20, 20)])).values
    assert m[10, 10] == 1 and m[20, 20] == 1 and m.sum() == 2


def test_fixation_map_floors_subpixel_coordinates():
    m = fixation_map(log_with([(10.7, 3.2)])).values
    assert m[3, 10] == 1


def test_kernel_radius_and_mass():
    k = gaussian_kernel(2.0)
    assert len(k) == 2 * 6 + 1
    assert k.sum() == pytest.approx(1.0, abs=1e-15)
    assert len(gaussian_kernel(2.1)) == 2 * 7 + 1


def test_blur_zero_map():
    assert not gaussian_blur(SaliencyMap.zeros(20, 10), 2.0).values.any()


def test_blur_impulse_matches_direct_gaussian():
    out = gaussian_blur(impulse(80, 80, 40, 40), 5.0).values
    assert np.max(np.abs(out - gaussian_2d((80, 80), (40, 40), 5.0))) < 1e-12
    assert out.sum() == pytest.approx(1.0, abs=1e-6)


def test_blur_superposition_of_far_impulses():
    s = 3.0
    a, b = impulse(60, 100, 30, 15), impulse(60, 100, 30, 15 + 30)
    both = SaliencyMap(a.values + b.values)
    diff = gaussian_blur(both, s).values - gaussian_blur(a, s).values - gaussian_blur(b, s).values
    assert np.max(np.abs(diff)) < 1e-9


@given(maps_st, st.sampled_from([0.7, 1.5, 3.0, 10.0]))
def test_separable_blur_equals_direct_2d_convolution(m, sigma):
    k = gaussian_kernel(sigma)
    ref = convolve2d(m, np.outer(k, k), mode="same", boundary="fill")
    assert np.max(np.abs(gaussian_blur(SaliencyMap(m), sigma).values - ref)) < 1e-9


@given(maps_st, maps_st, st.floats(-3, 3), st.floats(-3, 3))
def test_blur_linear(a, b, x, y):
    lhs = gaussian_blur(SaliencyMap(x * a + y * b), 2.0).values
    rhs = x * gaussian_blur(SaliencyMap(a), 2.0).values + y * gaussian_blur(SaliencyMap(b), 2.0).values
    assert np.max(np.abs(lhs - rhs)) < 1e-9


@given(st.integers(12, 40), st.integers(12, 40), st.integers(-5, 5), st.integers(-5, 5))
def test_blur_translation_equivariant_off_border(y, x, dy, dx):
    s = 2.0
    a = gaussian_blur(impulse(60, 60, y, x), s).values
    b = gaussian_blur(impulse(60, 60, y + dy, x + dx), s).values
    assert np.max(np.abs(np.roll(a, (dy, dx), axis=(0, 1)) - b)) < 1e-12


def test_blur_rejects_bad_sigma():
    with pytest.raises(ValueError):
        gaussian_blur(SaliencyMap.zeros(3, 3), 0)


def test_normalize_examples():
    m = normalize(SaliencyMap(np.array([[1.0, 2.0, 4.0]])))
    assert m.values.tolist() == [[0.25, 0.5, 1.0]]
    z = normalize(SaliencyMap.zeros(4, 4))
    assert not z.values.any()


@given(maps_st)
def test_normalize_range_and_idempotent(m):
    n = normalize(SaliencyMap(m)).values
    assert n.min() >= 0 and n.max() <= 1
    if m.any():
        assert n.max() == 1.0
    assert np.array_equal(normalize(SaliencyMap(n)).values, n)


def test_threshold_is_strict():
    m = SaliencyMap(np.array([[0.39, 0.40, 0.41, 1.0]]))
    assert threshold_mask(m, 0.4) == [(2, 0, 0.41), (3, 0, 1.0)]
    assert threshold_mask(SaliencyMap.zeros(3, 3), 0.4) == []
    with pytest.raises(ValueError):
        threshold_mask(m, 0.0)


@given(maps_st, st.floats(0.01, 0.98), st.floats(0.01, 0.98))
def test_threshold_monotone(m, t1, t2):
    lo, hi = sorted((t1, t2))
    n = normalize(gaussian_blur(SaliencyMap(m), 2.0))
    assert set(threshold_mask(n, hi)) <= set(threshold_mask(n, lo))


def test_saliency_map_peak_at_cluster():
    m = saliency_map(log_with([(40, 50)] * 5 + [(120, 150)]))
    assert m.values[50, 40] == 1.0
    assert m.values[150, 120] == pytest.approx(0.2)


def test_pgm_round_trip(tmp_path):
    m = SaliencyMap(np.array([[0.0, 0.5], [1.0, 0.25]]))
    write_pgm(m, tmp_path / "m.pgm")
    assert (tmp_path / "m.pgm").read_text().startswith("P2\n2 2\n255\n")
    assert read_pgm(tmp_path / "m.pgm").tolist() == [[0, 128], [255, 64]]


def test_png_written(tmp_path):
    pytest.importorskip("PIL")
    from PIL import Image

    from gazehrl.saliency import write_png

    write_png(SaliencyMap(np.array([[0.0, 1.0]])), tmp_path / "m.png")
    assert np.asarray(Image.open(tmp_path / "m.png")).tolist() == [[0, 255]]
