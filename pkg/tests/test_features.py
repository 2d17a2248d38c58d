from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import brute_envelope, brute_glcm, brute_haralick, brute_moments
from znnrad.errors import InputDataError
from znnrad.features import (
    BoundarySet,
    FeatureConfig,
    Glcm,
    compute_glcm,
    detect_boundaries,
    envelope,
    ewt_filter,
    extract_features,
    grayscale_stats,
    haralick,
    read_feature_csv,
    row_spectrum,
    write_feature_csv,
)
from znnrad.ingest import GrayImage, Label


def two_tone_image(width=64, height=16, k1=5, k2=20, a=0.2):
    x = np.arange(width)
    row = 0.5 + a * np.cos(2 * np.pi * k1 * x / width) + a * np.cos(2 * np.pi * k2 * x / width)
    return GrayImage(np.tile(row, (height, 1)))


unit_images = arrays(
    np.float64,
    st.tuples(st.integers(2, 6), st.integers(2, 6)),
    elements=st.floats(0.0, 1.0, width=64),
)


# ---------------------------------------------------------------------------
# spectrum


def test_constant_image_spectrum_dc_only():
    spec = row_spectrum(GrayImage(np.full((8, 16), 0.6)))
    assert np.isclose(spec.magnitudes[0], 0.6)
    assert spec.magnitudes[1:].max() <= 1e-9


def test_single_tone_peak_bin():
    width, k = 64, 5
    x = np.arange(width)
    image = GrayImage(np.tile(0.5 + 0.3 * np.cos(2 * np.pi * k * x / width), (4, 1)))
    spec = row_spectrum(image)
    assert np.argmax(spec.magnitudes[1:]) + 1 == k
    # FFT oracle: tone amplitude a appears as a/2 in the one-sided bin
    oracle = np.abs(np.fft.rfft(image.pixels[0])) / width
    assert np.allclose(spec.magnitudes, oracle, atol=1e-12)


def test_average_power_of_constant():
    spec = row_spectrum(GrayImage(np.full((4, 8), 0.3)))
    assert np.isclose(spec.avg_power, 0.09)


def test_narrow_image_rejected():
    with pytest.raises(InputDataError):
        row_spectrum(GrayImage(np.full((8, 4), 0.5)))


# ---------------------------------------------------------------------------
# envelope


def test_envelope_all_zero_signal():
    env = envelope(np.zeros(12), 0)
    assert env.values.max() == 0.0


def test_envelope_constant_ones_unit_value():
    env = envelope(np.ones(10), 0)
    assert env.lag_cap == 10
    assert env.values[0] == 1.0  # alpha = 1: nine unit terms averaged over nine


def test_envelope_matches_brute_force():
    rng = np.random.default_rng(5)
    for p in (0, 1, 3):
        sig = rng.uniform(0, 1, 17)
        env = envelope(sig, p)
        assert np.allclose(env.values, brute_envelope(sig, p), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.integers(2, 24), elements=st.floats(-2, 2, width=64)))
def test_envelope_nonnegative(signal):
    env = envelope(signal, 0)
    assert env.values.min() >= 0.0


def test_envelope_p_out_of_range():
    with pytest.raises(InputDataError):
        envelope(np.ones(5), 5)


# ---------------------------------------------------------------------------
# boundaries


def test_two_tone_boundary_strictly_between():
    image = two_tone_image()
    spec = row_spectrum(image)
    env = envelope(spec.magnitudes, 0)
    bounds = detect_boundaries(spec, env, max_bands=4, energy_floor=0.1)
    assert len(bounds.cut_frequencies) == 1
    cut_bin = bounds.cut_frequencies[0] * spec.resolution
    assert 5 < cut_bin < 20


def test_constant_image_no_boundaries():
    spec = row_spectrum(GrayImage(np.full((8, 16), 0.4)))
    env = envelope(spec.magnitudes, 0)
    assert not detect_boundaries(spec, env, 4, 0.1)


def test_boundary_scale_invariance():
    image = two_tone_image()
    spec = row_spectrum(image)
    env = envelope(spec.magnitudes, 0)
    a = detect_boundaries(spec, env, 4, 0.1)
    scaled = type(spec)(magnitudes=spec.magnitudes * 7.5, resolution=spec.resolution,
                        avg_power=spec.avg_power)
    env2 = envelope(scaled.magnitudes, 0)
    b = detect_boundaries(scaled, env2, 4, 0.1)
    assert a.cut_frequencies == b.cut_frequencies


def test_boundary_set_strictly_increasing_enforced():
    with pytest.raises(InputDataError):
        BoundarySet(cut_frequencies=(0.2, 0.2))
    with pytest.raises(InputDataError):
        BoundarySet(cut_frequencies=(0.3, 0.1))


# ---------------------------------------------------------------------------
# band filter


def test_empty_boundaries_identity():
    rng = np.random.default_rng(1)
    image = GrayImage(rng.uniform(0, 1, (6, 16)))
    out = ewt_filter(image, BoundarySet())
    assert out is image


def test_high_tone_attenuated_20db():
    image = two_tone_image()
    spec = row_spectrum(image)
    env = envelope(spec.magnitudes, 0)
    bounds = detect_boundaries(spec, env, 4, 0.1)
    filtered = ewt_filter(image, bounds)
    after = np.abs(np.fft.rfft(filtered.pixels, axis=1)).mean(axis=0) / image.width
    before = spec.magnitudes
    assert after[20] <= before[20] * 10 ** (-20 / 20)
    assert np.isclose(after[5], before[5], atol=1e-9)


def test_filter_output_valid_image():
    image = two_tone_image(a=0.25)
    bounds = BoundarySet(cut_frequencies=(0.1,))
    out = ewt_filter(image, bounds)
    assert out.pixels.min() >= 0.0
    assert out.pixels.max() <= 1.0


# ---------------------------------------------------------------------------
# grayscale stats


def test_constant_image_degenerate_stats():
    stats = grayscale_stats(GrayImage(np.full((5, 5), 0.3)))
    assert stats.mean == pytest.approx(0.3)
    assert stats.std_dev == 0.0
    assert stats.kurtosis == 0.0 and stats.skewness == 0.0
    assert stats.degenerate


def test_two_point_distribution_moments():
    stats = grayscale_stats(GrayImage(np.array([[0.0, 1.0], [1.0, 0.0]])))
    assert stats.mean == 0.5
    assert stats.std_dev == 0.5
    assert stats.skewness == 0.0
    assert stats.kurtosis == 1.0


def test_normal_sample_kurtosis_near_three():
    rng = np.random.default_rng(12)
    values = rng.normal(0.5, 0.1, 100_000).clip(0, 1).reshape(250, 400)
    stats = grayscale_stats(GrayImage(values))
    assert abs(stats.kurtosis - 3.0) < 0.1
    assert abs(stats.skewness) < 0.05


@settings(max_examples=40, deadline=None)
@given(unit_images)
def test_moments_match_brute_force(pixels):
    stats = grayscale_stats(GrayImage(pixels))
    mean, std, kurt, skew = brute_moments(pixels)
    assert abs(stats.mean - mean) <= 1e-12
    assert abs(stats.std_dev - std) <= 1e-12
    if kurt is not None and not stats.degenerate:
        assert abs(stats.kurtosis - kurt) <= 1e-9
        assert abs(stats.skewness - skew) <= 1e-9


# ---------------------------------------------------------------------------
# GLCM


def test_constant_image_glcm_point_mass():
    glcm = compute_glcm(GrayImage(np.full((4, 4), 0.99)), levels=8)
    probs = glcm.probabilities
    assert probs[7, 7] == 1.0
    assert probs.sum() == pytest.approx(1.0)


def test_checkerboard_offdiagonal():
    image = GrayImage(np.array([[0.0, 1.0], [1.0, 0.0]]))
    glcm = compute_glcm(image, levels=2, offsets=((0, 1),))
    assert glcm.probabilities[0, 1] == 0.5
    assert glcm.probabilities[1, 0] == 0.5
    assert glcm.probabilities[0, 0] == 0.0


def test_glcm_skips_oversized_offsets():
    image = GrayImage(np.array([[0.0, 1.0], [1.0, 0.0]]))
    glcm = compute_glcm(image, levels=2, offsets=((0, 1), (5, 0)))
    assert glcm.offsets_used == ((0, 1),)
    with pytest.raises(InputDataError):
        compute_glcm(image, levels=2, offsets=((5, 0),))


@settings(max_examples=40, deadline=None)
@given(unit_images)
def test_glcm_probabilities_sum_and_symmetry(pixels):
    glcm = compute_glcm(GrayImage(pixels), levels=4, offsets=((0, 1), (1, 0)))
    assert abs(glcm.probabilities.sum() - 1.0) <= 1e-12
    assert np.array_equal(glcm.probabilities, glcm.probabilities.T)


@settings(max_examples=60, deadline=None)
@given(unit_images)
def test_glcm_matches_brute_force(pixels):
    ours = compute_glcm(GrayImage(pixels), levels=4).probabilities
    reference = brute_glcm(pixels, 4, ((0, 1), (1, 0), (1, 1), (1, -1)))
    assert np.abs(ours - reference).max() <= 1e-12


# ---------------------------------------------------------------------------
# texture statistics


def test_haralick_point_mass():
    probs = np.zeros((4, 4))
    probs[2, 2] = 1.0
    contrast, energy, entropy, homogeneity = haralick(
        Glcm(levels=4, probabilities=probs, offsets_used=((0, 1),))
    )
    assert (contrast, energy, entropy, homogeneity) == (0.0, 1.0, 0.0, 1.0)


def test_haralick_uniform_two_levels():
    glcm = Glcm(levels=2, probabilities=np.full((2, 2), 0.25), offsets_used=((0, 1),))
    contrast, energy, entropy, homogeneity = haralick(glcm)
    assert contrast == pytest.approx(0.5)
    assert energy == pytest.approx(0.25)
    assert homogeneity == pytest.approx(0.75)
    assert entropy == pytest.approx(1.5)  # sum distribution (0.25, 0.5, 0.25)


@settings(max_examples=60, deadline=None)
@given(unit_images)
def test_haralick_matches_brute_force(pixels):
    glcm = compute_glcm(GrayImage(pixels), levels=4)
    ours = haralick(glcm)
    reference = brute_haralick(glcm.probabilities)
    assert np.abs(np.array(ours) - np.array(reference)).max() <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_haralick_bounds_random_glcm(seed):
    rng = np.random.default_rng(seed)
    raw = rng.uniform(0, 1, (5, 5))
    sym = raw + raw.T
    glcm = Glcm(levels=5, probabilities=sym / sym.sum(), offsets_used=((0, 1),))
    contrast, energy, entropy, homogeneity = haralick(glcm)
    assert entropy >= 0.0
    assert 0.0 < energy <= 1.0
    assert 0.0 < homogeneity <= 1.0
    assert contrast >= 0.0


# ---------------------------------------------------------------------------
# composition and IO


def test_constant_image_feature_vector():
    fv = extract_features(GrayImage(np.full((16, 16), 0.6)))
    assert fv.degenerate
    assert np.allclose(fv.as_array(), [0.6, 0, 0, 0, 0, 1, 0, 1])


def test_extraction_deterministic():
    rng = np.random.default_rng(2)
    image = GrayImage(rng.uniform(0, 1, (32, 32)))
    a = extract_features(image)
    b = extract_features(image)
    assert np.array_equal(a.as_array(), b.as_array())


def test_two_tone_features_match_stage_composition():
    image = two_tone_image()
    config = FeatureConfig()
    spec = row_spectrum(image)
    env = envelope(spec.magnitudes, config.envelope_p)
    bounds = detect_boundaries(spec, env, config.max_bands, config.energy_floor)
    filtered = ewt_filter(image, bounds)
    stats = grayscale_stats(filtered)
    texture = haralick(compute_glcm(filtered, config.levels, config.offsets))
    fv = extract_features(image, config)
    assert fv.as_array() == pytest.approx(
        [stats.mean, stats.std_dev, stats.kurtosis, stats.skewness, *texture]
    )


def test_feature_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(4)
    rows = []
    for i in range(4):
        fv = extract_features(GrayImage(rng.uniform(0, 1, (16, 16))))
        label = Label.CANCER if i % 2 == 0 else Label.NONCANCER
        rows.append((f"s{i}", replace(fv, label=label)))
    rows.append(("unlabeled", extract_features(GrayImage(rng.uniform(0, 1, (16, 16))))))
    path = tmp_path / "features.csv"
    write_feature_csv(rows, path)
    loaded = read_feature_csv(path)
    assert [sid for sid, _ in loaded] == [sid for sid, _ in rows]
    for (_, a), (_, b) in zip(loaded, rows):
        assert np.array_equal(a.as_array(), b.as_array())  # 17 digits round-trips exactly
        assert a.label is b.label
