"""Radiomic feature extraction via adaptive spectral band filtering.

Per image: average the row magnitude spectra, locate data-driven band
boundaries from spectral peaks, retain the low-frequency band set, then
compute 4 grayscale moment statistics and 4 co-occurrence texture
statistics on the filtered image. Everything here is a pure function;
identical inputs give bit-identical feature vectors.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import find_peaks

from .errors import InputDataError
from .ingest import GrayImage, Label

FEATURE_NAMES = (
    "mean",
    "std",
    "kurtosis",
    "skewness",
    "contrast",
    "energy",
    "entropy",
    "homogeneity",
)

DEFAULT_OFFSETS = ((0, 1), (1, 0), (1, 1), (1, -1))


@dataclass(frozen=True)
class FeatureConfig:
    levels: int = 8
    max_bands: int = 4
    energy_floor: float = 0.1
    envelope_p: int = 0
    offsets: tuple[tuple[int, int], ...] = DEFAULT_OFFSETS

    def __post_init__(self):
        if self.levels < 2:
            raise InputDataError(f"levels must be >= 2, got {self.levels}")
        if self.max_bands < 1:
            raise InputDataError(f"max_bands must be >= 1, got {self.max_bands}")
        if not 0.0 < self.energy_floor < 1.0:
            raise InputDataError(f"energy_floor must be in (0, 1), got {self.energy_floor}")
        if not self.offsets:
            raise InputDataError("offsets must be nonempty")


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Row-averaged magnitude spectrum plus the mean squared pixel power."""

    magnitudes: np.ndarray
    resolution: int
    avg_power: float

    def __post_init__(self):
        mags = np.asarray(self.magnitudes, dtype=np.float64)
        if mags.min() < 0.0:
            raise InputDataError("spectrum magnitudes must be nonnegative")
        object.__setattr__(self, "magnitudes", mags)


@dataclass(frozen=True, eq=False)
class EnvelopeVector:
    """Lag-indexed mean products of squared magnitudes."""

    values: np.ndarray
    lag_cap: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (self.lag_cap,):
            raise InputDataError(f"envelope length {vals.shape} != lag_cap {self.lag_cap}")
        if vals.size and vals.min() < 0.0:
            raise InputDataError("envelope values must be nonnegative")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class BoundarySet:
    """Strictly increasing band cut positions as normalized frequencies."""

    cut_frequencies: tuple[float, ...] = ()

    def __post_init__(self):
        cuts = tuple(float(c) for c in self.cut_frequencies)
        if any(not 0.0 < c <= 0.5 for c in cuts):
            raise InputDataError(f"cut frequencies must lie in (0, 0.5], got {cuts}")
        if any(b <= a for a, b in zip(cuts, cuts[1:])):
            raise InputDataError(f"cut frequencies must be strictly increasing, got {cuts}")
        object.__setattr__(self, "cut_frequencies", cuts)

    def __bool__(self) -> bool:
        return bool(self.cut_frequencies)


@dataclass(frozen=True, eq=False)
class Glcm:
    """Symmetric normalized gray-level co-occurrence matrix."""

    levels: int
    probabilities: np.ndarray
    offsets_used: tuple[tuple[int, int], ...]

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=np.float64)
        if p.shape != (self.levels, self.levels):
            raise InputDataError(f"probability matrix shape {p.shape} != levels {self.levels}")
        if p.min() < 0.0 or abs(p.sum() - 1.0) > 1e-12:
            raise InputDataError("probabilities must be nonnegative and sum to 1 within 1e-12")
        object.__setattr__(self, "probabilities", p)


@dataclass(frozen=True)
class GrayscaleStats:
    mean: float
    std_dev: float
    kurtosis: float
    skewness: float
    degenerate: bool = False


@dataclass(frozen=True)
class FeatureVector:
    """The 8 per-image features; degenerate flags sentinel moment values."""

    mean: float
    std_dev: float
    kurtosis: float
    skewness: float
    contrast: float
    energy: float
    entropy: float
    homogeneity: float
    label: Label | None = None
    degenerate: bool = False

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.mean,
                self.std_dev,
                self.kurtosis,
                self.skewness,
                self.contrast,
                self.energy,
                self.entropy,
                self.homogeneity,
            ]
        )


# ---------------------------------------------------------------------------
# spectral stages


def row_spectrum(image: GrayImage) -> Spectrum:
    """Average per-row magnitude spectra; width below 8 is rejected."""
    if image.width < 8:
        raise InputDataError(f"image width must be >= 8 for spectral analysis, got {image.width}")
    mags = np.abs(np.fft.rfft(image.pixels, axis=1)) / image.width
    avg = mags.mean(axis=0)
    power = float(np.mean(image.pixels**2))
    return Spectrum(magnitudes=avg, resolution=image.width, avg_power=power)


def envelope(signal: np.ndarray, p: int) -> EnvelopeVector:
    """Lag products of squared magnitudes, averaged over the valid terms.

    For lag a the sum runs over u = 1..K-p while u+a stays in range; the
    divisor is that actual term count, so a constant unit signal gives
    exactly 1 at every populated lag.
    """
    sig = np.asarray(signal, dtype=np.float64)
    k = sig.size
    if p < 0 or p >= k:
        raise InputDataError(f"p must satisfy 0 <= p < len(signal)={k}, got {p}")
    lag_cap = k - p
    sq = sig * sig
    values = np.zeros(lag_cap)
    for idx, alpha in enumerate(range(1, lag_cap + 1)):
        n_terms = min(k - p, k - alpha)
        if n_terms >= 1:
            values[idx] = float(np.mean(sq[:n_terms] * sq[alpha : alpha + n_terms]))
    return EnvelopeVector(values=values, lag_cap=lag_cap)


def detect_boundaries(
    spectrum: Spectrum,
    env: EnvelopeVector,
    max_bands: int,
    energy_floor: float,
) -> BoundarySet:
    """Place band cuts at spectral minima between the retained peaks.

    Peaks of the averaged spectrum at or above energy_floor * max
    magnitude survive, ordered by prominence and capped at max_bands; the
    band count therefore follows the data. An all-zero envelope means no
    off-DC structure, giving the single-band fallback (empty set).
    """
    mags = spectrum.magnitudes
    if mags.size == 0:
        raise InputDataError("empty spectrum")
    if env.values.size == 0 or env.values.max() <= 1e-30:
        return BoundarySet()
    floor = energy_floor * mags.max()
    peak_bins, props = find_peaks(mags, height=floor, prominence=0.0)
    if peak_bins.size == 0:
        return BoundarySet()
    order = np.argsort(props["prominences"])[::-1]
    kept = np.sort(peak_bins[order[:max_bands]])
    cuts = []
    for left, right in zip(kept, kept[1:]):
        valley = left + int(np.argmin(mags[left : right + 1]))
        cuts.append(valley / spectrum.resolution)
    return BoundarySet(cut_frequencies=tuple(cuts))


def ewt_filter(image: GrayImage, boundaries: BoundarySet) -> GrayImage:
    """Keep rows' spectral content up to the highest cut; clip into [0, 1].

    An empty boundary set is the identity, bit for bit.
    """
    if not boundaries:
        return image
    top = max(boundaries.cut_frequencies)
    spectra = np.fft.rfft(image.pixels, axis=1)
    freqs = np.arange(spectra.shape[1]) / image.width
    spectra[:, freqs > top] = 0.0
    out = np.fft.irfft(spectra, n=image.width, axis=1)
    return GrayImage(np.clip(out, 0.0, 1.0))


# ---------------------------------------------------------------------------
# grayscale statistics


def grayscale_stats(image: GrayImage) -> GrayscaleStats:
    """Population mean/std plus standardized third and fourth moments.

    Kurtosis is the non-excess fourth moment over sigma^4 (normal -> 3).
    A zero-variance image flags degenerate and reports both standardized
    moments as the sentinel 0.
    """
    p = image.pixels.ravel()
    mean = float(np.mean(p))
    centered = p - mean
    var = float(np.mean(centered**2))
    std = float(np.sqrt(var))
    # rounding in the mean leaves a ~1e-16 std on exactly constant images
    if std <= 1e-12 * max(1.0, abs(mean)):
        return GrayscaleStats(mean=mean, std_dev=0.0, kurtosis=0.0, skewness=0.0, degenerate=True)
    kurtosis = float(np.mean(centered**4) / var**2)
    skewness = float(np.mean(centered**3) / std**3)
    return GrayscaleStats(mean=mean, std_dev=std, kurtosis=kurtosis, skewness=skewness)


# ---------------------------------------------------------------------------
# co-occurrence texture


def quantize(pixels: np.ndarray, levels: int) -> np.ndarray:
    """Uniform quantization of [0, 1] into ``levels`` bins; 1.0 maps to the top bin."""
    return np.minimum((pixels * levels).astype(np.int64), levels - 1)


def compute_glcm(
    image: GrayImage,
    levels: int = 8,
    offsets: tuple[tuple[int, int], ...] = DEFAULT_OFFSETS,
) -> Glcm:
    """Symmetric co-occurrence counts over the offsets, normalized to 1.

    Offsets that do not fit in the image are skipped; if none fit the
    image is too small to pair and InputDataError is raised.
    """
    if levels < 2:
        raise InputDataError(f"levels must be >= 2, got {levels}")
    if not offsets:
        raise InputDataError("offsets must be nonempty")
    q = quantize(image.pixels, levels)
    h, w = q.shape
    counts = np.zeros((levels, levels), dtype=np.float64)
    used = []
    for dr, dc in offsets:
        if abs(dr) >= h or abs(dc) >= w:
            continue
        r0, r1 = max(0, -dr), min(h, h - dr)
        c0, c1 = max(0, -dc), min(w, w - dc)
        a = q[r0:r1, c0:c1].ravel()
        b = q[r0 + dr : r1 + dr, c0 + dc : c1 + dc].ravel()
        np.add.at(counts, (a, b), 1.0)
        np.add.at(counts, (b, a), 1.0)
        used.append((dr, dc))
    if not used:
        raise InputDataError(f"image {h}x{w} too small for any of the offsets {offsets}")
    return Glcm(levels=levels, probabilities=counts / counts.sum(), offsets_used=tuple(used))


def haralick(glcm: Glcm) -> tuple[float, float, float, float]:
    """(contrast, energy, entropy, homogeneity) of a normalized GLCM.

    Entropy is computed over the diagonal-sum distribution p_{x+y} in
    log base 2 with 0*log0 = 0.
    """
    p = glcm.probabilities
    m = glcm.levels
    x = np.arange(m)
    diff = x[:, None] - x[None, :]
    contrast = float(np.sum(diff**2 * p))
    energy = float(np.sum(p * p))
    homogeneity = float(np.sum(p / (1.0 + np.abs(diff))))
    sums = np.zeros(2 * m - 1)
    for i in range(m):
        for j in range(m):
            sums[i + j] += p[i, j]
    nonzero = sums[sums > 0.0]
    entropy = float(-np.sum(nonzero * np.log2(nonzero))) + 0.0  # avoid -0.0
    return contrast, energy, entropy, homogeneity


# ---------------------------------------------------------------------------
# composition


def extract_features(image: GrayImage, config: FeatureConfig = FeatureConfig()) -> FeatureVector:
    """spectrum -> envelope -> boundaries -> band filter -> moments + texture."""
    spectrum = row_spectrum(image)
    env = envelope(spectrum.magnitudes, config.envelope_p)
    boundaries = detect_boundaries(spectrum, env, config.max_bands, config.energy_floor)
    filtered = ewt_filter(image, boundaries)
    stats = grayscale_stats(filtered)
    glcm = compute_glcm(filtered, config.levels, config.offsets)
    contrast, energy, entropy, homogeneity = haralick(glcm)
    return FeatureVector(
        mean=stats.mean,
        std_dev=stats.std_dev,
        kurtosis=stats.kurtosis,
        skewness=stats.skewness,
        contrast=contrast,
        energy=energy,
        entropy=entropy,
        homogeneity=homogeneity,
        degenerate=stats.degenerate,
    )


# ---------------------------------------------------------------------------
# feature table IO


def write_feature_csv(rows: list[tuple[str, FeatureVector]], path: str | Path) -> None:
    """One row per sample, values at 17 significant digits (lossless float64)."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["source_id", "label"] + list(FEATURE_NAMES))
        for source_id, fv in rows:
            label = fv.label.value if fv.label is not None else ""
            writer.writerow([source_id, label] + [f"{v:.17g}" for v in fv.as_array()])


def read_feature_csv(path: str | Path) -> list[tuple[str, FeatureVector]]:
    rows = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        expected = ["source_id", "label"] + list(FEATURE_NAMES)
        if header != expected:
            raise InputDataError(f"unexpected feature CSV header in {path}: {header}")
        for record in reader:
            source_id, label_text = record[0], record[1]
            values = [float(v) for v in record[2:]]
            label = Label(label_text) if label_text else None
            rows.append(
                (
                    source_id,
                    FeatureVector(
                        mean=values[0],
                        std_dev=values[1],
                        kurtosis=values[2],
                        skewness=values[3],
                        contrast=values[4],
                        energy=values[5],
                        entropy=values[6],
                        homogeneity=values[7],
                        label=label,
                    ),
                )
            )
    return rows
