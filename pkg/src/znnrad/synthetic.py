"""Synthetic labeled phantom generation for desk-scale pipeline runs.

Positive-class images carry a bright soft-edged elliptical blob over a
zero-mean sinusoidal texture; negative-class images carry texture only.
Both get additive Gaussian noise. All draws come from per-image seeded
streams, so a (directory, seed) pair yields byte-identical PGM files.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import InputDataError
from .ingest import GrayImage, Label, write_pgm

BASE_LEVEL = 0.38
BLOB_GAIN = 0.35


def _texture(rng: np.random.Generator, size: int) -> np.ndarray:
    """Zero-mean band-limited texture: two random low tones plus one high tone."""
    y, x = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    tex = np.zeros((size, size))
    for amplitude, (f_lo, f_hi) in ((0.08, (1.5, 4.0)), (0.05, (1.5, 4.0)), (0.04, (8.0, 14.0))):
        fx = rng.uniform(f_lo, f_hi)
        fy = rng.uniform(f_lo, f_hi)
        px, py = rng.uniform(0.0, 1.0, 2)
        tex += amplitude * np.sin(2 * np.pi * (fx * x / size + px)) * np.sin(
            2 * np.pi * (fy * y / size + py)
        )
    return tex - tex.mean()


def _blob_mask(rng: np.random.Generator, size: int) -> np.ndarray:
    """Soft-edged ellipse with randomized center, axes, and orientation."""
    cy, cx = rng.uniform(0.35 * size, 0.65 * size, 2)
    a = rng.uniform(0.13, 0.20) * size
    b = rng.uniform(0.13, 0.20) * size
    theta = rng.uniform(0.0, np.pi)
    y, x = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    dy, dx = y - cy, x - cx
    u = dx * np.cos(theta) + dy * np.sin(theta)
    v = -dx * np.sin(theta) + dy * np.cos(theta)
    radius = np.sqrt((u / a) ** 2 + (v / b) ** 2)
    # smooth falloff over the outer 25% of the ellipse radius
    return np.clip((1.25 - radius) / 0.25, 0.0, 1.0) ** 1.5


def make_phantom(
    label: Label, seed: int, size: int = 64, noise_sigma: float = 0.1
) -> GrayImage:
    rng = np.random.default_rng(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    pixels = BASE_LEVEL + _texture(rng, size)
    if label is Label.CANCER:
        pixels = pixels + BLOB_GAIN * _blob_mask(rng, size)
    if noise_sigma > 0.0:
        pixels = pixels + rng.normal(0.0, noise_sigma, pixels.shape)
    return GrayImage(np.clip(pixels, 0.0, 1.0))


def generate_synthetic_dataset(
    out_dir: str | Path,
    n_per_class: int,
    image_size: int,
    seed: int,
    noise_sigma: float = 0.1,
) -> list[Path]:
    """Write ``n_per_class`` PGMs per class under out_dir/{cancer,noncancer}."""
    if n_per_class < 2:
        raise InputDataError(f"n_per_class must be >= 2, got {n_per_class}")
    if image_size < 8:
        raise InputDataError(f"image_size must be >= 8, got {image_size}")
    root = Path(out_dir)
    written = []
    for class_index, label in enumerate((Label.CANCER, Label.NONCANCER)):
        subdir = root / label.value
        subdir.mkdir(parents=True, exist_ok=True)
        for i in range(n_per_class):
            image_seed = (seed * 1_000_003 + class_index * 500_009 + i) & 0xFFFFFFFFFFFFFFFF
            image = make_phantom(label, image_seed, image_size, noise_sigma)
            path = subdir / f"{label.value[:3]}_{i:04d}.pgm"
            write_pgm(image, path)
            written.append(path)
    return written
