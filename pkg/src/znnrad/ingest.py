"""Labeled grayscale image ingestion: loading, augmentation, splitting.

Datasets live on disk as ``<root>/{cancer,noncancer}/*.{png,pgm}`` with
8-bit grayscale files. In memory every image is a float64 matrix in
[0, 1]; all operations here are pure functions of their inputs and an
explicit seed, so repeated runs are bit-identical.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ConfigurationError, InputDataError, SplitError

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".pgm")


class Label(enum.Enum):
    CANCER = "cancer"
    NONCANCER = "noncancer"


@dataclass(frozen=True, eq=False)
class GrayImage:
    """H x W matrix of intensities in [0, 1]; the unit of work downstream."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.float64)
        if p.ndim != 2 or p.size == 0:
            raise InputDataError(f"expected a non-empty 2-D pixel matrix, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise InputDataError("pixel matrix contains non-finite values")
        if p.min() < 0.0 or p.max() > 1.0:
            raise InputDataError(
                f"pixel values outside [0, 1]: min={p.min():.6g} max={p.max():.6g}"
            )
        object.__setattr__(self, "pixels", p)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True, eq=False)
class LabeledSample:
    image: GrayImage
    label: Label
    source_id: str
    augmented_from: str | None = None


@dataclass(frozen=True, eq=False)
class Dataset:
    """Ordered sample collection; ordering is lexicographic by source_id."""

    samples: tuple[LabeledSample, ...]
    manifest_hash: str = field(default="")

    def __post_init__(self):
        ordered = tuple(sorted(self.samples, key=lambda s: s.source_id))
        ids = [s.source_id for s in ordered]
        if len(set(ids)) != len(ids):
            raise InputDataError("duplicate source_id in dataset")
        known = set(ids)
        for s in ordered:
            if s.augmented_from is not None and s.augmented_from not in known:
                raise InputDataError(
                    f"augmented_from {s.augmented_from!r} names no sample in the dataset"
                )
        object.__setattr__(self, "samples", ordered)
        object.__setattr__(self, "manifest_hash", _manifest_digest(ordered))

    def __len__(self) -> int:
        return len(self.samples)

    def by_label(self, label: Label) -> list[LabeledSample]:
        return [s for s in self.samples if s.label is label]


def _manifest_digest(samples) -> str:
    h = hashlib.sha256()
    for s in samples:
        h.update(f"{s.source_id},{s.label.value}\n".encode())
    return h.hexdigest()


def pixel_sha256(image: GrayImage) -> str:
    """Content digest of an image: shape header plus the raw float64 buffer."""
    h = hashlib.sha256()
    h.update(f"{image.height}x{image.width}:".encode())
    h.update(np.ascontiguousarray(image.pixels).tobytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# image file IO


def read_gray_image(path: Path) -> GrayImage:
    """Decode an 8-bit grayscale PNG/PGM file, scaling bytes by 1/255."""
    with Image.open(path) as im:
        if im.mode != "L":
            raise InputDataError(f"{path}: expected 8-bit grayscale, got mode {im.mode!r}")
        arr = np.asarray(im, dtype=np.float64)
    return GrayImage(arr / 255.0)


def write_pgm(image: GrayImage, path: Path) -> None:
    """Write a binary PGM (maxval 255); byte output depends only on the pixels."""
    data = np.clip(np.rint(image.pixels * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P5\n{image.width} {image.height}\n255\n".encode("ascii"))
        f.write(data.tobytes())


# ---------------------------------------------------------------------------
# loading


def load_dataset(root_path: str | Path) -> Dataset:
    """Load ``<root>/{cancer,noncancer}`` into a Dataset sorted by source_id.

    Undecodable files are logged and skipped; the load succeeds as long as
    each class retains at least one sample. A missing class directory (or a
    class with nothing decodable) raises ConfigurationError.
    """
    root = Path(root_path)
    samples: list[LabeledSample] = []
    for label in (Label.CANCER, Label.NONCANCER):
        subdir = root / label.value
        if not subdir.is_dir():
            raise ConfigurationError(f"missing dataset subdirectory: {subdir}")
        count = 0
        for path in sorted(subdir.iterdir()):
            if path.suffix.lower() not in IMAGE_SUFFIXES:
                continue
            try:
                image = read_gray_image(path)
            except (InputDataError, OSError) as exc:
                log.warning("skipping undecodable file %s: %s", path, exc)
                continue
            samples.append(
                LabeledSample(image=image, label=label, source_id=f"{label.value}/{path.name}")
            )
            count += 1
        if count == 0:
            raise ConfigurationError(f"no decodable {label.value} images under {subdir}")
    return Dataset(samples=tuple(samples))


# ---------------------------------------------------------------------------
# augmentation

def _hflip(p, rng):
    return p[:, ::-1]


def _vflip(p, rng):
    return p[::-1, :]


def _rot90(p, rng):
    return np.rot90(p, 1)


def _rot180(p, rng):
    return np.rot90(p, 2)


def _rot270(p, rng):
    return np.rot90(p, 3)


def _jitter(p, rng):
    return np.clip(p + rng.normal(0.0, 0.02, p.shape), 0.0, 1.0)


def _scale(p, rng):
    return np.clip(p * rng.uniform(0.9, 1.1), 0.0, 1.0)


# label-preserving transforms an output sample is drawn from
AUGMENT_TRANSFORMS = (_hflip, _vflip, _rot90, _rot180, _rot270, _jitter, _scale)


def augment(sample: LabeledSample, multiplier: int, seed: int) -> list[LabeledSample]:
    """Derive ``multiplier`` new samples, each by one seeded transform draw.

    Same (sample, multiplier, seed) always yields bit-identical pixels.
    """
    if multiplier < 1:
        raise InputDataError(f"multiplier must be >= 1, got {multiplier}")
    rng = np.random.default_rng(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    out = []
    for i in range(multiplier):
        transform = AUGMENT_TRANSFORMS[rng.integers(len(AUGMENT_TRANSFORMS))]
        pixels = np.ascontiguousarray(transform(sample.image.pixels, rng))
        out.append(
            LabeledSample(
                image=GrayImage(pixels),
                label=sample.label,
                source_id=f"{sample.source_id}#a{i:03d}",
                augmented_from=sample.source_id,
            )
        )
    return out


def augment_dataset(dataset: Dataset, multiplier: int, seed: int) -> Dataset:
    """Augment every sample; per-sample streams derive from (seed, source_id)."""
    if multiplier < 1:
        raise InputDataError(f"multiplier must be >= 1, got {multiplier}")
    new = list(dataset.samples)
    for sample in dataset.samples:
        child_seed = derive_seed(seed, sample.source_id)
        new.extend(augment(sample, multiplier, child_seed))
    return Dataset(samples=tuple(new))


def derive_seed(seed: int, token: str) -> int:
    """Stable 64-bit child seed from a parent seed and a string token."""
    digest = hashlib.sha256(f"{seed}:{token}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


# ---------------------------------------------------------------------------
# splitting


def _group_of(sample: LabeledSample) -> str:
    return sample.augmented_from if sample.augmented_from is not None else sample.source_id


def split(dataset: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded stratified split by source groups (no augmentation leakage).

    A group is a raw source plus all samples augmented from it; every group
    lands entirely in train or entirely in test. Per class the test side
    gets round(test_fraction * n_groups) groups, clamped so both sides keep
    at least one group of each class.
    """
    if not 0.0 < test_fraction < 1.0:
        raise SplitError(f"test_fraction must be in (0, 1), got {test_fraction}")
    rng = np.random.default_rng(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    test_groups: set[str] = set()
    for label in (Label.CANCER, Label.NONCANCER):
        groups = sorted({_group_of(s) for s in dataset.by_label(label)})
        if len(groups) < 2:
            raise SplitError(f"class {label.value} has {len(groups)} source groups, need >= 2")
        n_test = int(np.floor(test_fraction * len(groups) + 0.5))
        n_test = min(max(n_test, 1), len(groups) - 1)
        perm = rng.permutation(len(groups))
        test_groups.update(groups[i] for i in perm[:n_test])
    test = [s for s in dataset.samples if _group_of(s) in test_groups]
    train = [s for s in dataset.samples if _group_of(s) not in test_groups]
    return Dataset(samples=tuple(train)), Dataset(samples=tuple(test))


# ---------------------------------------------------------------------------
# manifest


def write_manifest(dataset: Dataset, path: str | Path) -> None:
    """CSV manifest: source_id,label,augmented_from,sha256 (pixel digest)."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["source_id", "label", "augmented_from", "sha256"])
        for s in dataset.samples:
            writer.writerow(
                [s.source_id, s.label.value, s.augmented_from or "", pixel_sha256(s.image)]
            )
