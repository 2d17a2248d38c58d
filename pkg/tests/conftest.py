import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from znnrad.ingest import GrayImage


@pytest.fixture
def gradient_phantom():
    """Seeded 64x64 diagonal ramp with sigma=0.1 Gaussian noise, clipped."""
    n = 64
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    clean = (i + j) / (2.0 * (n - 1))
    noisy = np.clip(clean + np.random.default_rng(42).normal(0.0, 0.1, clean.shape), 0.0, 1.0)
    return GrayImage(clean), GrayImage(noisy)
