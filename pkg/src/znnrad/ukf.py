"""Unscented Kalman filtering along image scanlines.

The state model is a random walk (predicted mean unchanged, covariance
grows by ``process_noise_q`` per step) and the measurement map is the
identity on the first state component, so for the scalar state used in
image filtering the unscented update collapses algebraically to the
closed-form scalar Kalman filter. ``denoise_image`` exploits that to
filter all scanlines simultaneously; the equivalence is covered by tests
against ``unscented_update``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InputDataError, NumericError
from .ingest import GrayImage


class Passes(enum.Enum):
    ROWS = "rows"
    COLUMNS = "columns"
    ROWS_THEN_COLUMNS_AVERAGED = "rows_then_columns_averaged"


@dataclass(frozen=True)
class UkfParams:
    beta: float = 2.0
    process_noise_q: float = 1e-4
    measurement_noise_r: float = 1e-2
    passes: Passes = Passes.ROWS_THEN_COLUMNS_AVERAGED

    def __post_init__(self):
        if self.beta <= 0.0:
            raise InputDataError(f"beta must be > 0, got {self.beta}")
        if self.process_noise_q < 0.0:
            raise InputDataError(f"process_noise_q must be >= 0, got {self.process_noise_q}")
        if self.measurement_noise_r <= 0.0:
            raise InputDataError(
                f"measurement_noise_r must be > 0, got {self.measurement_noise_r}"
            )


@dataclass(frozen=True)
class SigmaPointSet:
    """2m+1 deterministically placed points with weights summing to 1."""

    points: np.ndarray  # (2m+1, m)
    weights: np.ndarray  # (2m+1,)

    @property
    def count(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class UkfState:
    mean: np.ndarray
    covariance: np.ndarray
    step: int = 0

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=np.float64))
        if cov.shape != (mean.size, mean.size):
            raise InputDataError(f"covariance shape {cov.shape} does not match state dim {mean.size}")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise NumericError("covariance not symmetric within 1e-12")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", 0.5 * (cov + cov.T))


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    """Cholesky factor, falling back to a symmetric PSD square root.

    The fallback keeps the zero-covariance degenerate case working; a
    matrix indefinite beyond -1e-9 * trace scale raises NumericError.
    """
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        eigvals, eigvecs = np.linalg.eigh(matrix)
        tol = 1e-9 * max(1.0, float(np.trace(matrix)))
        if eigvals.min() < -tol:
            raise NumericError(
                f"covariance indefinite beyond tolerance (min eigenvalue {eigvals.min():.3e})"
            )
        root = eigvecs @ np.diag(np.sqrt(np.clip(eigvals, 0.0, None))) @ eigvecs.T
        return root


def generate_sigma_points(state: UkfState, beta: float) -> SigmaPointSet:
    """Point 0 at the mean, points l at mean +/- column l of chol((m+beta)*cov).

    Weights follow the spread-parameter form: beta/(m+beta) at the center,
    1/(2(m+beta)) on each offset point, summing to 1 exactly.
    """
    m = state.mean.size
    factor = _psd_sqrt((m + beta) * state.covariance)
    points = np.empty((2 * m + 1, m))
    points[0] = state.mean
    for l in range(m):
        points[1 + l] = state.mean + factor[:, l]
        points[1 + m + l] = state.mean - factor[:, l]
    side = 1.0 / (2.0 * (m + beta))
    weights = np.full(2 * m + 1, side)
    weights[0] = beta / (m + beta)
    return SigmaPointSet(points=points, weights=weights)


def _measure(point: np.ndarray) -> float:
    # identity measurement map on the (first) state component
    return float(point[0])


def unscented_update(state: UkfState, measurement: float, params: UkfParams) -> UkfState:
    """One predict/update cycle against a scalar measurement in [0, 1]."""
    if not 0.0 <= measurement <= 1.0:
        raise InputDataError(f"measurement outside [0, 1]: {measurement}")
    m = state.mean.size
    pred_cov = state.covariance + params.process_noise_q * np.eye(m)
    sigma = generate_sigma_points(UkfState(state.mean, pred_cov, state.step), params.beta)
    projected = np.array([_measure(p) for p in sigma.points])
    predicted_measurement = float(sigma.weights @ projected)
    spread = projected - predicted_measurement
    innovation_cov = float(sigma.weights @ (spread * spread)) + params.measurement_noise_r
    cross_cov = (sigma.weights * spread) @ (sigma.points - state.mean)
    gain = cross_cov / innovation_cov
    new_mean = state.mean + gain * (measurement - predicted_measurement)
    new_cov = pred_cov - innovation_cov * np.outer(gain, gain)
    return UkfState(mean=new_mean, covariance=new_cov, step=state.step + 1)


# ---------------------------------------------------------------------------
# scanline denoising


def _filter_lines_causal(lines: np.ndarray, q: float, r: float) -> np.ndarray:
    """Scalar-state filter over every row of ``lines`` at once, left to right.

    Algebraically identical to unscented_update with a 1-D state: the
    identity-map sigma update reduces to gain P/(P+R).
    """
    n_lines, n = lines.shape
    mean = lines[:, 0].copy()
    var = np.full(n_lines, r)
    out = np.empty_like(lines)
    for i in range(n):
        var = var + q
        gain = var / (var + r)
        mean = mean + gain * (lines[:, i] - mean)
        var = (1.0 - gain) * var
        out[:, i] = mean
    return out


def _filter_lines(lines: np.ndarray, q: float, r: float) -> np.ndarray:
    # forward and backward traces averaged: zero-phase smoothing, so ramps
    # pick up no directional lag and re-denoising stays near-idempotent
    forward = _filter_lines_causal(lines, q, r)
    backward = _filter_lines_causal(lines[:, ::-1], q, r)[:, ::-1]
    return 0.5 * (forward + backward)


def denoise_image(image: GrayImage, params: UkfParams) -> GrayImage:
    """Filter scanlines per ``params.passes``; output clipped to [0, 1]."""
    q, r = params.process_noise_q, params.measurement_noise_r
    pixels = image.pixels
    if params.passes is Passes.ROWS:
        out = _filter_lines(pixels, q, r)
    elif params.passes is Passes.COLUMNS:
        out = _filter_lines(pixels.T, q, r).T
    else:
        rows = _filter_lines(pixels, q, r)
        cols = _filter_lines(pixels.T, q, r).T
        out = 0.5 * (rows + cols)
    return GrayImage(np.clip(out, 0.0, 1.0))
