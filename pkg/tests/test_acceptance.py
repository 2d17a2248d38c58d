"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s``).
"""

import hashlib
import itertools
import math
import time
from pathlib import Path

import numpy as np
import pytest

from oracles import (
    brute_glcm,
    brute_haralick,
    brute_moments,
    euler_reference_trace,
    scalar_kalman_trace,
)
from znnrad.alsoa import AlsoaConfig, optimize
from znnrad.cli import main
from znnrad.config import PipelineConfig
from znnrad.features import compute_glcm, grayscale_stats, haralick
from znnrad.ingest import GrayImage
from znnrad.metrics import ConfusionCounts, accuracy, roc_score
from znnrad.pipeline import run_pipeline
from znnrad.ukf import UkfParams, UkfState, denoise_image, unscented_update
from znnrad.zeroing import (
    DieznnParams,
    LinearSystem,
    NoiseKind,
    NoiseSpec,
    Variant,
    residual_trace,
)

SCALAR = LinearSystem(gram=np.eye(1), target=np.ones(1), dim=1)


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'} ({detail})", flush=True)
    assert ok, f"{name}: {detail}"


def test_end_to_end_synthetic_run(tmp_path):
    config = PipelineConfig(
        dataset="synthetic",
        seed=42,
        synthetic_n_per_class=50,
        synthetic_image_size=64,
        output_dir=str(tmp_path),
    )
    started = time.perf_counter()
    report = run_pipeline(config, jobs=1)
    elapsed = time.perf_counter() - started
    ok = report.accuracy >= 0.95 and report.roc >= 0.95 and elapsed <= 60.0
    _report(
        "end-to-end synthetic run",
        ok,
        f"accuracy={report.accuracy:.4f} roc={report.roc:.4f} runtime={elapsed:.1f}s",
    )


def test_noise_rejection_ladder():
    started = time.perf_counter()
    clean = residual_trace(SCALAR, DieznnParams())
    linear = NoiseSpec(NoiseKind.LINEAR, c0=1.0, c1=0.5)
    finals = {}
    for variant in Variant:
        trace = residual_trace(SCALAR, DieznnParams(variant=variant), linear)
        finals[variant] = trace[-1][1]
    elapsed = time.perf_counter() - started
    ratio = clean[-1][1] / clean[0][1]
    ok = (
        ratio <= 1e-4
        and finals[Variant.DIEZNN] <= 1e-2
        and finals[Variant.IEZNN] >= 10.0 * finals[Variant.DIEZNN]
        and finals[Variant.ZNN] >= 100.0 * finals[Variant.DIEZNN]
        and elapsed < 1.0
    )
    _report(
        "noise rejection ladder",
        ok,
        f"noise-free ratio={ratio:.2e}, finals: dieznn={finals[Variant.DIEZNN]:.2e} "
        f"ieznn={finals[Variant.IEZNN]:.2e} znn={finals[Variant.ZNN]:.2e}, "
        f"runtime={elapsed:.2f}s",
    )


def test_ode_fidelity_sup_norm():
    worst = 0.0
    for noise in (NoiseSpec(), NoiseSpec(NoiseKind.LINEAR, c0=1.0, c1=0.5)):
        trace = residual_trace(SCALAR, DieznnParams(), noise)
        _, reference = euler_reference_trace(
            t0=-1.0, h=1e-4, horizon=10.0, eta=5.0, phi=8.0, mu=2.0, c0=noise.c0, c1=noise.c1
        )
        ours = np.array([v for _, v in trace])
        worst = max(worst, float(np.abs(ours - np.abs(reference)[::100]).max()))
    _report("ode fidelity vs 1e-4 reference", worst <= 1e-3, f"sup-norm={worst:.2e}")


def test_zero_noise_exponential_law():
    worst = 0.0
    for eta in (1.0, 2.0):
        params = DieznnParams(
            eta=eta, phi=0.0, mu=0.0, step_h=0.001, horizon_s=5.0, variant=Variant.ZNN
        )
        trace = residual_trace(SCALAR, params)
        expected = math.exp(-eta * 5.0)
        worst = max(worst, abs(trace[-1][1] / trace[0][1] - expected) / expected)
    _report("zero-noise exponential law", worst <= 1e-2, f"worst rel err={worst:.2e}")


def test_haralick_oracle_equivalence():
    rng = np.random.default_rng(2024)
    offsets = ((0, 1), (1, 0), (1, 1), (1, -1))
    worst = 0.0
    cases = 0
    for _ in range(1000):
        h = int(rng.integers(2, 7))
        w = int(rng.integers(2, 7))
        pixels = rng.uniform(0, 1, (h, w))
        glcm = compute_glcm(GrayImage(pixels), levels=4, offsets=offsets)
        reference_p = brute_glcm(pixels, 4, offsets)
        worst = max(worst, float(np.abs(glcm.probabilities - reference_p).max()))
        ours = np.array(haralick(glcm))
        reference = np.array(brute_haralick(glcm.probabilities))
        worst = max(worst, float(np.abs(ours - reference).max()))
        cases += 1
    _report(
        "haralick brute-force equivalence", worst <= 1e-12, f"{cases} cases, worst dev={worst:.2e}"
    )


def test_moment_oracle():
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(100):
        h = int(rng.integers(2, 12))
        w = int(rng.integers(2, 12))
        pixels = rng.uniform(0, 1, (h, w))
        stats = grayscale_stats(GrayImage(pixels))
        mean, std, kurt, skew = brute_moments(pixels)
        worst = max(
            worst,
            abs(stats.mean - mean),
            abs(stats.std_dev - std),
            abs(stats.kurtosis - kurt),
            abs(stats.skewness - skew),
        )
    const = grayscale_stats(GrayImage(np.full((6, 6), 0.4)))
    const_ok = (
        const.mean == pytest.approx(0.4)
        and const.std_dev == 0.0
        and const.degenerate
        and const.kurtosis == 0.0
        and const.skewness == 0.0
    )
    _report(
        "moment oracle", worst <= 1e-12 and const_ok, f"worst dev={worst:.2e}, constant flagged"
    )


def test_ukf_acceptance(gradient_phantom):
    params = UkfParams()
    measurements = np.random.default_rng(7).uniform(0, 1, 100)
    state = UkfState(np.array([measurements[0]]), np.array([[params.measurement_noise_r]]))
    means, variances = scalar_kalman_trace(
        measurements,
        measurements[0],
        params.measurement_noise_r,
        params.process_noise_q,
        params.measurement_noise_r,
    )
    worst = 0.0
    for i, z in enumerate(measurements):
        state = unscented_update(state, float(z), params)
        worst = max(worst, abs(state.mean[0] - means[i]), abs(state.covariance[0, 0] - variances[i]))
    clean, noisy = gradient_phantom
    out = denoise_image(noisy, params)
    mse_noisy = float(np.mean((noisy.pixels - clean.pixels) ** 2))
    mse_out = float(np.mean((out.pixels - clean.pixels) ** 2))
    reduction = 1.0 - mse_out / mse_noisy
    ok = worst <= 1e-9 and reduction >= 0.30
    _report(
        "ukf linear equivalence + phantom mse",
        ok,
        f"kalman dev={worst:.2e}, mse reduction={100 * reduction:.1f}%",
    )


def test_alsoa_sphere_benchmark():
    sphere = lambda x: float(np.sum(x * x))
    wins = 0
    monotone = True
    deterministic = True
    for seed in range(20):
        config = AlsoaConfig(
            dims_w=2,
            bounds=((-5.0, 5.0), (-5.0, 5.0)),
            population_m=20,
            max_iterations=200,
            seed=seed,
        )
        result = optimize(sphere, config)
        repeat = optimize(sphere, config)
        deterministic &= (
            np.array_equal(result.best_position, repeat.best_position)
            and result.history == repeat.history
        )
        monotone &= all(b <= a for a, b in zip(result.history, result.history[1:]))
        wins += result.best_fitness < 1e-2
    ok = wins >= 18 and monotone and deterministic
    _report(
        "alsoa sphere benchmark",
        ok,
        f"{wins}/20 seeds < 1e-2, monotone={monotone}, deterministic={deterministic}",
    )


def test_metrics_exhaustive():
    checked = 0
    ok = True
    for tp, tn, fp, fn in itertools.product(range(11), repeat=4):
        total = tp + tn + fp + fn
        if not 1 <= total <= 10:
            continue
        counts = ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn)
        ok &= accuracy(counts) == (tp + tn) / total
        if tp + fn >= 1 and tn + fp >= 1:
            ok &= roc_score(counts) == 0.5 * (tp / (tp + fn) + tn / (tn + fp))
        checked += 1
    _report("metrics exhaustive (totals <= 10)", ok, f"{checked} tuples checked")


def test_reproducibility_byte_identical(tmp_path):
    def digest_tree(root, skip=("run_manifest.json",)):
        out = {}
        for p in sorted(Path(root).rglob("*")):
            if p.is_file() and p.name not in skip:
                out[str(p.relative_to(root))] = hashlib.sha256(p.read_bytes()).hexdigest()
        return out

    synth_a = tmp_path / "synth"
    assert main(["synthetic", "--out-dir", str(synth_a), "--n-per-class", "4",
                 "--image-size", "32", "--seed", "9"]) == 0
    first_synth = digest_tree(synth_a)
    assert main(["synthetic", "--out-dir", str(synth_a), "--n-per-class", "4",
                 "--image-size", "32", "--seed", "9"]) == 0
    synth_ok = digest_tree(synth_a) == first_synth

    run_dir = tmp_path / "run"
    config = PipelineConfig(
        dataset="synthetic",
        seed=11,
        synthetic_n_per_class=6,
        synthetic_image_size=32,
        output_dir=str(run_dir),
    )
    run_pipeline(config, jobs=1)
    first_run = digest_tree(run_dir)
    run_pipeline(config, jobs=1)
    run_ok = digest_tree(run_dir) == first_run
    _report(
        "reproducibility (byte-identical artifacts)",
        synth_ok and run_ok,
        f"synthetic={synth_ok}, run={run_ok}",
    )
