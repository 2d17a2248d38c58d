"""Stage orchestration: each stage reads the previous stage's artifacts.

``run_pipeline`` is literally the stage functions chained in order, so a
full run and a sequence of single-stage invocations over the same config
produce identical artifacts. Per-image work (denoising, extraction) can
fan out over a thread pool; results are keyed and re-sorted by source_id
before anything is written, so the worker count never changes output.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import alsoa as alsoa_mod
from .artifacts import load_image_stack, save_image_stack
from .config import PipelineConfig, TuneConfig, config_digest, save_config, to_dict
from .errors import ConfigurationError, TrainingError
from .features import FeatureVector, extract_features, read_feature_csv, write_feature_csv
from .ingest import (
    Dataset,
    GrayImage,
    Label,
    LabeledSample,
    augment_dataset,
    derive_seed,
    load_dataset,
    split,
    write_manifest,
)
from .metrics import EvalReport, emit_report, make_report
from .synthetic import generate_synthetic_dataset
from .ukf import denoise_image
from .zeroing import (
    DieznnParams,
    LinearSystem,
    NoiseKind,
    NoiseSpec,
    Variant,
    load_model,
    predict,
    residual_trace,
    save_model,
    train,
    write_trace_csv,
)

class StageTimer:
    def __init__(self):
        self.timings: list[dict] = []

    def record(self, name: str, seconds: float) -> None:
        self.timings.append({"stage": name, "seconds": seconds})


def _map_images(fn, items, jobs: int):
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


# ---------------------------------------------------------------------------
# data acquisition


def acquire_dataset(config: PipelineConfig, out_dir: Path) -> Dataset:
    """Load the configured dataset, generating phantoms first if synthetic."""
    if config.dataset == "synthetic":
        data_dir = out_dir / "synthetic_data"
        generate_synthetic_dataset(
            data_dir,
            config.synthetic_n_per_class,
            config.synthetic_image_size,
            config.seed,
            config.synthetic_noise_sigma,
        )
        return load_dataset(data_dir)
    root = Path(config.dataset)
    if not root.is_dir():
        raise ConfigurationError(f"dataset path does not exist: {root}")
    return load_dataset(root)


# ---------------------------------------------------------------------------
# stages


def denoise_stage(config: PipelineConfig, out_dir: Path, jobs: int = 1) -> Path:
    """acquire -> augment -> split -> denoise; emits denoised.zip + manifest."""
    dataset = acquire_dataset(config, out_dir)
    if config.augment_multiplier >= 1:
        dataset = augment_dataset(dataset, config.augment_multiplier, config.seed)
    write_manifest(dataset, out_dir / "manifest.csv")
    train_set, test_set = split(dataset, config.test_fraction, config.seed)

    def one(sample: LabeledSample) -> tuple[str, np.ndarray]:
        return sample.source_id, denoise_image(sample.image, config.ukf).pixels

    images: dict[str, np.ndarray] = {}
    meta_samples = {}
    for name, subset in (("train", train_set), ("test", test_set)):
        for source_id, pixels in sorted(_map_images(one, subset.samples, jobs)):
            images[source_id] = pixels
        meta_samples[name] = [
            {"source_id": s.source_id, "label": s.label.value, "augmented_from": s.augmented_from}
            for s in subset.samples
        ]
    artifact = out_dir / "denoised.zip"
    save_image_stack(
        artifact,
        images,
        meta={"splits": meta_samples, "config_digest": config_digest(config)},
    )
    return artifact


def extract_stage(config: PipelineConfig, out_dir: Path, jobs: int = 1) -> tuple[Path, Path]:
    """Denoised artifact -> features_train.csv + features_test.csv."""
    images, meta = load_image_stack(out_dir / "denoised.zip")

    def one(entry: dict) -> tuple[str, FeatureVector]:
        image = GrayImage(images[entry["source_id"]])
        fv = extract_features(image, config.features)
        return entry["source_id"], replace(fv, label=Label(entry["label"]))

    paths = []
    for name in ("train", "test"):
        rows = sorted(_map_images(one, meta["splits"][name], jobs))
        path = out_dir / f"features_{name}.csv"
        write_feature_csv(rows, path)
        paths.append(path)
    return paths[0], paths[1]


def train_stage(
    config: PipelineConfig, out_dir: Path, params: DieznnParams | None = None
) -> Path:
    """features_train.csv -> model.json + training_trace.csv."""
    rows = read_feature_csv(out_dir / "features_train.csv")
    model = train([fv for _, fv in rows], params or config.dieznn, config.noise)
    model_path = out_dir / "model.json"
    save_model(model, model_path, config_digest=config_digest(config))
    write_trace_csv(list(model.training_trace), out_dir / "training_trace.csv")
    return model_path


def _candidate_params(position: np.ndarray, base: DieznnParams, mode: str) -> DieznnParams:
    if mode == "phi":
        return replace(base, phi=float(position[0]))
    return replace(base, eta=float(position[0]), phi=float(position[1]), mu=float(position[2]))


def build_tuning_objective(
    features: list[FeatureVector],
    base_params: DieznnParams,
    noise: NoiseSpec,
    tune: TuneConfig,
    seed: int,
):
    """1 - validation accuracy (plus optional weight-count penalty).

    The training features are re-split once, seeded, into fit/validation
    subsets; every candidate trains on the same fit subset.
    """
    rng = np.random.default_rng(np.uint64(derive_seed(seed, "tune-validation")))
    by_class = {label: [fv for fv in features if fv.label is label] for label in Label}
    fit, val = [], []
    for label, group in sorted(by_class.items(), key=lambda kv: kv[0].value):
        if len(group) < 2:
            raise TrainingError(f"class {label.value} needs >= 2 samples to tune")
        perm = rng.permutation(len(group))
        n_val = min(max(int(np.floor(tune.validation_fraction * len(group) + 0.5)), 1), len(group) - 1)
        val.extend(group[i] for i in perm[:n_val])
        fit.extend(group[i] for i in perm[n_val:])

    def objective(position: np.ndarray) -> float:
        params = _candidate_params(position, base_params, tune.mode)
        model = train(fit, params, noise)
        correct = sum(1 for fv in val if predict(model, fv)[0] is fv.label)
        penalty = tune.feature_penalty * float(np.count_nonzero(np.abs(model.weights) > 1e-6))
        return 1.0 - correct / len(val) + penalty

    return objective


def tune_stage(config: PipelineConfig, out_dir: Path) -> tuple[Path, DieznnParams]:
    """features_train.csv -> tuned params JSON + convergence CSV."""
    if config.alsoa is None:
        raise ConfigurationError("config has no alsoa section; nothing to tune")
    tune_cfg = config.alsoa
    rows = read_feature_csv(out_dir / "features_train.csv")
    objective = build_tuning_objective(
        [fv for _, fv in rows], config.dieznn, config.noise, tune_cfg, config.seed
    )
    if tune_cfg.mode == "phi":
        bounds = (tune_cfg.phi_bounds,)
    else:
        bounds = (tune_cfg.eta_bounds, tune_cfg.phi_bounds, tune_cfg.mu_bounds)
    search = alsoa_mod.AlsoaConfig(
        dims_w=len(bounds),
        bounds=bounds,
        population_m=tune_cfg.population_m,
        max_iterations=tune_cfg.max_iterations,
        seed=derive_seed(config.seed, "alsoa"),
    )
    result = alsoa_mod.optimize(objective, search)
    tuned = _candidate_params(result.best_position, config.dieznn, tune_cfg.mode)
    alsoa_mod.save_result(result, search, out_dir / "tuning.json")
    alsoa_mod.write_history_csv(result, out_dir / "tuning_history.csv")
    tuned_path = out_dir / "tuned_params.json"
    tuned_path.write_text(
        json.dumps(
            {
                "schema": 1,
                "eta": tuned.eta,
                "phi": tuned.phi,
                "mu": tuned.mu,
                "best_fitness": result.best_fitness,
                "config_digest": config_digest(config),
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    return tuned_path, tuned


def evaluate_stage(config: PipelineConfig, out_dir: Path) -> EvalReport:
    """model.json + features_test.csv -> report.json/per_sample.csv/metrics.svg."""
    model = load_model(out_dir / "model.json")
    rows = read_feature_csv(out_dir / "features_test.csv")
    truth, predicted, scores, ids = [], [], [], []
    for source_id, fv in rows:
        label, score = predict(model, fv)
        ids.append(source_id)
        truth.append(fv.label)
        predicted.append(label)
        scores.append(score)
    report = make_report(
        truth, predicted, scores, ids, seed=config.seed, config_digest=config_digest(config)
    )
    emit_report(report, out_dir)
    return report


def noise_experiment_stage(config: PipelineConfig, out_dir: Path) -> Path:
    """Residual traces for all 3 variants x 3 noise kinds on the scalar system.

    Writes a 9-trace long-form CSV plus an SVG overlay of the residual
    trajectories on a log scale.
    """
    system = LinearSystem(
        gram=np.eye(1), target=np.ones(1), dim=1
    )
    base = config.dieznn
    noises = {
        "none": NoiseSpec(NoiseKind.NONE),
        "constant": NoiseSpec(NoiseKind.CONSTANT, c0=1.0),
        "linear": NoiseSpec(NoiseKind.LINEAR, c0=1.0, c1=0.5),
    }
    traces = {}
    for variant in (Variant.ZNN, Variant.IEZNN, Variant.DIEZNN):
        params = replace(base, variant=variant)
        for noise_name, noise in noises.items():
            traces[f"{variant.value}-{noise_name}"] = residual_trace(system, params, noise)
    csv_path = out_dir / "noise_experiment.csv"
    with open(csv_path, "w", newline="") as f:
        f.write("trace,clock,residual\n")
        for name in sorted(traces):
            for clock, residual in traces[name]:
                f.write(f"{name},{clock:.17g},{residual:.17g}\n")
    (out_dir / "noise_experiment.svg").write_text(_trace_chart_svg(traces))
    return csv_path


_TRACE_COLORS = (
    "#4878a8", "#a85448", "#6a9a48", "#9a6a48", "#48a89a",
    "#a8489a", "#787878", "#c8a848", "#484848",
)


def _trace_chart_svg(traces: dict[str, list[tuple[float, float]]]) -> str:
    width, height, margin = 640, 360, 50
    floor = 1e-12
    all_vals = [max(v, floor) for tr in traces.values() for _, v in tr]
    lo = np.floor(np.log10(min(all_vals)))
    hi = np.ceil(np.log10(max(max(all_vals), floor * 10)))
    hi = max(hi, lo + 1.0)
    t_max = max(tr[-1][0] for tr in traces.values())
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]

    def xy(t, v):
        x = margin + (width - 2 * margin) * t / t_max
        y = margin + (height - 2 * margin) * (hi - np.log10(max(v, floor))) / (hi - lo)
        return x, y

    for decade in np.arange(lo, hi + 0.5):
        _, y = xy(0.0, 10.0**decade)
        parts.append(
            f'<line x1="{margin}" y1="{y:.1f}" x2="{width - margin}" y2="{y:.1f}" '
            f'stroke="#dddddd" stroke-width="1"/>'
            f'<text x="{margin - 6}" y="{y + 3:.1f}" font-size="9" text-anchor="end" '
            f'font-family="sans-serif">1e{decade:.0f}</text>'
        )
    for i, name in enumerate(sorted(traces)):
        color = _TRACE_COLORS[i % len(_TRACE_COLORS)]
        pts = " ".join(f"{x:.1f},{y:.1f}" for x, y in (xy(t, v) for t, v in traces[name][:: max(1, len(traces[name]) // 400)]))
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>'
        )
        y_label = margin + 12 * (i + 1)
        parts.append(
            f'<text x="{width - margin + 4}" y="{y_label}" font-size="9" fill="{color}" '
            f'font-family="sans-serif" text-anchor="start">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# full run


def run_pipeline(config: PipelineConfig, jobs: int = 1) -> EvalReport:
    """Execute every stage in order, stamping artifacts and timings."""
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_config(config, out_dir / "config.json")
    timer = StageTimer()

    started = time.perf_counter()
    denoise_stage(config, out_dir, jobs)
    timer.record("denoise", time.perf_counter() - started)

    started = time.perf_counter()
    extract_stage(config, out_dir, jobs)
    timer.record("extract", time.perf_counter() - started)

    params = config.dieznn
    if config.alsoa is not None:
        started = time.perf_counter()
        _, params = tune_stage(config, out_dir)
        timer.record("tune", time.perf_counter() - started)

    started = time.perf_counter()
    train_stage(config, out_dir, params)
    timer.record("train", time.perf_counter() - started)

    started = time.perf_counter()
    report = evaluate_stage(config, out_dir)
    timer.record("evaluate", time.perf_counter() - started)

    manifest = {
        "schema": 1,
        "seed": config.seed,
        "config_digest": config_digest(config),
        "config": to_dict(config),
        "stages": timer.timings,
    }
    (out_dir / "run_manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return report
