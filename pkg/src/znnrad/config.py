"""Pipeline configuration: one JSON document drives every subcommand.

The on-disk form round-trips losslessly (load -> dump -> load is the
identity) and the sha256 digest of the canonical dump stamps every
artifact a run emits. Environment variables prefixed ZNNRAD_ override
top-level scalar fields; command-line flags override both.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigurationError
from .features import FeatureConfig
from .ukf import Passes, UkfParams
from .zeroing import DieznnParams, NoiseKind, NoiseSpec, Variant

ENV_PREFIX = "ZNNRAD_"

# top-level scalar fields that ZNNRAD_<NAME> may override
ENV_FIELDS = {
    "dataset": str,
    "seed": int,
    "augment_multiplier": int,
    "test_fraction": float,
    "output_dir": str,
}


@dataclass(frozen=True)
class TuneConfig:
    """Hyperparameter search settings for the tune stage."""

    mode: str = "phi"  # "phi" (1-D) or "eta_phi_mu" (3-D)
    population_m: int = 20
    max_iterations: int = 50
    validation_fraction: float = 0.25
    feature_penalty: float = 0.0
    phi_bounds: tuple[float, float] = (0.1, 50.0)
    eta_bounds: tuple[float, float] = (0.1, 20.0)
    mu_bounds: tuple[float, float] = (0.1, 10.0)

    def __post_init__(self):
        if self.mode not in ("phi", "eta_phi_mu"):
            raise ConfigurationError(f"unknown tune mode {self.mode!r}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ConfigurationError(
                f"validation_fraction must be in (0, 1), got {self.validation_fraction}"
            )


@dataclass(frozen=True)
class PipelineConfig:
    dataset: str = "synthetic"
    seed: int = 42
    augment_multiplier: int = 0  # 0 disables augmentation
    test_fraction: float = 0.25
    synthetic_n_per_class: int = 50
    synthetic_image_size: int = 64
    synthetic_noise_sigma: float = 0.1
    ukf: UkfParams = field(default_factory=UkfParams)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    dieznn: DieznnParams = field(default_factory=DieznnParams)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    alsoa: TuneConfig | None = None
    output_dir: str = "out"

    def __post_init__(self):
        if self.augment_multiplier < 0:
            raise ConfigurationError(
                f"augment_multiplier must be >= 0, got {self.augment_multiplier}"
            )
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigurationError(f"test_fraction must be in (0, 1), got {self.test_fraction}")


def to_dict(config: PipelineConfig) -> dict:
    doc = {
        "dataset": config.dataset,
        "seed": config.seed,
        "augment_multiplier": config.augment_multiplier,
        "test_fraction": config.test_fraction,
        "synthetic_n_per_class": config.synthetic_n_per_class,
        "synthetic_image_size": config.synthetic_image_size,
        "synthetic_noise_sigma": config.synthetic_noise_sigma,
        "ukf": {
            "beta": config.ukf.beta,
            "process_noise_q": config.ukf.process_noise_q,
            "measurement_noise_r": config.ukf.measurement_noise_r,
            "passes": config.ukf.passes.value,
        },
        "features": {
            "levels": config.features.levels,
            "max_bands": config.features.max_bands,
            "energy_floor": config.features.energy_floor,
            "envelope_p": config.features.envelope_p,
            "offsets": [list(o) for o in config.features.offsets],
        },
        "dieznn": {
            "eta": config.dieznn.eta,
            "phi": config.dieznn.phi,
            "mu": config.dieznn.mu,
            "step_h": config.dieznn.step_h,
            "horizon_s": config.dieznn.horizon_s,
            "ridge_lambda": config.dieznn.ridge_lambda,
            "variant": config.dieznn.variant.value,
        },
        "noise": {"kind": config.noise.kind.value, "c0": config.noise.c0, "c1": config.noise.c1},
        "alsoa": None,
        "output_dir": config.output_dir,
    }
    if config.alsoa is not None:
        doc["alsoa"] = {
            "mode": config.alsoa.mode,
            "population_m": config.alsoa.population_m,
            "max_iterations": config.alsoa.max_iterations,
            "validation_fraction": config.alsoa.validation_fraction,
            "feature_penalty": config.alsoa.feature_penalty,
            "phi_bounds": list(config.alsoa.phi_bounds),
            "eta_bounds": list(config.alsoa.eta_bounds),
            "mu_bounds": list(config.alsoa.mu_bounds),
        }
    return doc


def from_dict(doc: dict) -> PipelineConfig:
    try:
        ukf = doc.get("ukf", {})
        features = doc.get("features", {})
        dz = doc.get("dieznn", {})
        noise = doc.get("noise", {})
        alsoa_doc = doc.get("alsoa")
        return PipelineConfig(
            dataset=doc.get("dataset", "synthetic"),
            seed=int(doc.get("seed", 42)),
            augment_multiplier=int(doc.get("augment_multiplier", 0)),
            test_fraction=float(doc.get("test_fraction", 0.25)),
            synthetic_n_per_class=int(doc.get("synthetic_n_per_class", 50)),
            synthetic_image_size=int(doc.get("synthetic_image_size", 64)),
            synthetic_noise_sigma=float(doc.get("synthetic_noise_sigma", 0.1)),
            ukf=UkfParams(
                beta=float(ukf.get("beta", 2.0)),
                process_noise_q=float(ukf.get("process_noise_q", 1e-4)),
                measurement_noise_r=float(ukf.get("measurement_noise_r", 1e-2)),
                passes=Passes(ukf.get("passes", "rows_then_columns_averaged")),
            ),
            features=FeatureConfig(
                levels=int(features.get("levels", 8)),
                max_bands=int(features.get("max_bands", 4)),
                energy_floor=float(features.get("energy_floor", 0.1)),
                envelope_p=int(features.get("envelope_p", 0)),
                offsets=tuple(tuple(o) for o in features.get("offsets", [[0, 1], [1, 0], [1, 1], [1, -1]])),
            ),
            dieznn=DieznnParams(
                eta=float(dz.get("eta", 5.0)),
                phi=float(dz.get("phi", 8.0)),
                mu=float(dz.get("mu", 2.0)),
                step_h=float(dz.get("step_h", 0.01)),
                horizon_s=float(dz.get("horizon_s", 10.0)),
                ridge_lambda=float(dz.get("ridge_lambda", 1e-2)),
                variant=Variant(dz.get("variant", "dieznn")),
            ),
            noise=NoiseSpec(
                kind=NoiseKind(noise.get("kind", "none")),
                c0=float(noise.get("c0", 0.0)),
                c1=float(noise.get("c1", 0.0)),
            ),
            alsoa=None
            if alsoa_doc is None
            else TuneConfig(
                mode=alsoa_doc.get("mode", "phi"),
                population_m=int(alsoa_doc.get("population_m", 20)),
                max_iterations=int(alsoa_doc.get("max_iterations", 50)),
                validation_fraction=float(alsoa_doc.get("validation_fraction", 0.25)),
                feature_penalty=float(alsoa_doc.get("feature_penalty", 0.0)),
                phi_bounds=tuple(alsoa_doc.get("phi_bounds", [0.1, 50.0])),
                eta_bounds=tuple(alsoa_doc.get("eta_bounds", [0.1, 20.0])),
                mu_bounds=tuple(alsoa_doc.get("mu_bounds", [0.1, 10.0])),
            ),
            output_dir=doc.get("output_dir", "out"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"invalid configuration: {exc}") from exc


def load_config(path: str | Path) -> PipelineConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
    return apply_env_overrides(from_dict(doc))


def save_config(config: PipelineConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_dict(config), indent=2, sort_keys=True) + "\n")


def config_digest(config: PipelineConfig) -> str:
    canonical = json.dumps(to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def apply_env_overrides(config: PipelineConfig, environ: dict | None = None) -> PipelineConfig:
    env = os.environ if environ is None else environ
    changes = {}
    for name, cast in ENV_FIELDS.items():
        raw = env.get(ENV_PREFIX + name.upper())
        if raw is None:
            continue
        try:
            changes[name] = cast(raw)
        except ValueError as exc:
            raise ConfigurationError(
                f"bad value for {ENV_PREFIX}{name.upper()}: {raw!r} ({exc})"
            ) from exc
    return replace(config, **changes) if changes else config
