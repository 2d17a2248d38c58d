#!/usr/bin/env python3
"""Residual-decay comparison of the three dynamics variants under
no / constant / linear disturbance, on the unit scalar system.

Usage: python scripts/noise_rejection.py [--out OUT]
"""

import argparse
from pathlib import Path

import numpy as np

from znnrad.config import PipelineConfig
from znnrad.pipeline import noise_experiment_stage
from znnrad.zeroing import DieznnParams, LinearSystem, NoiseKind, NoiseSpec, Variant, residual_trace


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/noise_experiment")
    args = parser.parse_args()

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = noise_experiment_stage(PipelineConfig(output_dir=args.out), out_dir)

    system = LinearSystem(gram=np.eye(1), target=np.ones(1), dim=1)
    noises = {
        "none": NoiseSpec(),
        "constant": NoiseSpec(NoiseKind.CONSTANT, c0=1.0),
        "linear": NoiseSpec(NoiseKind.LINEAR, c0=1.0, c1=0.5),
    }
    print(f"{'variant':<8} {'noise':<9} {'final residual':>15}")
    for variant in (Variant.ZNN, Variant.IEZNN, Variant.DIEZNN):
        for name, noise in noises.items():
            trace = residual_trace(system, DieznnParams(variant=variant), noise)
            print(f"{variant.value:<8} {name:<9} {trace[-1][1]:>15.3e}")
    print(f"\ntraces written to {csv_path} (+ .svg)")


if __name__ == "__main__":
    main()
