#!/usr/bin/env python3
"""Lizard-search demo: sphere benchmark, then tuning the integral gain
of the classifier on a synthetic feature set.

Usage: python scripts/tune_example.py [--seeds N] [--iterations N]
"""

import argparse
import tempfile
from pathlib import Path

import numpy as np

from znnrad.alsoa import AlsoaConfig, optimize
from znnrad.config import PipelineConfig, TuneConfig
from znnrad.pipeline import denoise_stage, extract_stage, tune_stage


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--iterations", type=int, default=200)
    args = parser.parse_args()

    sphere = lambda x: float(np.sum(x * x))
    print(f"2-D sphere, m=20, {args.iterations} iterations:")
    for seed in range(args.seeds):
        config = AlsoaConfig(
            dims_w=2,
            bounds=((-5.0, 5.0), (-5.0, 5.0)),
            population_m=20,
            max_iterations=args.iterations,
            seed=seed,
        )
        result = optimize(sphere, config)
        print(f"  seed {seed}: best={result.best_fitness:.3e} at {result.best_position}")

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp)
        config = PipelineConfig(
            dataset="synthetic",
            seed=1,
            synthetic_n_per_class=10,
            synthetic_image_size=32,
            alsoa=TuneConfig(population_m=6, max_iterations=5),
            output_dir=str(out),
        )
        denoise_stage(config, out, jobs=1)
        extract_stage(config, out, jobs=1)
        _, tuned = tune_stage(config, out)
        print(f"\ntuned classifier gains: eta={tuned.eta:.4g} phi={tuned.phi:.4g} mu={tuned.mu:.4g}")


if __name__ == "__main__":
    main()
