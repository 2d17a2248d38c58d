"""Batch command-line interface.

Subcommands: run, synthetic, denoise, extract, train, tune, evaluate,
noise-experiment. Exit codes: 0 success, 1 runtime failure, 2 usage or
configuration error. Failures print a machine-readable JSON object on
stderr. ZNNRAD_* environment variables override config-file fields;
explicit flags override both.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .config import PipelineConfig, apply_env_overrides, load_config
from .errors import ArtifactFormatError, ConfigurationError, ZnnradError
from .pipeline import (
    denoise_stage,
    evaluate_stage,
    extract_stage,
    noise_experiment_stage,
    run_pipeline,
    train_stage,
    tune_stage,
)
from .synthetic import generate_synthetic_dataset

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    # global flags live on a parent so they work before or after the
    # subcommand; SUPPRESS keeps the subparser from clobbering values
    # given at the top level
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="path to a JSON pipeline config")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override the config seed")
    common.add_argument(
        "--jobs",
        type=_positive_int,
        default=argparse.SUPPRESS,
        help="worker pool size (default: CPU count)",
    )
    common.add_argument(
        "--output", default=argparse.SUPPRESS, help="override the config output directory"
    )

    parser = argparse.ArgumentParser(
        prog="znnrad",
        description="Grayscale image classification pipeline (denoise, features, classify, tune).",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("run", help="execute the full pipeline", parents=[common])
    for stage in ("denoise", "extract", "train", "tune", "evaluate", "noise-experiment"):
        sub.add_parser(stage, help=f"run only the {stage} stage", parents=[common])

    synth = sub.add_parser(
        "synthetic", help="generate a labeled phantom dataset", parents=[common]
    )
    synth.add_argument("--out-dir", required=True)
    synth.add_argument("--n-per-class", type=_positive_int, default=50)
    synth.add_argument("--image-size", type=_positive_int, default=64)
    synth.add_argument("--noise-sigma", type=float, default=0.1)
    return parser


def _effective_config(args: argparse.Namespace) -> PipelineConfig:
    config_path = getattr(args, "config", None)
    if config_path:
        config = load_config(config_path)  # env overrides applied inside
    else:
        config = apply_env_overrides(PipelineConfig())
    seed = getattr(args, "seed", None)
    if seed is not None:
        config = replace(config, seed=seed)
    output = getattr(args, "output", None)
    if output is not None:
        config = replace(config, output_dir=output)
    return config


def _jobs(args: argparse.Namespace) -> int:
    jobs = getattr(args, "jobs", None)
    if jobs is not None:
        return jobs
    env = os.environ.get("ZNNRAD_JOBS")
    if env is not None:
        return max(1, int(env))
    return os.cpu_count() or 1


def _fail(exc: BaseException, code: int) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(payload), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "synthetic":
        seed = getattr(args, "seed", None)
        if seed is None:
            seed = 42
        try:
            paths = generate_synthetic_dataset(
                args.out_dir, args.n_per_class, args.image_size, seed, args.noise_sigma
            )
        except ZnnradError as exc:
            return _fail(exc, EXIT_RUNTIME)
        except OSError as exc:
            return _fail(exc, EXIT_RUNTIME)
        print(f"wrote {len(paths)} images under {args.out_dir}")
        return EXIT_OK

    try:
        config = _effective_config(args)
    except ConfigurationError as exc:
        return _fail(exc, EXIT_USAGE)

    out_dir = Path(config.output_dir)
    try:
        if args.command == "run":
            report = run_pipeline(config, jobs=_jobs(args))
            print(
                f"accuracy={report.accuracy:.4f} roc={report.roc:.4f} "
                f"(tp={report.counts.tp} tn={report.counts.tn} "
                f"fp={report.counts.fp} fn={report.counts.fn})"
            )
        elif args.command == "denoise":
            out_dir.mkdir(parents=True, exist_ok=True)
            artifact = denoise_stage(config, out_dir, jobs=_jobs(args))
            print(f"wrote {artifact}")
        elif args.command == "extract":
            train_csv, test_csv = extract_stage(config, out_dir, jobs=_jobs(args))
            print(f"wrote {train_csv} and {test_csv}")
        elif args.command == "train":
            model_path = train_stage(config, out_dir)
            print(f"wrote {model_path}")
        elif args.command == "tune":
            tuned_path, tuned = tune_stage(config, out_dir)
            print(f"wrote {tuned_path} (eta={tuned.eta:.4g} phi={tuned.phi:.4g} mu={tuned.mu:.4g})")
        elif args.command == "evaluate":
            report = evaluate_stage(config, out_dir)
            print(f"accuracy={report.accuracy:.4f} roc={report.roc:.4f}")
        elif args.command == "noise-experiment":
            out_dir.mkdir(parents=True, exist_ok=True)
            csv_path = noise_experiment_stage(config, out_dir)
            print(f"wrote {csv_path}")
        else:  # unreachable with required subparsers
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
    except (ConfigurationError, ArtifactFormatError) as exc:
        return _fail(exc, EXIT_USAGE)
    except ZnnradError as exc:
        return _fail(exc, EXIT_RUNTIME)
    except OSError as exc:
        return _fail(exc, EXIT_RUNTIME)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
