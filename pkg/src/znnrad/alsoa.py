"""Lizard-jump population search over box-bounded parameter spaces.

Each lizard carries a position, body and tail angles, and a torque.
Exploration advances the angles through a quadratic angle map and kicks
the position along a direction derived from the body angle; exploitation
contracts toward the best-known position (kbest) scaled by torque, the
body/tail angle gap, and a uniform draw. Per-lizard random streams are
derived from (seed, iteration, index), so evaluating lizards in any
order or in parallel cannot change the outcome.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import InputDataError

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

# exploration kick range shrinks as exp(-rate * progress); keeps late
# iterations sampling near kbest while the magnitude bound stays torque * width
EXPLORE_DECAY_RATE = 5.0


@dataclass(frozen=True)
class AlsoaConfig:
    dims_w: int
    bounds: tuple[tuple[float, float], ...]
    population_m: int = 20
    max_iterations: int = 50
    seed: int = 0
    exploit_scale: float = 0.3

    def __post_init__(self):
        if self.population_m < 2:
            raise InputDataError(f"population_m must be >= 2, got {self.population_m}")
        if self.max_iterations < 0:
            raise InputDataError(f"max_iterations must be >= 0, got {self.max_iterations}")
        if self.dims_w < 1 or len(self.bounds) != self.dims_w:
            raise InputDataError(
                f"bounds length {len(self.bounds)} does not match dims_w {self.dims_w}"
            )
        for low, high in self.bounds:
            if not low < high:
                raise InputDataError(f"need low < high per dimension, got ({low}, {high})")

    @property
    def lows(self) -> np.ndarray:
        return np.array([b[0] for b in self.bounds])

    @property
    def highs(self) -> np.ndarray:
        return np.array([b[1] for b in self.bounds])


@dataclass(frozen=True, eq=False)
class Lizard:
    position: np.ndarray
    body_angle: float
    tail_angle: float
    torque: float
    fitness: float = math.inf


@dataclass(frozen=True, eq=False)
class AlsoaResult:
    best_position: np.ndarray
    best_fitness: float
    history: tuple[float, ...]


def _rng_for(seed: int, iteration: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, iteration, index])


def _wrap(angle: float) -> float:
    return angle % TWO_PI


def _angle_gap(a: float, b: float) -> float:
    """Wrapped absolute radian difference, in [0, pi]."""
    d = abs(a - b) % TWO_PI
    return min(d, TWO_PI - d)


def init_population(config: AlsoaConfig) -> list[Lizard]:
    """Uniform positions in bounds, angles in [0, 2pi), torques in (0, 1]."""
    rng = _rng_for(config.seed, 0, 0)
    population = []
    for _ in range(config.population_m):
        position = rng.uniform(config.lows, config.highs)
        body = rng.uniform(0.0, TWO_PI)
        tail = rng.uniform(0.0, TWO_PI)
        torque = 1.0 - rng.random()
        population.append(
            Lizard(position=position, body_angle=body, tail_angle=tail, torque=torque)
        )
    return population


def evaluate_fitness(position: np.ndarray, objective: Callable[[np.ndarray], float]) -> float:
    """Objective value with failures absorbed as +inf so the run continues."""
    try:
        value = float(objective(position))
    except Exception as exc:
        log.warning("objective failed at %s: %s", np.asarray(position).tolist(), exc)
        return math.inf
    return value if math.isfinite(value) else math.inf


def _unit_direction(angle: float, dims: int) -> np.ndarray:
    """Deterministic unit vector spread from one angle; zero stays zero."""
    phases = angle + np.pi * np.arange(dims) / max(dims, 1)
    vec = np.where(np.arange(dims) % 2 == 0, np.cos(phases), np.sin(phases))
    norm = float(np.linalg.norm(vec))
    return vec / norm if norm > 0.0 else vec


def explore_step(
    lizard: Lizard,
    config: AlsoaConfig,
    rng: np.random.Generator,
    intensity: float = 1.0,
) -> Lizard:
    """Angle walk plus a bounded position kick along the new body direction.

    The kick magnitude per dimension is torque * r * intensity * width,
    with r uniform in [0, 1) and intensity in (0, 1], so it never exceeds
    torque * bound width. Angles re-wrap into [0, 2pi).
    """
    width = config.highs - config.lows
    normalized = (lizard.position - config.lows) / width
    y = TWO_PI * float(np.mean(normalized))
    z = TWO_PI * float(1.0 - np.mean(normalized))
    denom = float(np.mean(width)) - 1.0
    if abs(denom) < 1e-9:
        denom = 1e-9
    d_body = (lizard.body_angle**2 - y) / denom
    d_tail = (-lizard.tail_angle**2 + z) / denom
    body = _wrap(lizard.body_angle + lizard.torque * d_body)
    tail = _wrap(lizard.tail_angle + lizard.torque * d_tail)
    r = rng.random()
    direction = _unit_direction(body, config.dims_w)
    step = lizard.torque * r * intensity * width * direction
    position = np.clip(lizard.position + step, config.lows, config.highs)
    return replace(lizard, position=position, body_angle=body, tail_angle=tail)


def exploit_step(
    lizard: Lizard,
    kbest: np.ndarray,
    config: AlsoaConfig,
    rng: np.random.Generator,
) -> Lizard:
    """Contract toward kbest by torque * exploit_scale * angle gap * r."""
    r = rng.random()
    gap = _angle_gap(lizard.body_angle, lizard.tail_angle)
    step = lizard.torque * config.exploit_scale * gap * r * (kbest - lizard.position)
    position = np.clip(lizard.position + step, config.lows, config.highs)
    return replace(lizard, position=position)


def optimize(objective: Callable[[np.ndarray], float], config: AlsoaConfig) -> AlsoaResult:
    """Init, evaluate, then iterate explore/exploit/evaluate to max_iterations.

    Best-so-far fitness and position never regress; the per-iteration best
    list is therefore non-increasing.
    """
    population = init_population(config)
    population = [
        replace(liz, fitness=evaluate_fitness(liz.position, objective)) for liz in population
    ]
    best = min(population, key=lambda liz: liz.fitness)
    kbest, best_fitness = best.position.copy(), best.fitness
    history = []
    for iteration in range(1, config.max_iterations + 1):
        intensity = math.exp(-EXPLORE_DECAY_RATE * iteration / config.max_iterations)
        for index, lizard in enumerate(population):
            rng = _rng_for(config.seed, iteration, index)
            lizard = replace(lizard, torque=1.0 - rng.random())
            lizard = explore_step(lizard, config, rng, intensity)
            lizard = exploit_step(lizard, kbest, config, rng)
            lizard = replace(lizard, fitness=evaluate_fitness(lizard.position, objective))
            population[index] = lizard
            if lizard.fitness < best_fitness:
                best_fitness = lizard.fitness
                kbest = lizard.position.copy()
        history.append(best_fitness)
    return AlsoaResult(best_position=kbest, best_fitness=best_fitness, history=tuple(history))


# ---------------------------------------------------------------------------
# persistence


def save_result(result: AlsoaResult, config: AlsoaConfig, path: str | Path) -> None:
    doc = {
        "schema": 1,
        "config": {
            "dims_w": config.dims_w,
            "bounds": [list(b) for b in config.bounds],
            "population_m": config.population_m,
            "max_iterations": config.max_iterations,
            "seed": config.seed,
            "exploit_scale": config.exploit_scale,
        },
        "best_position": result.best_position.tolist(),
        "best_fitness": result.best_fitness,
        "history": list(result.history),
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_history_csv(result: AlsoaResult, path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        f.write("iteration,best_fitness\n")
        for i, value in enumerate(result.history, start=1):
            f.write(f"{i},{value:.17g}\n")
