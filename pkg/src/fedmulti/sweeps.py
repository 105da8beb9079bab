"""Seed sweeps and accuracy-crossing searches.

Rounds-to-accuracy experiments do not know their horizon up front, so the
crossing search advances all seed sessions in doubling chunks until the
seed-mean error curve crosses every requested accuracy (or hits the round
cap) and reports each first crossing.  Because sessions extend
deterministically, the resulting curves are identical to single-shot runs
of the final length.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .engine import RunConfig, TrainingSession, TrainingTrace, run_training
from .metrics import multi_model_rounds_to_accuracy
from .problem import ProblemConstants, QuadraticProblem


def run_seed_sweep(
    problem: QuadraticProblem,
    config: RunConfig,
    master_seed: int,
    n_seeds: int,
    constants: ProblemConstants | None = None,
) -> list[TrainingTrace]:
    """One trace per seed index, sequentially."""
    return [
        run_training(problem, config, master_seed, seed_index, constants=constants)
        for seed_index in range(n_seeds)
    ]


def stack_delta(traces: list[TrainingTrace]) -> np.ndarray:
    """(S, T, M) error array from a seed sweep."""
    return np.stack([t.delta for t in traces])


def stack_gap(traces: list[TrainingTrace]) -> np.ndarray:
    return np.stack([t.gap for t in traces])


@dataclass(frozen=True)
class CrossingResult:
    """First crossings of the seed-mean error curve for several accuracies."""

    crossings: dict  # epsilon -> 1-based round or None
    rounds_run: int
    mean_delta: np.ndarray  # (T, M)

    def crossing(self, epsilon: float) -> int | None:
        return self.crossings[epsilon]


def crossing_search(
    problem: QuadraticProblem,
    config: RunConfig,
    master_seed: int,
    n_seeds: int,
    epsilons: list[float],
    rounds_cap: int,
    constants: ProblemConstants | None = None,
    chunk: int = 256,
) -> CrossingResult:
    """Extend a seed sweep until the mean curve crosses every epsilon.

    The crossing per epsilon is the round by which *all* models are below
    it (max over models of the first crossing), computed on the mean over
    seeds.  Epsilons not reached within ``rounds_cap`` map to None.
    """
    if not epsilons:
        raise ValueError("need at least one epsilon")
    if any(e <= 0.0 for e in epsilons):
        raise ValueError("epsilons must be positive")
    sessions = [
        TrainingSession(problem, config, master_seed, seed_index, constants=constants)
        for seed_index in range(n_seeds)
    ]
    rounds_done = 0
    mean_delta = np.empty((0, config.n_models))
    crossings: dict = {}
    while True:
        step = min(chunk, rounds_cap - rounds_done)
        if step > 0:
            for session in sessions:
                session.run(step)
            rounds_done += step
            mean_delta = np.mean([s.delta_matrix() for s in sessions], axis=0)
        crossings = {e: multi_model_rounds_to_accuracy(mean_delta, e) for e in epsilons}
        if all(t is not None for t in crossings.values()) or rounds_done >= rounds_cap:
            return CrossingResult(crossings=crossings, rounds_run=rounds_done, mean_delta=mean_delta)
        chunk *= 2


def single_model_baseline(config: RunConfig) -> RunConfig:
    """The sequential baseline matching a multi-model run (same E, lr, sampling)."""
    return replace(config, algo="fedavg-seq", n_models=1, diagnostics=False)
