"""Built-in experiment presets.

Two families: trace suites (one output directory per algorithm, full
artifact set each) on the showcase problem, and a gain sweep crossing
rounds-to-accuracy over a grid of model counts and local-step counts on a
better-conditioned problem (mu = 0.1) where the accuracy targets are
reachable quickly.  Every preset finishes in well under five minutes.
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import ProblemSpec
from .engine import LRSchedule, RunConfig, SampleSchedule

SHOWCASE_PROBLEM = ProblemSpec(n_clients=24, block_size=4, mu=2e-4, n_data=16, sigma_z=0.01, seed=3)
GAIN_PROBLEM = ProblemSpec(n_clients=24, block_size=1, mu=0.1, n_data=16, sigma_z=0.01, seed=7)

MASTER_SEED = 1234
N_SEEDS = 20

_CONSTANT_LR = LRSchedule(kind="constant", eta=0.1)
_DECAYING_LR = LRSchedule(kind="inverse", beta=30.0, gamma=100.0, granularity="round")
_FULL = SampleSchedule(kind="full")


@dataclass(frozen=True)
class SuitePreset:
    """A set of named runs sharing one problem, written side by side."""

    name: str
    description: str
    problem: ProblemSpec
    runs: tuple  # of (run_name, RunConfig)
    master_seed: int = MASTER_SEED
    n_seeds: int = N_SEEDS


@dataclass(frozen=True)
class GainSweepPreset:
    """A rounds-to-accuracy sweep over (algo, E, M) with shared baselines."""

    name: str
    description: str
    problem: ProblemSpec
    algos: tuple
    local_steps_grid: tuple
    n_models_grid: tuple
    epsilon_fracs: tuple
    beta_scale: float  # per-E learning rate: beta = beta_scale / E
    gamma: float
    rounds_cap: int
    master_seed: int = MASTER_SEED
    n_seeds: int = N_SEEDS


def _trace_suite(name: str, description: str, n_models: int, lr: LRSchedule) -> SuitePreset:
    runs = tuple(
        (
            algo,
            RunConfig(
                algo=algo,
                n_models=n_models,
                local_steps=5,
                rounds=1000,
                lr=lr,
                sampling=_FULL,
            ),
        )
        for algo in ("mfa-rand", "mfa-rr")
    )
    return SuitePreset(name=name, description=description, problem=SHOWCASE_PROBLEM, runs=runs)


PRESETS = {
    p.name: p
    for p in (
        _trace_suite(
            "two-model-constant-lr",
            "both schedulers, M=2, E=5, constant lr 0.1, 1000 rounds, 20 seeds",
            2,
            _CONSTANT_LR,
        ),
        _trace_suite(
            "two-model-decaying-lr",
            "both schedulers, M=2, E=5, lr 30/(100+t), 1000 rounds, 20 seeds",
            2,
            _DECAYING_LR,
        ),
        _trace_suite(
            "twelve-model-constant-lr",
            "both schedulers, M=12, E=5, constant lr 0.1, 1000 rounds, 20 seeds",
            12,
            _CONSTANT_LR,
        ),
        _trace_suite(
            "twelve-model-decaying-lr",
            "both schedulers, M=12, E=5, lr 30/(100+t), 1000 rounds, 20 seeds",
            12,
            _DECAYING_LR,
        ),
        GainSweepPreset(
            name="gain-vs-models",
            description="speed-up g(M) for E in {1,5,10}, M up to 12, both schedulers",
            problem=GAIN_PROBLEM,
            algos=("mfa-rand", "mfa-rr"),
            local_steps_grid=(1, 5, 10),
            n_models_grid=(2, 3, 4, 6, 8, 12),
            epsilon_fracs=(0.5, 0.2, 0.1),
            beta_scale=20.0,
            gamma=399.0,
            rounds_cap=5000,
        ),
    )
}


def get_preset(name: str):
    try:
        return PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise KeyError(f"unknown preset {name!r}; available: {known}") from None


def sweep_run_config(preset: GainSweepPreset, algo: str, local_steps: int, n_models: int) -> RunConfig:
    """The multi-model config for one sweep cell (rounds set by the search)."""
    lr = LRSchedule(
        kind="inverse",
        beta=preset.beta_scale / local_steps,
        gamma=preset.gamma,
        granularity="round",
    )
    return RunConfig(
        algo=algo,
        n_models=n_models,
        local_steps=local_steps,
        rounds=0,
        lr=lr,
        sampling=_FULL,
    )
