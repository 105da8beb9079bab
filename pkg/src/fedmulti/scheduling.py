"""Client-to-model matching schedules.

Three schedules are provided:

* random matching: a fresh uniform equal partition every round, subset j
  training model j (a random partition followed by identity matching has
  the same law as partitioning and then randomly permuting subset labels,
  with one fewer draw);
* round robin: one partition per frame of M consecutive rounds, subsets
  rotating across models so that every (client, model) pair occurs exactly
  once per frame;
* full participation: all clients on the single model, the sequential
  baseline (and the M=1 reduction of both schedules above).

Rounds are 1-indexed throughout so the frame boundary test "t mod M = 1"
reads the same as the round-robin pseudo-code.  Assignments map 0-based
client indices to 0-based model indices; the 1-based rotation rule
model = ((j + t - 2) mod M) + 1 becomes (j0 + t - 1) mod M.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Assignment:
    """One round's matching: model_of[c] is the model trained by client c."""

    round_index: int  # 1-based
    n_models: int
    model_of: np.ndarray  # (N,) ints in [0, n_models)

    @property
    def n_clients(self) -> int:
        return self.model_of.shape[0]

    def clients_of(self, model: int) -> np.ndarray:
        return np.flatnonzero(self.model_of == model)

    def validate(self) -> None:
        counts = np.bincount(self.model_of, minlength=self.n_models)
        expected = self.n_clients // self.n_models
        if counts.shape[0] != self.n_models or not np.all(counts == expected):
            raise AssertionError(
                f"round {self.round_index}: model loads {counts.tolist()} != {expected} each"
            )


def _check_divisible(n_clients: int, n_models: int) -> int:
    if n_models < 1:
        raise ValueError("M must be at least 1")
    if n_clients % n_models != 0:
        raise ValueError("N must be an integral multiple of M")
    return n_clients // n_models


@dataclass(frozen=True)
class Partition:
    """An ordered equal split of the client pool, tagged by creation round."""

    created_at: int
    n_models: int
    perm: np.ndarray  # (N,) permutation; subset j is perm[j*size:(j+1)*size]

    @property
    def subset_size(self) -> int:
        return self.perm.shape[0] // self.n_models

    def subsets(self) -> list[np.ndarray]:
        size = self.subset_size
        return [self.perm[j * size : (j + 1) * size] for j in range(self.n_models)]


def partition_clients(n_clients: int, n_models: int, rng: np.random.Generator, created_at: int = 1) -> Partition:
    """Uniform equal partition: shuffle the pool, cut into M blocks."""
    _check_divisible(n_clients, n_models)
    return Partition(created_at=created_at, n_models=n_models, perm=rng.permutation(n_clients))


def _assignment_from(perm: np.ndarray, model_of_subset: np.ndarray, t: int, n_models: int) -> Assignment:
    size = perm.shape[0] // n_models
    model_of = np.empty(perm.shape[0], dtype=np.int64)
    model_of[perm] = np.repeat(model_of_subset, size)
    return Assignment(round_index=t, n_models=n_models, model_of=model_of)


def random_matching_assign(t: int, n_clients: int, n_models: int, rng: np.random.Generator) -> Assignment:
    """Fresh uniform partition at round t; subset j trains model j."""
    if t < 1:
        raise ValueError("rounds are 1-indexed")
    part = partition_clients(n_clients, n_models, rng, created_at=t)
    return _assignment_from(part.perm, np.arange(n_models), t, n_models)


@dataclass
class FrameCache:
    """Mutable holder for the round-robin partition of the current frame."""

    partition: Partition | None = field(default=None)


def frame_index(t: int, n_models: int) -> int:
    """1-based frame number of round t: l = 1 + (t-1) // M."""
    return 1 + (t - 1) // n_models


def round_robin_assign(
    t: int,
    n_clients: int,
    n_models: int,
    rng: np.random.Generator,
    cache: FrameCache,
) -> Assignment:
    """Frame-held partition with rotation (j0 + t - 1) mod M.

    A new partition is drawn at every frame start ((t-1) mod M == 0, the
    1-indexed "t mod M = 1" test); within the frame subsets rotate so each
    model sees every subset exactly once.
    """
    if t < 1:
        raise ValueError("rounds are 1-indexed")
    _check_divisible(n_clients, n_models)
    if (t - 1) % n_models == 0 or cache.partition is None:
        cache.partition = partition_clients(n_clients, n_models, rng, created_at=t)
    rotation = (np.arange(n_models) + t - 1) % n_models
    return _assignment_from(cache.partition.perm, rotation, t, n_models)


def full_participation_assign(t: int, n_clients: int) -> Assignment:
    """Every client on the single model: the sequential baseline."""
    if t < 1:
        raise ValueError("rounds are 1-indexed")
    return Assignment(round_index=t, n_models=1, model_of=np.zeros(n_clients, dtype=np.int64))


def make_scheduler(algo: str, n_clients: int, n_models: int, rng: np.random.Generator):
    """Bind a schedule name to a ``t -> Assignment`` callable.

    ``fedavg-seq`` is the single-model baseline and requires M=1; with M=1
    all three schedules produce the same all-clients assignment.
    """
    if algo == "mfa-rand":
        _check_divisible(n_clients, n_models)
        return lambda t: random_matching_assign(t, n_clients, n_models, rng)
    if algo == "mfa-rr":
        _check_divisible(n_clients, n_models)
        cache = FrameCache()
        return lambda t: round_robin_assign(t, n_clients, n_models, rng, cache)
    if algo == "fedavg-seq":
        if n_models != 1:
            raise ValueError("fedavg-seq trains one model at a time; set M=1")
        return lambda t: full_participation_assign(t, n_clients)
    raise ValueError(f"unknown algorithm {algo!r} (expected mfa-rand, mfa-rr, or fedavg-seq)")
