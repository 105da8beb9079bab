"""Error, gap, rounds-to-accuracy, gain, and cross-seed statistics.

All functions are pure post-processing over arrays; expectation over runs
is always estimated by the mean across seeds (default 20), and
rounds-to-accuracy is evaluated on that seed-mean curve, never per seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GAP_FLOOR = 1e-16
GAP_SLACK = 1e-9


def error_delta(w: np.ndarray, w_star: np.ndarray) -> float:
    """Euclidean distance to the minimizer."""
    w = np.asarray(w)
    w_star = np.asarray(w_star)
    if w.shape != w_star.shape:
        raise ValueError(f"dimension mismatch: {w.shape} vs {w_star.shape}")
    return float(np.linalg.norm(w - w_star))


def gap(f_w, f_star: float):
    """log10 of the suboptimality F(w) - F*, floored at 1e-16.

    The floor keeps a seed that lands exactly on the minimizer at -16
    instead of -inf.  Values of F below F* by more than a small slack mean
    the minimizer is wrong and raise instead of flooring.
    """
    diff = np.asarray(f_w, dtype=float) - f_star
    if np.any(diff < -GAP_SLACK):
        worst = float(np.min(diff))
        raise ValueError(f"objective {worst:.3e} below the optimum; minimizer looks wrong")
    out = np.log10(np.maximum(diff, GAP_FLOOR))
    return float(out) if out.ndim == 0 else out


def count_floored(f_w, f_star: float) -> int:
    """How many entries the gap floor touched (diagnostic for outputs)."""
    diff = np.asarray(f_w, dtype=float) - f_star
    return int(np.sum(diff < GAP_FLOOR))


def rounds_to_accuracy(mean_delta: np.ndarray, epsilon: float) -> int | None:
    """First 1-based round with mean error <= epsilon, or None if never."""
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    mean_delta = np.asarray(mean_delta)
    hits = np.flatnonzero(mean_delta <= epsilon)
    if hits.size == 0:
        return None
    return int(hits[0]) + 1


def multi_model_rounds_to_accuracy(mean_delta_by_model: np.ndarray, epsilon: float) -> int | None:
    """Rounds until *all* models are accurate: max over models of the first crossing.

    ``mean_delta_by_model`` is (T, M), seed-mean error per round and model.
    None if any model never crosses.
    """
    worst = 0
    for m in range(mean_delta_by_model.shape[1]):
        t_m = rounds_to_accuracy(mean_delta_by_model[:, m], epsilon)
        if t_m is None:
            return None
        worst = max(worst, t_m)
    return worst


@dataclass(frozen=True)
class GainReport:
    """Speed-up of simultaneous M-model training over the sequential baseline."""

    algo: str
    n_models: int
    local_steps: int
    epsilon: float
    t_single: int | None
    t_multi: int | None
    gain: float | None
    reason: str | None = None  # set when the report is withheld

    @property
    def reached(self) -> bool:
        return self.gain is not None


def compute_gain(
    single_mean_delta: np.ndarray,
    multi_mean_delta_by_model: np.ndarray,
    n_models: int,
    epsilon: float,
    algo: str = "",
    local_steps: int = 0,
    delta_init: float | None = None,
) -> GainReport:
    """g = M * T1(eps) / T_P(M, eps) from seed-mean traces.

    T1 comes from the single-model baseline curve, T_P from the slowest of
    the M simultaneously trained models.  If either side never reaches
    epsilon within its trace, the report is withheld with the reason
    recorded rather than extrapolated.
    """
    if delta_init is not None and epsilon >= delta_init:
        raise ValueError(f"epsilon {epsilon:g} must be below the starting error {delta_init:g}")
    t_single = rounds_to_accuracy(np.asarray(single_mean_delta), epsilon)
    t_multi = multi_model_rounds_to_accuracy(np.asarray(multi_mean_delta_by_model), epsilon)
    reason = None
    gain_value = None
    if t_single is None:
        reason = "single-model baseline did not reach epsilon"
    elif t_multi is None:
        reason = "multi-model run did not reach epsilon"
    else:
        gain_value = n_models * t_single / t_multi
    return GainReport(
        algo=algo,
        n_models=n_models,
        local_steps=local_steps,
        epsilon=float(epsilon),
        t_single=t_single,
        t_multi=t_multi,
        gain=gain_value,
        reason=reason,
    )


def gain_from_rounds(
    t_single: int | None,
    t_multi: int | None,
    n_models: int,
    epsilon: float,
    algo: str = "",
    local_steps: int = 0,
) -> GainReport:
    """Same report as compute_gain when the crossings are already known.

    Used by crossing searches whose traces for the two sides have different
    lengths; the withholding rules are identical.
    """
    reason = None
    gain_value = None
    if t_single is None:
        reason = "single-model baseline did not reach epsilon"
    elif t_multi is None:
        reason = "multi-model run did not reach epsilon"
    else:
        gain_value = n_models * t_single / t_multi
    return GainReport(
        algo=algo,
        n_models=n_models,
        local_steps=local_steps,
        epsilon=float(epsilon),
        t_single=t_single,
        t_multi=t_multi,
        gain=gain_value,
        reason=reason,
    )


@dataclass(frozen=True)
class SeedStats:
    """Pointwise statistics across seeds (axis 0 of the stacked array)."""

    mean: np.ndarray
    var: np.ndarray  # unbiased (ddof=1)
    low: np.ndarray
    high: np.ndarray
    n_seeds: int


def seed_statistics(stacked: np.ndarray) -> SeedStats:
    """Mean, unbiased variance, and min/max envelope over the seed axis."""
    stacked = np.asarray(stacked)
    n_seeds = stacked.shape[0]
    if n_seeds < 2:
        raise ValueError("need at least 2 seeds for a variance estimate")
    return SeedStats(
        mean=stacked.mean(axis=0),
        var=stacked.var(axis=0, ddof=1),
        low=stacked.min(axis=0),
        high=stacked.max(axis=0),
        n_seeds=n_seeds,
    )
