"""Closed-form error-bound curves, their hypotheses, and inequality verifiers.

Two bound families cover the two matching schedules:

* sqrt-decay (random matching, inverse LR beta/(t+gamma)):
      bound(t) = sqrt(scale / (t + gamma)),
      scale = max{beta^2 (B + C)/(beta mu - 1), delta1^2 (1 + gamma)},
      B = 6 L Gamma + sigma^2/N + 8 (E-1)^2 G^2,  sigma^2 = 4(beta1 + beta2 G^2),
      C = (M-1)/(N-1) E^2 G^2;
  hypotheses beta > 1/mu and gamma > 4 L beta - 1.

* inverse-decay (round robin, frame LR beta/(l+gamma)):
      bound(t) = phi / (t/M + gamma),
      phi = beta E G (M-1)/M + max{beta^2 (Y + Z + V)/(beta mu - 1), (1+gamma) delta1},
      Y = L G E^2 (M-1)/(2M),  Z = L G E (E-1);
  hypotheses beta > 1/mu and gamma > beta L - 1.  V = 0 is the full-GD case.

Configurations that violate beta > 1/mu cannot evaluate the first max
branch at all; by default that raises, and with on_violation="flag" the
curve falls back to the second branch with the failed hypothesis recorded,
so runs outside the guarantees still get a clearly-flagged curve.

The verifiers re-measure each inequality the bounds rest on (subset
variance, centralized contraction, per-frame drift and sampling terms)
by direct simulation or enumeration, never by re-deriving the algebra.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .engine import FrameDiagnostic
from .problem import ProblemConstants, QuadraticClient, QuadraticProblem

REL_SLACK = 1e-9  # float tolerance used when comparing measured vs bound


@dataclass(frozen=True)
class HypothesisFlag:
    """One convergence-bound hypothesis with its numeric margin (negative = violated)."""

    name: str
    ok: bool
    margin: float
    detail: str


@dataclass(frozen=True)
class BoundCurve:
    kind: str  # "sqrt-decay" | "inverse-decay"
    scale: float  # the nu / phi numerator
    gamma: float
    n_models: int
    values: np.ndarray  # (rounds,), bound at t = 1..rounds
    hypotheses: tuple[HypothesisFlag, ...]
    terms: dict  # the intermediate quantities, for reports

    @property
    def ok(self) -> bool:
        return all(h.ok for h in self.hypotheses)

    def rounds_to(self, epsilon: float) -> float:
        """Smallest (real) t with bound(t) <= epsilon, clamped to >= 1."""
        if epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.kind == "sqrt-decay":
            return max(1.0, self.scale / epsilon**2 - self.gamma)
        return max(1.0, self.n_models * (self.scale / epsilon - self.gamma))


def _flag(name: str, lhs: float, rhs: float, detail: str) -> HypothesisFlag:
    return HypothesisFlag(name=name, ok=lhs > rhs, margin=lhs - rhs, detail=detail)


def sqrt_decay_bound(
    constants: ProblemConstants,
    beta: float,
    gamma: float,
    n_models: int,
    local_steps: int,
    n_clients: int,
    rounds: int,
    delta_init: float | None = None,
    on_violation: str = "raise",
) -> BoundCurve:
    """Error bound curve for the random-matching schedule."""
    mu, big_l = constants.mu, constants.smoothness
    g = constants.require_g_bound()
    d1 = constants.delta_init if delta_init is None else float(delta_init)
    sigma_sq = 4.0 * (constants.beta1 + constants.beta2 * g**2)
    drift = 6.0 * big_l * constants.hetero_gap + sigma_sq / n_clients + 8.0 * (local_steps - 1) ** 2 * g**2
    mixing = (n_models - 1) / (n_clients - 1) * local_steps**2 * g**2
    hyps = (
        _flag("lr_scale", beta * mu, 1.0, "beta > 1/mu"),
        _flag("lr_offset", gamma, 4.0 * big_l * beta - 1.0, "gamma > 4*L*beta - 1"),
    )
    anchor = d1**2 * (1.0 + gamma)
    if beta * mu <= 1.0:
        if on_violation == "raise":
            raise ValueError(f"beta*mu = {beta * mu:.4g} <= 1: the scale formula needs beta > 1/mu")
        warnings.warn("beta*mu <= 1: bound falls back to the start-anchor branch, flagged", stacklevel=2)
        scale, branch = anchor, "anchor"
    else:
        noise = beta**2 * (drift + mixing) / (beta * mu - 1.0)
        scale, branch = max(noise, anchor), ("noise" if noise >= anchor else "anchor")
        if not hyps[1].ok and on_violation == "raise":
            warnings.warn(f"gamma = {gamma:.4g} violates gamma > 4*L*beta - 1; curve flagged", stacklevel=2)
    t = np.arange(1, rounds + 1, dtype=float)
    return BoundCurve(
        kind="sqrt-decay",
        scale=scale,
        gamma=gamma,
        n_models=n_models,
        values=np.sqrt(scale / (t + gamma)),
        hypotheses=hyps,
        terms={
            "sigma_sq": sigma_sq,
            "drift_term": drift,
            "mixing_term": mixing,
            "anchor": anchor,
            "binding_branch": branch,
            "delta_init": d1,
            "beta": beta,
        },
    )


def inverse_decay_bound(
    constants: ProblemConstants,
    beta: float,
    gamma: float,
    n_models: int,
    local_steps: int,
    rounds: int,
    v_scale: float = 0.0,
    delta_init: float | None = None,
    on_violation: str = "raise",
) -> BoundCurve:
    """Error bound curve for the round-robin schedule (v_scale=0: full GD)."""
    mu, big_l = constants.mu, constants.smoothness
    g = constants.require_g_bound()
    d1 = constants.delta_init if delta_init is None else float(delta_init)
    lead = beta * local_steps * g * (n_models - 1) / n_models
    y_term = big_l * g * local_steps**2 * (n_models - 1) / (2.0 * n_models)
    z_term = big_l * g * local_steps * (local_steps - 1)
    hyps = (
        _flag("lr_scale", beta * mu, 1.0, "beta > 1/mu"),
        _flag("lr_offset", gamma, beta * big_l - 1.0, "gamma > beta*L - 1"),
    )
    anchor = (1.0 + gamma) * d1
    if beta * mu <= 1.0:
        if on_violation == "raise":
            raise ValueError(f"beta*mu = {beta * mu:.4g} <= 1: the scale formula needs beta > 1/mu")
        warnings.warn("beta*mu <= 1: bound falls back to the start-anchor branch, flagged", stacklevel=2)
        scale_term, branch = anchor, "anchor"
    else:
        noise = beta**2 * (y_term + z_term + v_scale) / (beta * mu - 1.0)
        scale_term, branch = max(noise, anchor), ("noise" if noise >= anchor else "anchor")
    phi = lead + scale_term
    t = np.arange(1, rounds + 1, dtype=float)
    return BoundCurve(
        kind="inverse-decay",
        scale=phi,
        gamma=gamma,
        n_models=n_models,
        values=phi / (t / n_models + gamma),
        hypotheses=hyps,
        terms={
            "lead_term": lead,
            "y_term": y_term,
            "z_term": z_term,
            "v_scale": v_scale,
            "anchor": anchor,
            "binding_branch": branch,
            "delta_init": d1,
            "beta": beta,
        },
    )


@dataclass(frozen=True)
class DominationReport:
    """Where (if anywhere) the seed-mean error pokes above a bound curve."""

    rounds: int
    violations: tuple[int, ...]  # 1-based rounds, truncated to the first 100
    n_violations: int
    max_ratio: float  # max over rounds of mean/bound

    @property
    def ok(self) -> bool:
        return self.n_violations == 0


def empirical_vs_bound(
    mean_delta: np.ndarray,
    curve: BoundCurve | np.ndarray,
    rel_slack: float = REL_SLACK,
) -> DominationReport:
    values = curve.values if isinstance(curve, BoundCurve) else np.asarray(curve)
    mean_delta = np.asarray(mean_delta)
    if mean_delta.shape != values.shape:
        raise ValueError(f"trace length {mean_delta.shape} != curve length {values.shape}")
    bad = np.flatnonzero(mean_delta > values * (1.0 + rel_slack))
    return DominationReport(
        rounds=int(mean_delta.shape[0]),
        violations=tuple(int(i) + 1 for i in bad[:100]),
        n_violations=int(bad.size),
        max_ratio=float(np.max(mean_delta / values)),
    )


@dataclass(frozen=True)
class InequalityCheck:
    """Measured lhs vs bound rhs with slack; witness describes the worst case."""

    name: str
    measured: float
    bound: float
    witness: str = ""

    @property
    def ok(self) -> bool:
        return self.measured <= self.bound * (1.0 + REL_SLACK) + 1e-15

    @property
    def slack(self) -> float:
        return self.bound - self.measured


def subset_variance_check(
    client: QuadraticClient,
    w: np.ndarray,
    sample_size: int,
    beta1: float,
    beta2: float,
    mode: str = "exhaustive",
    rng: np.random.Generator | None = None,
    n_draws: int = 20000,
    g_loc: float | None = None,
) -> InequalityCheck:
    """Variance of the subsampled gradient vs its pointwise bound.

    Enumerates (or samples) size-s subsets, measures the mean squared
    deviation of the stochastic gradient from the exact one, and compares
    with 4((n-s)/n)^2 (beta1 + beta2*g_loc^2), taking g_loc = |grad F_k(w)|
    unless a larger envelope is supplied.
    """
    n = client.n_data
    if not 1 <= sample_size <= n:
        raise ValueError(f"sample size must lie in 1..{n}")
    exact = client.grad(w)
    if g_loc is None:
        g_loc = float(np.linalg.norm(exact))
    bound = 4.0 * ((n - sample_size) / n) ** 2 * (beta1 + beta2 * g_loc**2)
    worst, worst_subset = -1.0, ()
    if mode == "exhaustive":
        if n > 8:
            raise ValueError("exhaustive mode enumerates all subsets; needs n_data <= 8")
        total = 0.0
        count = 0
        for subset in itertools.combinations(range(n), sample_size):
            dev = float(np.sum((client.stochastic_grad(w, np.array(subset)) - exact) ** 2))
            total += dev
            count += 1
            if dev > worst:
                worst, worst_subset = dev, subset
        measured = total / count
    elif mode == "monte-carlo":
        if rng is None:
            raise ValueError("monte-carlo mode needs an rng")
        total = 0.0
        for _ in range(n_draws):
            subset = rng.choice(n, size=sample_size, replace=False)
            dev = float(np.sum((client.stochastic_grad(w, subset) - exact) ** 2))
            total += dev
            if dev > worst:
                worst, worst_subset = dev, tuple(int(i) for i in sorted(subset))
        measured = total / n_draws
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return InequalityCheck(
        name="subset-variance",
        measured=measured,
        bound=bound,
        witness=f"client {client.index + 1}, worst subset {worst_subset}",
    )


def contraction_check(
    problem: QuadraticProblem,
    constants: ProblemConstants,
    w1: np.ndarray,
    alpha: float,
    local_steps: int,
) -> InequalityCheck:
    """E centralized GD steps vs the (1 - alpha*mu)^E contraction factor."""
    if local_steps < 1:
        raise ValueError("E must be at least 1")
    if alpha > 1.0 / constants.smoothness + 1e-12:
        raise ValueError(f"alpha = {alpha:.4g} exceeds 1/L = {1.0 / constants.smoothness:.4g}")
    hess = problem.hessian()
    b_mean = problem.b_stack.mean(axis=0)
    u = np.array(w1, dtype=float)
    for _ in range(local_steps):
        u = u - alpha * (hess @ u - b_mean)
    measured = float(np.linalg.norm(u - constants.w_star))
    start = float(np.linalg.norm(np.asarray(w1) - constants.w_star))
    bound = (1.0 - alpha * constants.mu) ** local_steps * start
    return InequalityCheck(name="gd-contraction", measured=measured, bound=bound,
                           witness=f"start distance {start:.6g}")


@dataclass(frozen=True)
class FrameCheck:
    """Per-frame drift/noise inequalities plus the decomposition residual."""

    frame: int
    model: int
    e_check: InequalityCheck
    d_check: InequalityCheck
    residual: float
    contraction: InequalityCheck | None  # None when alpha > 1/L

    @property
    def ok(self) -> bool:
        return (
            self.e_check.ok
            and self.d_check.ok
            and (self.contraction is None or self.contraction.ok)
        )


def frame_term_checks(
    frames: tuple[FrameDiagnostic, ...],
    constants: ProblemConstants,
    n_models: int,
    local_steps: int,
) -> list[FrameCheck]:
    """Check every recorded frame against the drift and sampling-noise bounds.

    Drift: |e^l| <= alpha_l L G (E^2 (M-1)/(2M) + E(E-1)).
    Sampling: |d^l| <= 2 sqrt(beta1+beta2 G^2) * (1/N) sum of gap fractions
    (for a common per-frame sample size this is the familiar
    2 E (n-n_s)/n sqrt(beta1+beta2 G^2)).
    The centralized contraction is also checked whenever alpha <= 1/L.
    """
    g = constants.require_g_bound()
    big_l = constants.smoothness
    e_coeff = big_l * g * (local_steps**2 * (n_models - 1) / (2.0 * n_models) + local_steps * (local_steps - 1))
    noise_root = math.sqrt(constants.beta1 + constants.beta2 * g**2)
    out = []
    for fr in frames:
        e_check = InequalityCheck(
            name="frame-drift",
            measured=fr.e_norm,
            bound=fr.alpha * e_coeff,
            witness=f"frame {fr.frame}, model {fr.model + 1}",
        )
        d_check = InequalityCheck(
            name="frame-sampling-noise",
            measured=fr.d_norm,
            bound=2.0 * noise_root * fr.sample_gap_sum,
            witness=f"frame {fr.frame}, model {fr.model + 1}",
        )
        contraction = None
        if fr.alpha <= 1.0 / big_l + 1e-12:
            contraction = InequalityCheck(
                name="frame-contraction",
                measured=fr.u_dist,
                bound=(1.0 - fr.alpha * constants.mu) ** local_steps * fr.start_dist,
                witness=f"frame {fr.frame}, model {fr.model + 1}",
            )
        out.append(FrameCheck(frame=fr.frame, model=fr.model, e_check=e_check,
                              d_check=d_check, residual=fr.residual, contraction=contraction))
    return out


def single_step_pool_condition(constants: ProblemConstants, n_clients: int) -> HypothesisFlag:
    """The E=1 pool-size condition N > 1 + 6 L Gamma / G^2 (report-only flag)."""
    g = constants.require_g_bound()
    threshold = 1.0 + 6.0 * constants.smoothness * constants.hetero_gap / g**2
    return _flag("pool_size_E1", float(n_clients), threshold, "N > 1 + 6*L*Gamma/G^2")


@dataclass(frozen=True)
class BoundGain:
    """Gain computed from bound curves instead of simulated traces."""

    kind: str
    n_models: int
    epsilon: float
    t_single: float
    t_multi: float
    gain: float


def bound_based_gain(
    constants: ProblemConstants,
    beta: float,
    gamma: float,
    n_models: int,
    local_steps: int,
    n_clients: int,
    epsilon: float,
    kind: str = "sqrt-decay",
    v_scale: float = 0.0,
    on_violation: str = "raise",
) -> BoundGain:
    """g = M * T1 / T_M with both horizons inverted from the bound curves."""

    def curve(m: int) -> BoundCurve:
        if kind == "sqrt-decay":
            return sqrt_decay_bound(constants, beta, gamma, m, local_steps, n_clients,
                                    rounds=1, on_violation=on_violation)
        if kind == "inverse-decay":
            return inverse_decay_bound(constants, beta, gamma, m, local_steps,
                                       rounds=1, v_scale=v_scale, on_violation=on_violation)
        raise ValueError(f"unknown bound kind {kind!r}")

    t_single = curve(1).rounds_to(epsilon)
    t_multi = curve(n_models).rounds_to(epsilon)
    return BoundGain(
        kind=kind,
        n_models=n_models,
        epsilon=float(epsilon),
        t_single=t_single,
        t_multi=t_multi,
        gain=n_models * t_single / t_multi,
    )


def bound_report_dict(
    curve: BoundCurve,
    constants: ProblemConstants,
    mean_delta: np.ndarray | None = None,
    extras: dict | None = None,
) -> dict:
    """Plain-type report of a bound evaluation, ready for JSON serialization."""
    report: dict = {
        "kind": curve.kind,
        "scale": curve.scale,
        "gamma": curve.gamma,
        "n_models": curve.n_models,
        "terms": dict(curve.terms),
        "hypotheses": [
            {"name": h.name, "ok": h.ok, "margin": h.margin, "detail": h.detail}
            for h in curve.hypotheses
        ],
        "constants": {
            "mu": constants.mu,
            "smoothness": constants.smoothness,
            "hetero_gap": constants.hetero_gap,
            "beta1": constants.beta1,
            "beta2": constants.beta2,
            "g_bound": constants.g_bound,
            "f_star": constants.f_star,
            "delta_init": constants.delta_init,
        },
        "curve": [float(v) for v in curve.values],
    }
    if mean_delta is not None:
        dom = empirical_vs_bound(mean_delta, curve)
        report["empirical"] = [float(v) for v in np.asarray(mean_delta)]
        report["violations"] = list(dom.violations)
        report["n_violations"] = dom.n_violations
        report["max_ratio"] = dom.max_ratio
    if extras:
        report.update(extras)
    return report
