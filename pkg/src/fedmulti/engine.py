"""Federated training loop: local steps, server averaging, schedules.

One round: every client gets the current weights of its assigned model,
runs E local (stochastic) gradient steps, and the server replaces each
model's weights with the subset mean of its clients' summed updates.
Aggregating by subset mean makes the M=1 case coincide exactly with
full-participation FedAvg.

The optional frame-diagnostic path (round robin only) maintains a second,
shadow copy of the model weights aggregated with the 1/N convention under
which the per-frame decomposition

    w^{l+1} = u_{E+1} + alpha_l e^l - alpha_l d^l

is an exact identity: u is the virtual centralized GD sequence restarted
from each frame's weights, e^l collects the divergence of local gradients
from the virtual trajectory, and d^l the subsampling noise (zero under
full gradients).  Both sides are computed independently each frame so the
residual is a genuine cross-check, not a tautology.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .metrics import GAP_FLOOR, gap
from .problem import ProblemConstants, QuadraticClient, QuadraticProblem, compute_constants
from .scheduling import frame_index, make_scheduler
from .streams import substream


@dataclass(frozen=True)
class LRSchedule:
    """Constant eta, or inverse decay beta/(t+gamma) per round or per frame.

    Frame granularity uses alpha_l = beta/(l+gamma) with l = 1+(t-1)//M,
    which holds the rate constant across each frame of M rounds and agrees
    with the per-round inverse schedule at frame starts.
    """

    kind: str  # "constant" | "inverse"
    eta: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    granularity: str = "round"  # "round" | "frame"

    def __post_init__(self) -> None:
        if self.kind == "constant":
            if self.eta <= 0.0:
                raise ValueError("constant schedule needs eta > 0")
        elif self.kind == "inverse":
            if self.beta <= 0.0 or self.gamma < 0.0:
                raise ValueError("inverse schedule needs beta > 0 and gamma >= 0")
            if self.granularity not in ("round", "frame"):
                raise ValueError(f"unknown granularity {self.granularity!r}")
        else:
            raise ValueError(f"unknown lr schedule kind {self.kind!r}")

    def value(self, t: int, n_models: int) -> float:
        if self.kind == "constant":
            return self.eta
        if self.granularity == "round":
            return self.beta / (t + self.gamma)
        return self.beta / (frame_index(t, n_models) + self.gamma)

    def frame_constant(self) -> bool:
        return self.kind == "constant" or self.granularity == "frame"

    def initial_value(self) -> float:
        return self.value(1, 1)


@dataclass(frozen=True)
class SampleSchedule:
    """Datapoint subsampling policy for local steps.

    "full" uses every datapoint (exact local gradients).  "lr-scaled"
    keeps the unsampled fraction proportional to the current learning
    rate: (n_data - n_s)/n_data <= eta * v / (2 E sqrt(beta1 + beta2 G^2)),
    so the sample grows back to full as the rate decays.
    """

    kind: str = "full"  # "full" | "lr-scaled"
    v_scale: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("full", "lr-scaled"):
            raise ValueError(f"unknown sampling kind {self.kind!r}")
        if self.v_scale < 0.0:
            raise ValueError("v must be non-negative")

    def size(self, eta: float, local_steps: int, n_data: int, constants: ProblemConstants) -> int:
        if self.kind == "full":
            return n_data
        return lr_scaled_sample_size(
            eta,
            local_steps,
            n_data,
            constants.beta1,
            constants.beta2,
            constants.require_g_bound(),
            self.v_scale,
        )


def lr_scaled_sample_size(
    eta: float,
    local_steps: int,
    n_data: int,
    beta1: float,
    beta2: float,
    g_bound: float,
    v_scale: float,
) -> int:
    """Smallest sample size whose gap fraction fits the lr-scaled budget.

    Returns the smallest integer n_s with (n_data - n_s)/n_data bounded by
    eta*v/(2E sqrt(beta1+beta2 G^2)), clamped to [1, n_data]; v = 0 means
    full gradients.
    """
    if v_scale < 0.0:
        raise ValueError("v must be non-negative")
    budget = eta * v_scale / (2.0 * local_steps * math.sqrt(beta1 + beta2 * g_bound**2))
    n_s = n_data - math.floor(n_data * budget)
    return max(1, min(n_data, n_s))


@dataclass(frozen=True)
class RunConfig:
    """Everything that defines one training run except problem and seed."""

    algo: str  # "mfa-rand" | "mfa-rr" | "fedavg-seq"
    n_models: int
    local_steps: int
    rounds: int
    lr: LRSchedule
    sampling: SampleSchedule = field(default_factory=SampleSchedule)
    record_weights: bool = False
    diagnostics: bool = False

    def __post_init__(self) -> None:
        if self.n_models < 1:
            raise ValueError("M must be at least 1")
        if self.local_steps < 1:
            raise ValueError("E must be at least 1")
        if self.rounds < 0:
            raise ValueError("rounds must be non-negative")


@dataclass(frozen=True)
class FrameDiagnostic:
    """Measured per-frame decomposition terms for one model (1/N convention)."""

    frame: int
    model: int  # 0-based
    alpha: float
    e_norm: float  # ||e^l||
    d_norm: float  # ||d^l||
    residual: float  # || shadow w^{l+1} - (u_{E+1} + a e^l - a d^l) ||
    u_dist: float  # ||u_{E+1} - w*||
    start_dist: float  # || shadow w^l - w* ||
    sample_gap_sum: float  # (1/N) sum over (round, client, step) of (n_data-n_s)/n_data


@dataclass(frozen=True)
class TrainingTrace:
    """Per-round, per-model records of one run (state entering each round)."""

    algo: str
    n_models: int
    local_steps: int
    seed_index: int
    delta: np.ndarray  # (T, M)
    gap: np.ndarray  # (T, M)
    lr: np.ndarray  # (T,)
    sample_size: np.ndarray  # (T,) int
    final_weights: np.ndarray  # (M, d) state after the last round
    max_grad_norm: float  # largest local stochastic-gradient norm seen
    floored: int  # gap-floor hits
    frames: tuple[FrameDiagnostic, ...] = ()
    weights: np.ndarray | None = None  # (T, M, d) pre-update snapshots, optional

    @property
    def rounds(self) -> int:
        return self.delta.shape[0]


def local_update(
    client: QuadraticClient,
    w_global: np.ndarray,
    local_steps: int,
    eta: float,
    sample_size: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """One client's summed update: E local steps, fresh sample each step.

    Returns u_1 - u_{E+1} (identically eta times the summed stochastic
    gradients).  Reference single-client path; the training loop computes
    the same recursion batched over clients.
    """
    if local_steps < 1:
        raise ValueError("E must be at least 1")
    if not 1 <= sample_size <= client.n_data:
        raise ValueError(f"sample size must lie in 1..{client.n_data}")
    if eta <= 0.0:
        raise ValueError("eta must be positive")
    w = np.array(w_global, dtype=float)
    start = w.copy()
    for p in range(1, local_steps + 1):
        if sample_size == client.n_data:
            grad = client.grad(w)
        else:
            sample = rng.choice(client.n_data, size=sample_size, replace=False)
            grad = client.stochastic_grad(w, sample)
        w = w - eta * grad
        if not np.all(np.isfinite(w)):
            raise ArithmeticError(f"non-finite iterate at client {client.index + 1}, local step {p}")
    return start - w


def server_round(
    states: np.ndarray,
    model_of: np.ndarray,
    eta: float,
    local_steps: int,
    sample_size: int,
    problem: QuadraticProblem,
    rng: np.random.Generator,
    round_index: int = 0,
) -> np.ndarray:
    """One aggregation round over all clients, batched.

    Each model's weights move by the subset mean of its clients' updates.
    Returns the new (M, d) state array; ``states`` is not modified.
    """
    n_models = states.shape[0]
    n_clients = problem.n_clients
    w_local = states[model_of]
    for p in range(1, local_steps + 1):
        grads = _stochastic_grads(problem, w_local, sample_size, rng)
        w_local = w_local - eta * grads
        if not np.all(np.isfinite(w_local)):
            bad = int(np.flatnonzero(~np.all(np.isfinite(w_local), axis=1))[0])
            raise ArithmeticError(
                f"non-finite iterate at round {round_index}, client {bad + 1}, local step {p}"
            )
    updates = states[model_of] - w_local
    acc = np.zeros_like(states)
    np.add.at(acc, model_of, updates)
    return states - acc * (n_models / n_clients)


def _stochastic_grads(
    problem: QuadraticProblem,
    w_local: np.ndarray,
    sample_size: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Per-client gradients at per-client iterates, subsampled if asked.

    Subsets are drawn without replacement per client via random keys, one
    rng call per local step regardless of the matching, so the draw
    sequence is identical across schedules (reduction invariance).
    """
    grads = problem.client_grads(w_local)
    if sample_size < problem.n_data:
        keys = rng.random((problem.n_clients, problem.n_data))
        idx = np.argpartition(keys, sample_size - 1, axis=1)[:, :sample_size]
        z_sel = problem.z_stack[np.arange(problem.n_clients)[:, None], idx]
        grads = grads - z_sel.mean(axis=1)
    return grads


@dataclass(frozen=True)
class GCalibration:
    """Estimated uniform bound G on stochastic-gradient norms.

    From a 200-round run of the same configuration at its initial (largest)
    learning rate with full gradients: the largest observed per-client
    gradient norm, plus the largest datapoint perturbation (so subsampled
    gradients are covered too), with a 10% headroom margin.
    """

    g_bound: float
    max_grad_norm: float
    z_envelope: float
    lr_used: float
    rounds: int
    margin: float


def calibrate_g_bound(
    problem: QuadraticProblem,
    config: RunConfig,
    master_seed: int,
    seed_index: int = 0,
    rounds: int = 200,
    margin: float = 1.1,
    constants: ProblemConstants | None = None,
) -> GCalibration:
    eta0 = config.lr.initial_value()
    cal_config = replace(
        config,
        lr=LRSchedule(kind="constant", eta=eta0),
        sampling=SampleSchedule(kind="full"),
        rounds=rounds,
        diagnostics=False,
        record_weights=False,
    )
    trace = run_training(problem, cal_config, master_seed, seed_index, constants=constants)
    z_env = float(np.sqrt(np.max(np.sum(problem.z_stack**2, axis=2)))) if problem.n_data else 0.0
    g_bound = margin * (trace.max_grad_norm + z_env)
    return GCalibration(
        g_bound=g_bound,
        max_grad_norm=trace.max_grad_norm,
        z_envelope=z_env,
        lr_used=eta0,
        rounds=rounds,
        margin=margin,
    )


class TrainingSession:
    """Stateful run that can be extended round by round.

    ``run_training`` drives it for a fixed horizon; sweeps that search for
    an accuracy crossing extend sessions in chunks instead of guessing the
    horizon up front.  Extending a session N rounds and running N rounds in
    one go produce identical traces (the streams simply continue).
    """

    def __init__(
        self,
        problem: QuadraticProblem,
        config: RunConfig,
        master_seed: int,
        seed_index: int = 0,
        constants: ProblemConstants | None = None,
    ):
        if problem.n_clients % config.n_models != 0:
            raise ValueError("N must be an integral multiple of M")
        self.problem = problem
        self.config = config
        self.master_seed = int(master_seed)
        self.seed_index = int(seed_index)
        self.constants = constants if constants is not None else compute_constants(problem)
        if config.sampling.kind != "full":
            self.constants.require_g_bound()
        if config.diagnostics:
            if config.algo != "mfa-rr":
                raise ValueError("frame diagnostics require the round-robin schedule")
            if not config.lr.frame_constant():
                raise ValueError("frame diagnostics require a frame-constant learning rate")
        eta0 = config.lr.initial_value()
        if eta0 > 1.0 / self.constants.smoothness + 1e-12:
            warnings.warn(
                f"initial learning rate {eta0:.4g} exceeds 1/L = {1.0 / self.constants.smoothness:.4g}; "
                "per-round contraction is not guaranteed",
                stacklevel=2,
            )
        self._assign = make_scheduler(
            config.algo, problem.n_clients, config.n_models,
            substream(self.master_seed, "scheduler", self.seed_index),
        )
        self._samp_rng = substream(self.master_seed, "sampling", self.seed_index)
        self._diag_rng = substream(self.master_seed, "diag-sampling", self.seed_index)
        self.weights = np.zeros((config.n_models, problem.dim))
        self.t_next = 1
        self._hess = problem.hessian()
        self._b_mean = problem.b_stack.mean(axis=0)
        self._delta: list[np.ndarray] = []
        self._gap: list[np.ndarray] = []
        self._lr: list[float] = []
        self._ns: list[int] = []
        self._snaps: list[np.ndarray] = []
        self._frames: list[FrameDiagnostic] = []
        self.max_grad_norm = 0.0
        self.floored = 0
        if config.diagnostics:
            self._shadow = np.zeros_like(self.weights)
            self._frame_state: dict | None = None

    # -- metrics of the state entering round t -------------------------------
    def _record_state(self) -> None:
        w_star = self.constants.w_star
        self._delta.append(np.linalg.norm(self.weights - w_star, axis=1))
        f_vals = (
            0.5 * np.einsum("mi,ij,mj->m", self.weights, self._hess, self.weights)
            - self.weights @ self._b_mean
        )
        diff = f_vals - self.constants.f_star
        self.floored += int(np.sum(diff < GAP_FLOOR))
        self._gap.append(gap(f_vals, self.constants.f_star))
        if self.config.record_weights:
            self._snaps.append(self.weights.copy())

    def run(self, n_rounds: int | None = None) -> "TrainingSession":
        cfg = self.config
        if n_rounds is None:
            n_rounds = cfg.rounds - (self.t_next - 1)
        for _ in range(max(0, n_rounds)):
            t = self.t_next
            eta = cfg.lr.value(t, cfg.n_models)
            n_s = cfg.sampling.size(eta, cfg.local_steps, self.problem.n_data, self.constants)
            assignment = self._assign(t)
            model_of = assignment.model_of
            self._record_state()
            self._lr.append(eta)
            self._ns.append(n_s)
            self._step_operational(t, model_of, eta, n_s)
            if cfg.diagnostics:
                self._step_shadow(t, model_of, eta, n_s)
            self.t_next = t + 1
        return self

    def _step_operational(self, t: int, model_of: np.ndarray, eta: float, n_s: int) -> None:
        cfg = self.config
        w_local = self.weights[model_of]
        for p in range(1, cfg.local_steps + 1):
            grads = _stochastic_grads(self.problem, w_local, n_s, self._samp_rng)
            norms_sq = np.einsum("ki,ki->k", grads, grads)
            top = float(np.max(norms_sq))
            if top > self.max_grad_norm**2:
                self.max_grad_norm = math.sqrt(top)
            w_local = w_local - eta * grads
            if not np.all(np.isfinite(w_local)):
                bad = int(np.flatnonzero(~np.all(np.isfinite(w_local), axis=1))[0])
                raise ArithmeticError(
                    f"non-finite iterate at round {t}, client {bad + 1}, local step {p}"
                )
        updates = self.weights[model_of] - w_local
        acc = np.zeros_like(self.weights)
        np.add.at(acc, model_of, updates)
        self.weights = self.weights - acc * (cfg.n_models / self.problem.n_clients)

    # -- shadow path: 1/N aggregation plus the frame decomposition -----------
    def _step_shadow(self, t: int, model_of: np.ndarray, alpha: float, n_s: int) -> None:
        cfg = self.config
        n_models, n_clients = cfg.n_models, self.problem.n_clients
        if (t - 1) % n_models == 0:
            u_seq = np.empty((n_models, cfg.local_steps + 1, self.problem.dim))
            u = self._shadow.copy()
            u_seq[:, 0] = u
            for p in range(cfg.local_steps):
                u = u - alpha * (u @ self._hess - self._b_mean)
                u_seq[:, p + 1] = u
            self._frame_state = {
                "frame": frame_index(t, n_models),
                "alpha": alpha,
                "start": self._shadow.copy(),
                "u_seq": u_seq,
                "e_acc": np.zeros_like(self._shadow),
                "d_acc": np.zeros_like(self._shadow),
                "gap_sum": np.zeros(n_models),
            }
        fs = self._frame_state
        assert fs is not None and abs(fs["alpha"] - alpha) < 1e-15
        w_local = self._shadow[model_of]
        rows = np.arange(n_clients)
        for p in range(cfg.local_steps):
            exact = self.problem.client_grads(w_local)
            exact_at_u = self.problem.client_grads(fs["u_seq"][model_of, p])
            np.add.at(fs["e_acc"], model_of, exact_at_u - exact)
            if n_s < self.problem.n_data:
                keys = self._diag_rng.random((n_clients, self.problem.n_data))
                idx = np.argpartition(keys, n_s - 1, axis=1)[:, :n_s]
                z_sel = self.problem.z_stack[rows[:, None], idx]
                used = exact - z_sel.mean(axis=1)
                np.add.at(fs["d_acc"], model_of, used - exact)
                np.add.at(fs["gap_sum"], model_of,
                          np.full(n_clients, (self.problem.n_data - n_s) / self.problem.n_data))
            else:
                used = exact
            w_local = w_local - alpha * used
        updates = self._shadow[model_of] - w_local
        acc = np.zeros_like(self._shadow)
        np.add.at(acc, model_of, updates)
        self._shadow = self._shadow - acc / n_clients
        if t % n_models == 0:
            self._finish_frame()

    def _finish_frame(self) -> None:
        fs = self._frame_state
        assert fs is not None
        n_clients = self.problem.n_clients
        w_star = self.constants.w_star
        e_l = fs["e_acc"] / n_clients
        d_l = fs["d_acc"] / n_clients
        u_end = fs["u_seq"][:, -1]
        predicted = u_end + fs["alpha"] * e_l - fs["alpha"] * d_l
        for m in range(self.config.n_models):
            self._frames.append(
                FrameDiagnostic(
                    frame=fs["frame"],
                    model=m,
                    alpha=fs["alpha"],
                    e_norm=float(np.linalg.norm(e_l[m])),
                    d_norm=float(np.linalg.norm(d_l[m])),
                    residual=float(np.linalg.norm(self._shadow[m] - predicted[m])),
                    u_dist=float(np.linalg.norm(u_end[m] - w_star)),
                    start_dist=float(np.linalg.norm(fs["start"][m] - w_star)),
                    sample_gap_sum=float(fs["gap_sum"][m]) / n_clients,
                )
            )
        self._frame_state = None

    def delta_matrix(self) -> np.ndarray:
        """(T, M) error-so-far array without building a full trace."""
        return np.array(self._delta).reshape(len(self._delta), self.config.n_models)

    def trace(self) -> TrainingTrace:
        n_rounds = len(self._delta)
        return TrainingTrace(
            algo=self.config.algo,
            n_models=self.config.n_models,
            local_steps=self.config.local_steps,
            seed_index=self.seed_index,
            delta=np.array(self._delta).reshape(n_rounds, self.config.n_models),
            gap=np.array(self._gap).reshape(n_rounds, self.config.n_models),
            lr=np.array(self._lr),
            sample_size=np.array(self._ns, dtype=np.int64),
            final_weights=self.weights.copy(),
            max_grad_norm=self.max_grad_norm,
            floored=self.floored,
            frames=tuple(self._frames),
            weights=np.array(self._snaps) if self.config.record_weights and n_rounds else None,
        )


def run_training(
    problem: QuadraticProblem,
    config: RunConfig,
    master_seed: int,
    seed_index: int = 0,
    constants: ProblemConstants | None = None,
) -> TrainingTrace:
    """Run ``config.rounds`` rounds and return the trace."""
    session = TrainingSession(problem, config, master_seed, seed_index, constants=constants)
    return session.run(config.rounds).trace()
