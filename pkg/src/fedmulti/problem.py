"""Synthetic strongly convex quadratic benchmark split across N clients.

The global objective is F(w) = (1/N) sum_k F_k(w) with

    F_k(w) = 1/2 (w' A_k w - 2 b_k' w) + (mu/2) ||w||^2.

Each client owns one (p+1) x (p+1) second-difference block of a chain of
length d = N*p + 1; consecutive blocks overlap in exactly one coordinate
and the first/last clients get one extra unit on the outer corner entry.
Summing the A_k therefore reproduces the full (-1, 2, -1) tridiagonal
chain exactly, and only client 1 carries a forcing term (b_1 = e_1), so
the clients are genuinely heterogeneous: no single F_k shares its
minimizer with F.

Datapoints are modelled as zero-sum perturbations of the exact client
gradient: grad f_{k,y}(w) = grad F_k(w) - z_{k,y}.  A stochastic gradient
averages a subset of datapoints, and averaging all of them recovers
grad F_k.  The z_{k,y} are drawn once per problem from a seeded stream as
antithetic pairs (r, -r), which makes the zero-sum property exact in
floating point, not just up to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .streams import substream


@dataclass(frozen=True)
class QuadraticClient:
    """One client's quadratic objective plus its datapoint perturbations."""

    index: int  # 0-based
    a_mat: np.ndarray  # (d, d) curvature, positive semi-definite
    b_vec: np.ndarray  # (d,) linear term
    mu: float  # shared ridge strength
    z: np.ndarray  # (n_data, d) zero-sum perturbations

    @property
    def dim(self) -> int:
        return self.b_vec.shape[0]

    @property
    def n_data(self) -> int:
        return self.z.shape[0]

    def loss(self, w: np.ndarray) -> float:
        return 0.5 * (w @ self.a_mat @ w - 2.0 * self.b_vec @ w) + 0.5 * self.mu * (w @ w)

    def grad(self, w: np.ndarray) -> np.ndarray:
        return self.a_mat @ w + self.mu * w - self.b_vec

    def datapoint_loss(self, w: np.ndarray, y: int) -> float:
        return self.loss(w) - self.z[y] @ w

    def datapoint_grad(self, w: np.ndarray, y: int) -> np.ndarray:
        return self.grad(w) - self.z[y]

    def stochastic_grad(self, w: np.ndarray, sample: np.ndarray) -> np.ndarray:
        """Gradient averaged over the datapoints in ``sample`` (indices).

        A full sample takes the exact-gradient branch, which is what the
        zero-sum construction guarantees mathematically.
        """
        sample = np.asarray(sample)
        if sample.ndim != 1 or sample.shape[0] == 0:
            raise ValueError("sample must be a non-empty 1-d index array")
        if np.unique(sample).shape[0] != sample.shape[0]:
            raise ValueError("sample indices must be distinct")
        if sample.shape[0] == self.n_data:
            return self.grad(w)
        return self.grad(w) - self.z[sample].mean(axis=0)

    def local_minimum(self) -> float:
        """min_w F_k(w), via the dense ridge solve."""
        w_k = np.linalg.solve(self.a_mat + self.mu * np.eye(self.dim), self.b_vec)
        return self.loss(w_k)


@dataclass(frozen=True)
class QuadraticProblem:
    """The assembled N-client problem with stacked arrays for batched ops."""

    clients: tuple[QuadraticClient, ...]
    n_clients: int
    block_size: int
    mu: float
    n_data: int
    sigma_z: float
    seed: int
    a_stack: np.ndarray  # (N, d, d)
    b_stack: np.ndarray  # (N, d)
    z_stack: np.ndarray  # (N, n_data, d)

    @property
    def dim(self) -> int:
        return self.b_stack.shape[1]

    def hessian(self) -> np.ndarray:
        """Hessian of the global objective F: (1/N) sum A_k + mu I."""
        return self.a_stack.mean(axis=0) + self.mu * np.eye(self.dim)

    def global_loss(self, w: np.ndarray) -> float:
        return float(np.mean([c.loss(w) for c in self.clients]))

    def global_grad(self, w: np.ndarray) -> np.ndarray:
        return self.hessian() @ w - self.b_stack.mean(axis=0)

    def client_grads(self, w_all: np.ndarray) -> np.ndarray:
        """Exact per-client gradients, batched.

        ``w_all`` is (N, d), one iterate per client; returns (N, d) with row
        k equal to grad F_k(w_all[k]).
        """
        return (
            np.einsum("kij,kj->ki", self.a_stack, w_all)
            + self.mu * w_all
            - self.b_stack
        )

    def client_losses(self, w: np.ndarray) -> np.ndarray:
        """F_k(w) for all k at a single point w, returned as (N,)."""
        quad = np.einsum("j,kji,i->k", w, self.a_stack, w)
        return 0.5 * (quad - 2.0 * self.b_stack @ w) + 0.5 * self.mu * (w @ w)


def _second_difference_block(size: int) -> np.ndarray:
    """The free-chain stiffness block: tridiag(-1, [1, 2, ..., 2, 1], -1)."""
    block = 2.0 * np.eye(size)
    block[0, 0] = 1.0
    block[-1, -1] = 1.0
    block -= np.diag(np.ones(size - 1), 1)
    block -= np.diag(np.ones(size - 1), -1)
    return block


def _zero_sum_perturbations(n_data: int, dim: int, sigma_z: float, rng: np.random.Generator) -> np.ndarray:
    """Antithetic pairs (r, -r); an odd n_data gets one zero vector."""
    z = np.zeros((n_data, dim))
    n_pairs = n_data // 2
    raw = rng.normal(0.0, sigma_z, size=(n_pairs, dim))
    z[0 : 2 * n_pairs : 2] = raw
    z[1 : 2 * n_pairs : 2] = -raw
    return z


def build_quadratic_problem(
    n_clients: int,
    block_size: int,
    mu: float,
    n_data: int = 16,
    sigma_z: float = 0.01,
    seed: int = 0,
) -> QuadraticProblem:
    """Assemble the chain problem for N clients with blocks of size p+1.

    The client matrices tile a chain of dimension d = N*p + 1: client k
    holds the block at row/column offset (k-1)*p, so neighbours share one
    coordinate, and the two chain ends are stiffened by +1 on the corner.
    """
    if n_clients < 2:
        raise ValueError("N must exceed 1")
    if block_size < 1:
        raise ValueError("block size p must be at least 1")
    if mu <= 0.0:
        raise ValueError("mu must be positive")
    if n_data < 1:
        raise ValueError("n_data must be at least 1")
    dim = n_clients * block_size + 1
    block = _second_difference_block(block_size + 1)
    clients = []
    for k in range(n_clients):
        a_mat = np.zeros((dim, dim))
        off = k * block_size
        a_mat[off : off + block_size + 1, off : off + block_size + 1] = block
        if k == 0:
            a_mat[0, 0] += 1.0
        if k == n_clients - 1:
            a_mat[-1, -1] += 1.0
        b_vec = np.zeros(dim)
        if k == 0:
            b_vec[0] = 1.0
        z = _zero_sum_perturbations(n_data, dim, sigma_z, substream(seed, "datapoints", k))
        clients.append(QuadraticClient(index=k, a_mat=a_mat, b_vec=b_vec, mu=mu, z=z))
    return QuadraticProblem(
        clients=tuple(clients),
        n_clients=n_clients,
        block_size=block_size,
        mu=mu,
        n_data=n_data,
        sigma_z=sigma_z,
        seed=seed,
        a_stack=np.stack([c.a_mat for c in clients]),
        b_stack=np.stack([c.b_vec for c in clients]),
        z_stack=np.stack([c.z for c in clients]),
    )


def lambda_max(mat: np.ndarray) -> float:
    """Largest eigenvalue of a symmetric matrix (dense eigensolve)."""
    return float(np.linalg.eigvalsh(mat)[-1])


def solve_minimizer(problem: QuadraticProblem, residual_tol: float = 1e-10) -> tuple[np.ndarray, float]:
    """Global minimizer and optimal value by a dense solve of the Hessian system."""
    hess = problem.hessian()
    rhs = problem.b_stack.mean(axis=0)
    w_star = np.linalg.solve(hess, rhs)
    residual = float(np.linalg.norm(hess @ w_star - rhs))
    if residual > residual_tol:
        raise ArithmeticError(f"minimizer residual {residual:.3e} exceeds {residual_tol:.1e}")
    return w_star, problem.global_loss(w_star)


@dataclass(frozen=True)
class ProblemConstants:
    """Convexity/smoothness/noise constants of one problem instance.

    ``g_bound`` (the uniform stochastic-gradient-norm envelope) cannot be
    derived from the problem alone; it is estimated from a calibration run
    and filled in with ``with_g_bound``.  ``delta_init`` is the distance
    from the start point to the minimizer, the anchor of every error curve.
    """

    mu: float
    smoothness: float  # L: max_k lambda_max(A_k) + mu
    hetero_gap: float  # Gamma: F* - (1/N) sum_k min F_k
    beta1: float  # additive stochastic-noise constant, 2 max ||z||^2
    beta2: float  # multiplicative stochastic-noise constant, 2
    w_star: np.ndarray
    f_star: float
    delta_init: float
    g_bound: float | None = None

    def with_g_bound(self, g_bound: float) -> "ProblemConstants":
        if g_bound <= 0.0:
            raise ValueError("g_bound must be positive")
        return replace(self, g_bound=float(g_bound))

    def require_g_bound(self) -> float:
        if self.g_bound is None:
            raise ValueError("g_bound has not been calibrated for these constants")
        return self.g_bound


def compute_constants(
    problem: QuadraticProblem,
    w_init: np.ndarray | None = None,
    g_bound: float | None = None,
) -> ProblemConstants:
    """Exact constants of the problem (plus the optional calibrated envelope).

    Smoothness is the worst per-client curvature; the heterogeneity gap
    compares the global optimum against each client's private optimum and
    is non-negative by construction (clamped only against rounding).
    """
    if w_init is None:
        w_init = np.zeros(problem.dim)
    w_star, f_star = solve_minimizer(problem)
    smoothness = max(lambda_max(c.a_mat) for c in problem.clients) + problem.mu
    local_minima = np.array([c.local_minimum() for c in problem.clients])
    hetero_gap = f_star - float(local_minima.mean())
    if hetero_gap < -1e-10:
        raise ArithmeticError(f"heterogeneity gap {hetero_gap:.3e} is negative")
    hetero_gap = max(hetero_gap, 0.0)
    beta1 = 2.0 * float(np.max(np.sum(problem.z_stack**2, axis=2))) if problem.n_data else 0.0
    return ProblemConstants(
        mu=problem.mu,
        smoothness=smoothness,
        hetero_gap=hetero_gap,
        beta1=beta1,
        beta2=2.0,
        w_star=w_star,
        f_star=f_star,
        delta_init=float(np.linalg.norm(w_init - w_star)),
        g_bound=float(g_bound) if g_bound is not None else None,
    )
