"""Bound curves, inversions, and the brute-force inequality verifiers."""

import math
from dataclasses import replace

import numpy as np
import pytest

from fedmulti.bounds import (
    bound_based_gain,
    contraction_check,
    empirical_vs_bound,
    frame_term_checks,
    inverse_decay_bound,
    single_step_pool_condition,
    sqrt_decay_bound,
    subset_variance_check,
)
from fedmulti.engine import LRSchedule, RunConfig, SampleSchedule, run_training
from fedmulti.problem import (
    ProblemConstants,
    QuadraticClient,
    build_quadratic_problem,
    compute_constants,
)


def unit_constants(mu=1.0, smoothness=1.0, hetero_gap=0.0, beta1=0.0, g_bound=1.0, delta_init=1.0):
    """Hand-specified constants so the curve arithmetic can be checked exactly."""
    return ProblemConstants(
        mu=mu, smoothness=smoothness, hetero_gap=hetero_gap, beta1=beta1, beta2=2.0,
        w_star=np.zeros(1), f_star=0.0, delta_init=delta_init, g_bound=g_bound,
    )


def test_sqrt_curve_arithmetic_by_hand():
    """mu=L=G=1, Gamma=beta1=0, beta=2, N=2, M=2, E=1: all terms reduce to integers."""
    curve = sqrt_decay_bound(unit_constants(), beta=2.0, gamma=10.0, n_models=2,
                             local_steps=1, n_clients=2, rounds=3)
    assert curve.terms["sigma_sq"] == 8.0  # 4*(0 + 2*1)
    assert curve.terms["drift_term"] == 4.0  # 0 + 8/2 + 0
    assert curve.terms["mixing_term"] == 1.0  # (1/1)*1*1
    assert curve.terms["anchor"] == 11.0  # 1^2 * (1+10)
    assert curve.scale == 20.0  # max(4*(4+1)/(2-1), 11)
    assert curve.terms["binding_branch"] == "noise"
    assert curve.values[0] == pytest.approx(math.sqrt(20.0 / 11.0))
    assert curve.values[2] == pytest.approx(math.sqrt(20.0 / 13.0))
    assert curve.ok


def test_sqrt_mixing_term_fraction():
    """N=24, M=12, E=5, G=1 gives the mixing coefficient 11*25/23 = 275/23."""
    curve = sqrt_decay_bound(unit_constants(), beta=2.0, gamma=50.0, n_models=12,
                             local_steps=5, n_clients=24, rounds=1)
    assert curve.terms["mixing_term"] == pytest.approx(275.0 / 23.0, rel=1e-15)


def test_inverse_curve_arithmetic_by_hand():
    """L=G=mu=1, E=5, M=2, beta=2: Y=25/4, Z=20, lead=5."""
    curve = inverse_decay_bound(unit_constants(), beta=2.0, gamma=10.0, n_models=2,
                                local_steps=5, rounds=4)
    assert curve.terms["y_term"] == 6.25
    assert curve.terms["z_term"] == 20.0
    assert curve.terms["lead_term"] == 5.0
    assert curve.scale == pytest.approx(5.0 + 4.0 * 26.25)  # lead + beta^2(Y+Z)/(beta*mu-1)
    assert curve.values[0] == pytest.approx(curve.scale / (0.5 + 10.0))
    assert curve.values[3] == pytest.approx(curve.scale / (2.0 + 10.0))


def test_inverse_anchor_branch_binds_for_tiny_noise():
    constants = unit_constants(g_bound=1e-6, delta_init=2.0)
    curve = inverse_decay_bound(constants, beta=2.0, gamma=10.0, n_models=2,
                                local_steps=1, rounds=1)
    assert curve.terms["binding_branch"] == "anchor"
    assert curve.scale == pytest.approx(2.0 * 11.0 + curve.terms["lead_term"])


def test_hypothesis_violation_raises_or_flags():
    constants = unit_constants(mu=0.1)
    with pytest.raises(ValueError, match="beta > 1/mu"):
        sqrt_decay_bound(constants, beta=2.0, gamma=10.0, n_models=2,
                         local_steps=1, n_clients=2, rounds=2)
    with pytest.warns(UserWarning, match="anchor"):
        curve = sqrt_decay_bound(constants, beta=2.0, gamma=10.0, n_models=2,
                                 local_steps=1, n_clients=2, rounds=2, on_violation="flag")
    assert not curve.ok
    assert curve.scale == curve.terms["anchor"]
    with pytest.raises(ValueError, match="beta > 1/mu"):
        inverse_decay_bound(constants, beta=2.0, gamma=10.0, n_models=2,
                            local_steps=1, rounds=2)


def test_rounds_to_inverts_the_curves():
    sqrt_curve = sqrt_decay_bound(unit_constants(), beta=2.0, gamma=10.0, n_models=2,
                                  local_steps=1, n_clients=2, rounds=1)
    eps = 0.5
    t = sqrt_curve.rounds_to(eps)
    assert t == pytest.approx(20.0 / 0.25 - 10.0)
    assert math.sqrt(sqrt_curve.scale / (t + sqrt_curve.gamma)) == pytest.approx(eps)
    inv_curve = inverse_decay_bound(unit_constants(), beta=2.0, gamma=10.0, n_models=2,
                                    local_steps=5, rounds=1)
    t = inv_curve.rounds_to(1.0)
    assert t == pytest.approx(2.0 * (inv_curve.scale - 10.0))
    assert inv_curve.scale / (t / 2.0 + 10.0) == pytest.approx(1.0)
    assert sqrt_curve.rounds_to(1e9) == 1.0


def test_empirical_vs_bound_reports_violations():
    bound = np.array([2.0, 1.0, 0.5])
    report = empirical_vs_bound(np.array([1.0, 1.0, 1.0]), bound)
    assert not report.ok
    assert report.violations == (3,)
    assert report.max_ratio == pytest.approx(2.0)
    assert empirical_vs_bound(np.array([1.0, 0.5, 0.2]), bound).ok
    with pytest.raises(ValueError, match="length"):
        empirical_vs_bound(np.ones(2), bound)


def test_subset_variance_matches_srswor_closed_form():
    """z = (3,-1,-1,-1), s=2: exhaustive variance equals (n-s)/(s(n-1)) E||z||^2 = 1."""
    client = QuadraticClient(
        index=0, a_mat=np.array([[1.0]]), b_vec=np.array([0.0]), mu=0.0,
        z=np.array([[3.0], [-1.0], [-1.0], [-1.0]]),
    )
    check = subset_variance_check(client, np.array([2.0]), 2, beta1=18.0, beta2=2.0)
    assert check.measured == pytest.approx(1.0, rel=1e-12)
    assert check.ok
    mc = subset_variance_check(client, np.array([2.0]), 2, beta1=18.0, beta2=2.0,
                               mode="monte-carlo", rng=np.random.default_rng(0), n_draws=4000)
    assert mc.measured == pytest.approx(1.0, rel=0.1)


def test_subset_variance_guards():
    problem = build_quadratic_problem(n_clients=2, block_size=1, mu=0.1, n_data=12, seed=0)
    with pytest.raises(ValueError, match="n_data <= 8"):
        subset_variance_check(problem.clients[0], np.zeros(3), 3, 0.1, 2.0)
    with pytest.raises(ValueError, match="needs an rng"):
        subset_variance_check(problem.clients[0], np.zeros(3), 3, 0.1, 2.0, mode="monte-carlo")


def test_contraction_check_exact_on_quadratic():
    problem = build_quadratic_problem(n_clients=4, block_size=2, mu=0.3, seed=5)
    constants = compute_constants(problem)
    rng = np.random.default_rng(8)
    for local_steps in (1, 4):
        for _ in range(10):
            w = rng.normal(size=problem.dim)
            check = contraction_check(problem, constants, w, 1.0 / constants.smoothness, local_steps)
            assert check.ok
    with pytest.raises(ValueError, match="exceeds 1/L"):
        contraction_check(problem, constants, np.zeros(problem.dim),
                          2.0 / constants.smoothness, 1)


def test_frame_checks_on_a_real_run():
    problem = build_quadratic_problem(n_clients=6, block_size=2, mu=0.2, n_data=6,
                                      sigma_z=0.2, seed=9)
    constants = compute_constants(problem, g_bound=8.0)
    config = RunConfig(algo="mfa-rr", n_models=2, local_steps=3, rounds=24,
                       lr=LRSchedule(kind="constant", eta=0.1), diagnostics=True,
                       sampling=SampleSchedule(kind="lr-scaled", v_scale=300.0))
    trace = run_training(problem, config, 6, 0, constants=constants)
    checks = frame_term_checks(trace.frames, constants, 2, 3)
    assert len(checks) == 24  # 12 frames x 2 models
    assert all(c.ok for c in checks)
    assert all(c.residual < 1e-9 for c in checks)
    assert any(c.d_check.measured > 0.0 for c in checks)  # subsampling was active
    assert all(c.contraction is not None for c in checks)  # eta=0.1 < 1/L here


def test_frame_check_flags_fabricated_violation():
    from fedmulti.engine import FrameDiagnostic

    constants = unit_constants()
    fake = FrameDiagnostic(frame=1, model=0, alpha=0.1, e_norm=100.0, d_norm=0.0,
                           residual=0.0, u_dist=0.0, start_dist=1.0, sample_gap_sum=0.0)
    checks = frame_term_checks((fake,), constants, 2, 3)
    assert not checks[0].ok and not checks[0].e_check.ok


def test_pool_condition_flag():
    """Threshold is 1 + 6*L*Gamma/G^2 = 4 here; the comparison is strict."""
    assert single_step_pool_condition(unit_constants(hetero_gap=0.5), 5).ok
    tight = single_step_pool_condition(unit_constants(hetero_gap=0.5), 4)
    assert not tight.ok
    assert tight.margin == pytest.approx(0.0)


def test_bound_based_gain_by_hand():
    constants = unit_constants()
    gain = bound_based_gain(constants, beta=2.0, gamma=10.0, n_models=2, local_steps=1,
                            n_clients=2, epsilon=0.5, kind="sqrt-decay")
    single_scale = 4.0 * (0.0 + 8.0 / 2.0 + 0.0) / 1.0  # M=1: no mixing
    multi_scale = 20.0
    assert gain.t_single == pytest.approx(max(1.0, single_scale / 0.25 - 10.0))
    assert gain.t_multi == pytest.approx(max(1.0, multi_scale / 0.25 - 10.0))
    assert gain.gain == pytest.approx(2 * gain.t_single / gain.t_multi)
