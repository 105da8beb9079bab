"""Error/gap metrics, rounds-to-accuracy, gain reports, seed statistics."""

import numpy as np
import pytest

from fedmulti.metrics import (
    compute_gain,
    count_floored,
    error_delta,
    gain_from_rounds,
    gap,
    multi_model_rounds_to_accuracy,
    rounds_to_accuracy,
    seed_statistics,
)


def test_error_delta():
    assert error_delta(np.array([3.0, 4.0]), np.zeros(2)) == 5.0
    with pytest.raises(ValueError, match="dimension mismatch"):
        error_delta(np.zeros(3), np.zeros(2))


def test_gap_floor_and_slack():
    assert gap(1.0, 1.0) == -16.0
    assert gap(1.0 + 1e-3, 1.0) == pytest.approx(-3.0, abs=1e-3)
    assert gap(1.0 - 1e-10, 1.0) == -16.0  # within slack: floored, not an error
    with pytest.raises(ValueError, match="minimizer looks wrong"):
        gap(0.5, 1.0)
    arr = gap(np.array([2.0, 1.0]), 1.0)
    assert arr.shape == (2,) and arr[1] == -16.0


def test_count_floored():
    assert count_floored(np.array([1.0, 1.0 + 1e-20, 2.0]), 1.0) == 2


def test_rounds_to_accuracy_first_crossing():
    curve = np.array([5.0, 3.0, 1.0, 2.0])
    assert rounds_to_accuracy(curve, 3.0) == 2
    assert rounds_to_accuracy(curve, 0.5) is None
    assert rounds_to_accuracy(curve, 10.0) == 1
    with pytest.raises(ValueError):
        rounds_to_accuracy(curve, 0.0)


def test_multi_model_takes_slowest_model():
    curves = np.array([[5.0, 5.0], [3.0, 4.0], [1.0, 2.0]])
    assert multi_model_rounds_to_accuracy(curves, 3.0) == 3
    assert multi_model_rounds_to_accuracy(curves, 1.5) is None


def test_compute_gain_by_hand():
    single = np.array([4.0, 3.0, 2.0, 1.0, 0.5])
    multi = np.array([[4.0, 4.0], [3.5, 3.0], [2.0, 2.5], [1.0, 1.8], [0.5, 0.9]])
    report = compute_gain(single, multi, 2, 2.0, algo="mfa-rr", local_steps=5)
    assert report.t_single == 3
    assert report.t_multi == 4  # model 2 crosses 2.0 only at round 4
    assert report.gain == pytest.approx(2 * 3 / 4)
    assert report.reached and report.reason is None


def test_compute_gain_withholds_instead_of_extrapolating():
    short = np.array([4.0, 3.0])
    multi = np.array([[4.0], [3.0]])
    report = compute_gain(short, multi, 1, 1.0)
    assert not report.reached and "baseline" in report.reason
    report = compute_gain(np.array([0.5, 0.2]), multi, 1, 1.0)
    assert not report.reached and "multi-model" in report.reason
    with pytest.raises(ValueError, match="starting error"):
        compute_gain(short, multi, 1, 5.0, delta_init=4.0)


def test_gain_from_rounds_matches_compute_gain():
    single = np.array([4.0, 3.0, 2.0, 1.0])
    multi = np.array([[4.0, 3.0], [2.0, 2.0], [1.0, 1.0], [0.5, 0.5]])
    via_curves = compute_gain(single, multi, 2, 2.0, algo="mfa-rand", local_steps=1)
    via_rounds = gain_from_rounds(3, 2, 2, 2.0, algo="mfa-rand", local_steps=1)
    assert via_curves == via_rounds
    assert not gain_from_rounds(None, 5, 2, 1.0).reached
    assert not gain_from_rounds(5, None, 2, 1.0).reached


def test_seed_statistics_by_hand():
    stacked = np.array([[0.0, 2.0], [2.0, 0.0]])
    stats = seed_statistics(stacked)
    assert np.array_equal(stats.mean, [1.0, 1.0])
    assert np.array_equal(stats.var, [2.0, 2.0])  # unbiased: ((0-1)^2+(2-1)^2)/1
    assert np.array_equal(stats.low, [0.0, 0.0])
    assert np.array_equal(stats.high, [2.0, 2.0])
    assert stats.n_seeds == 2
    with pytest.raises(ValueError, match="at least 2 seeds"):
        seed_statistics(stacked[:1])
