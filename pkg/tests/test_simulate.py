import csv
import math

import numpy as np
import pytest
from scipy.linalg import expm

from pclpv.orthopoly import ParameterDistribution, make_basis
from pclpv.plant import MissileConfig, UncertainLinearSystem, constant_system, linearize_origin
from pclpv.simulate import (
    cost_to_go,
    monte_carlo_moments,
    pc_moments,
    simulate_closed_loop,
    validate_galerkin,
    write_trajectory_csv,
)
from pclpv.synthesis import StaticGain, synth_lti

UNIT = ParameterDistribution.uniform(-1.0, 1.0)
Q = 0.2 * np.eye(2)
R = np.eye(1)


@pytest.fixture(scope="module")
def lti_gain(missile):
    A, B = linearize_origin(missile)
    return synth_lti(A, B, Q, R).gain


def decay_system():
    return UncertainLinearSystem(1, 1, lambda d: np.array([[-(1.0 + 0.5 * d)]]), lambda d: np.zeros((1, 1)), UNIT)


def exact_moments(t):
    # x = exp(-(1 + d/2) t), d ~ U[-1, 1]
    m1 = math.exp(-t) * math.sinh(0.5 * t) / (0.5 * t)
    m2 = math.exp(-2 * t) * math.sinh(t) / t
    return m1, m2 - m1**2


def test_zero_initial_state(missile, lti_gain):
    res = simulate_closed_loop(missile, lti_gain, [0.0, 0.0], 2.0, 0.01)
    assert res.J == 0.0 and cost_to_go(res) == 0.0
    assert not np.any(res.x) and not np.any(res.u)
    assert np.all(np.diff(res.t) > 0)


def test_constant_state_closed_form():
    frozen = MissileConfig(2.5, 0.0, 0.0, 0, 0, 0, 0, 0, 0, 0, 0)
    res = simulate_closed_loop(frozen, StaticGain(np.zeros((1, 2))), [3.0, 0.0], 4.0, 0.01)
    assert np.allclose(res.x, [3.0, 0.0])
    assert res.J == pytest.approx(4.0 * 0.2 * 9.0, rel=1e-12)


def test_step_halving(missile, lti_gain):
    a = simulate_closed_loop(missile, lti_gain, [17.0, 5.0], 20.0, 0.002)
    b = simulate_closed_loop(missile, lti_gain, [17.0, 5.0], 20.0, 0.001)
    assert abs(a.J - b.J) / b.J < 1e-4


def test_rk4_order(missile, lti_gain):
    x0, T = [17.0, 5.0], 1.0
    ref = simulate_closed_loop(missile, lti_gain, x0, T, 0.02 / 8).x[-1]
    e1 = np.linalg.norm(simulate_closed_loop(missile, lti_gain, x0, T, 0.02).x[-1] - ref)
    e2 = np.linalg.norm(simulate_closed_loop(missile, lti_gain, x0, T, 0.01).x[-1] - ref)
    assert 12.0 <= e1 / e2 <= 20.0


def test_cost_additivity(missile, lti_gain):
    x0, T, dt = [17.0, 5.0], 4.0, 0.001
    full = simulate_closed_loop(missile, lti_gain, x0, T, dt)
    first = simulate_closed_loop(missile, lti_gain, x0, T / 2, dt)
    second = simulate_closed_loop(missile, lti_gain, first.x[-1], T / 2, dt)
    assert full.J == pytest.approx(first.J + second.J, rel=1e-9)


def test_divergence_is_flagged_not_raised(missile):
    res = simulate_closed_loop(missile, StaticGain(np.array([[50.0, 50.0]])), [5.0, 0.0], 20.0, 0.01)
    assert res.diverged and res.flagged
    assert math.isfinite(res.J) and cost_to_go(res) == math.inf


def test_trajectory_csv(tmp_path, missile, lti_gain):
    res = simulate_closed_loop(missile, lti_gain, [10.0, 0.0], 0.05, 0.01)
    path = tmp_path / "traj.csv"
    write_trajectory_csv(res, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t", "alpha_deg", "q_degps", "deltafin_deg", "running_cost"]
    assert len(rows) == 1 + len(res.t)
    assert float(rows[1][1]) == 10.0


def test_bad_inputs(missile, lti_gain):
    with pytest.raises(ValueError):
        simulate_closed_loop(missile, lti_gain, [1.0, 0.0], 1.0, 0.0)
    with pytest.raises(ValueError):
        simulate_closed_loop(missile, lti_gain, [math.nan, 0.0], 1.0, 0.01)


def test_constant_dynamics_have_no_variance():
    A = np.array([[-1.0, 0.5], [0.0, -2.0]])
    sys_ = constant_system(A, np.zeros((2, 1)), UNIT)
    mean, var = pc_moments(sys_, make_basis(UNIT, 3), [1.0, 2.0], 0.7)
    assert np.allclose(var, 0.0, atol=1e-28)
    assert np.allclose(mean, expm(0.7 * A) @ [1.0, 2.0], rtol=1e-12)


def test_only_mode_zero_seeded():
    mean, var = pc_moments(decay_system(), make_basis(UNIT, 4), [2.0], 0.0)
    assert mean[0] == 2.0 and var[0] == 0.0


def test_galerkin_vs_monte_carlo():
    rep = validate_galerkin(decay_system(), make_basis(UNIT, 3), [1.0], 1.0, 100_000, seed=0)
    assert rep.mean_error <= 0.01
    assert rep.variance_error <= 0.01


def test_monte_carlo_close_to_exact():
    m, v = exact_moments(1.0)
    mean, var = monte_carlo_moments(decay_system(), [1.0], 1.0, 100_000, seed=0)
    assert mean[0] == pytest.approx(m, rel=2e-3)
    assert var[0] == pytest.approx(v, rel=2e-2)


def test_variance_error_decreases_with_order():
    m, v = exact_moments(1.0)
    errs = []
    for N in range(1, 6):
        _, var = pc_moments(decay_system(), make_basis(UNIT, N), [1.0], 1.0)
        errs.append(abs(var[0] - v) / v)
    assert all(b < a for a, b in zip(errs, errs[1:]))
