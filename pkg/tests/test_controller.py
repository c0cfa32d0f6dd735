import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_joints
from emla_vdc.controller import (
    ActuatorGains,
    ControllerSettings,
    GainError,
    GainSet,
    actuator_nu,
    betas,
    clik,
    gain_condition_check,
    hybrid_force,
    low_level_voltages,
    lyapunov_monitor,
    required_d_current,
    required_force_chain,
    required_joint_velocity,
    required_q_current,
    required_velocity_chain,
)
from emla_vdc.emla import EmlaParams, PmsmParams
from emla_vdc.hdrm import net_forces, potential_energy, propagate_forces
from emla_vdc.linkage import BODIES, SingularityError, closure_residuals, propagate_chain, solve_pose
from emla_vdc.single_axis import SingleAxisConfig, force_error_rate, run_single_axis

P = EmlaParams()
H = 1e-6


# --------------------------------------------------------------------------- CLIK


def test_clik_identity_and_gain():
    e = np.arange(1.0, 7.0) * 1e-3
    Pi_dot = np.linspace(-1, 1, 6)
    np.testing.assert_allclose(clik(np.eye(6), Pi_dot, np.zeros(6), np.zeros(6), np.eye(6)), Pi_dot)
    np.testing.assert_allclose(clik(np.eye(6), np.zeros(6), e, np.zeros(6), np.eye(6)), e)


def test_clik_residual_identity():
    rng = np.random.default_rng(1)
    for _ in range(20):
        J = rng.normal(size=(6, 6)) + 3 * np.eye(6)
        Pi_dot, e = rng.normal(size=6), rng.normal(size=6)
        Lam = np.diag(rng.uniform(1, 50, 6))
        q_dot = clik(J, Pi_dot, None, None, Lam, error=e)
        assert np.max(np.abs(J @ q_dot - (Pi_dot + Lam @ e))) < 1e-10


def test_clik_damps_near_singularity_and_refuses_beyond_cap():
    J = np.diag([1, 1, 1, 1, 1, 1e-5])
    q_dot = clik(J, np.ones(6), None, None, np.eye(6), error=np.zeros(6))
    assert abs(q_dot[5]) < 1e3  # a bare inverse would give 1e5
    with pytest.raises(SingularityError):
        clik(np.diag([1, 1, 1, 1, 1, 1e-9]), np.ones(6), None, None, np.eye(6), error=np.zeros(6))


def test_required_joint_velocity_examples():
    assert required_joint_velocity(0.3, 1.0, 1.0, 10.0) == pytest.approx(0.3)
    assert required_joint_velocity(0.0, 0.01, 0.0, 10.0) == pytest.approx(0.1)
    assert required_joint_velocity(0.0, 0.02, 0.0, 10.0) > required_joint_velocity(0.0, 0.01, 0.0, 10.0)
    with pytest.raises(GainError):
        required_joint_velocity(0.0, 0.0, 0.0, 0.0)


# --------------------------------------------------------------------------- required chains


def test_required_velocities_equal_actual_under_substitution(geom, home):
    pose = solve_pose(home + 0.1, geom)
    rate = np.array([0.05, -0.02, 0.03, 0.1, -0.2, 0.3])
    V_r = required_velocity_chain(rate, pose)
    V = propagate_chain(pose, rate)
    for name in V:
        np.testing.assert_allclose(V_r[name], V[name], atol=1e-10)
    np.testing.assert_allclose(V_r["actuators"], pose.actuator_jacobian * rate[:3])


def test_required_velocity_chain_zero_and_closure(geom):
    rng = np.random.default_rng(2)
    for z in random_joints(geom, rng, 20):
        pose = solve_pose(z, geom)
        assert all(not np.any(v) for v in required_velocity_chain(np.zeros(6), pose).values())
        V_r = required_velocity_chain(rng.normal(size=6), pose)
        assert max(closure_residuals(V_r)) < 1e-9


def _gains(inertia, **kw):
    return GainSet.from_dict({"actuators": {"K_i": 1e-4, "K_f": 1e-3, "K_v": 1e3, "lambda_i": 50, "K2": 1e-3}, **kw}, inertia)


def test_static_required_forces_match_virtual_work(geom, inertia, g_world, home):
    z = home + np.array([0.2, 0.1, 0.1, 0.3, 0.2, 0.4])
    pose = solve_pose(z, geom)
    zero = {name: np.zeros(6) for name in BODIES}
    theta = {name: p.vector() for name, p in inertia.bodies.items()}
    req = required_force_chain(pose, zero, zero, zero, theta, _gains(inertia).K_A, np.zeros(6), g_world, geom)

    def dPE(k):
        e = np.zeros(6)
        e[k] = H
        return (potential_energy(solve_pose(z + e, geom), inertia, g_world) - potential_energy(solve_pose(z - e, geom), inertia, g_world)) / (2 * H)

    for k in (1, 2):
        assert req.actuator[k] == pytest.approx(dPE(k) / pose.actuator_jacobian[k], rel=1e-4)
    assert req.actuator[0] == pytest.approx(dPE(0) / pose.actuator_jacobian[0], abs=1e-6 * abs(req.actuator[1]))
    model = propagate_forces(pose, net_forces(pose, inertia, {}, {}, g_world), np.zeros(6), geom)
    np.testing.assert_allclose(req.actuator, model.actuator.as_array(), rtol=1e-10, atol=1e-8)


def test_feedback_component_scales_with_velocity_gain(geom, inertia, g_world, home):
    pose = solve_pose(home, geom)
    rng = np.random.default_rng(3)
    V_r = {name: rng.normal(size=6) for name in BODIES}
    V = {name: np.zeros(6) for name in BODIES}
    G = _gains(inertia)
    doubled = {k: 2 * K for k, K in G.K_A.items()}
    a = required_force_chain(pose, V_r, V, V, {}, G.K_A, np.zeros(6), g_world, geom, use_model=False)
    b = required_force_chain(pose, V_r, V, V, {}, doubled, np.zeros(6), g_world, geom, use_model=False)
    for name in a.feedback:
        np.testing.assert_allclose(b.feedback[name], 2 * a.feedback[name], rtol=1e-12)
    np.testing.assert_allclose(b.actuator, 2 * a.actuator, rtol=1e-9)


def test_zero_everything_gives_zero_force(geom, inertia, home):
    pose = solve_pose(home, geom)
    zero = {name: np.zeros(6) for name in BODIES}
    theta = {name: p.vector() for name, p in inertia.bodies.items()}
    req = required_force_chain(pose, zero, zero, zero, theta, _gains(inertia).K_A, np.zeros(6), np.zeros(3), geom)
    assert not np.any(req.actuator) and not np.any(req.wrist_torques)


# --------------------------------------------------------------------------- currents and voltages


def test_required_d_current_examples():
    assert required_d_current(0.0, 5.0) == (0.0, 0.0)
    assert required_d_current(1.0, 5.0)[1] == pytest.approx(-5.0)
    assert required_d_current(1.0, 5.0, i_dd=2.0, di_dd=3.0)[1] == pytest.approx(3.0 + 5.0 * (2.0 - 1.0))
    assert required_d_current(1.0, 5.0, i_dr_prev=0.5, dt=0.1)[0] == pytest.approx(0.5 - 0.5)
    with pytest.raises(GainError):
        required_d_current(0.0, 0.0)


def test_required_q_current_static_closed_form():
    quiet = EmlaParams(PmsmParams(tau_C=0.0))
    F = 12e3
    i_qr = required_q_current(F, 0.0, 0.0, 0.0, 0.0, 0.0, quiet, 0.0, 0.0, quiet.J_eq)
    D = quiet.drive
    expected = F * D.rho / (2 * math.pi * D.N_gear * 1.5 * quiet.motor.p * quiet.motor.lambda_m)
    assert i_qr == pytest.approx(expected, rel=1e-12)
    assert required_q_current(2 * F, 0.0, 0.0, 0.0, 0.0, 0.0, quiet, 0.0, 0.0, quiet.J_eq) == pytest.approx(2 * i_qr)


@settings(max_examples=50, deadline=None)
@given(
    st.floats(-5, 5), st.floats(-100, 100), st.floats(-300, 300), st.floats(-1e3, 1e3),
    st.floats(0, 0.9), st.floats(-1e4, 1e4),
)
def test_q_current_is_a_fixed_point_of_the_hybrid_force(i_d, i_q, w, w_dot, alpha, F_hat):
    F = hybrid_force(i_d, i_q, w, w_dot, P, alpha, F_hat, P.J_eq)
    i_qr = required_q_current(F, i_d, i_q, i_d, w, w_dot, P, alpha, F_hat, P.J_eq)
    assert i_qr == pytest.approx(i_q, rel=1e-9, abs=1e-9)


def test_q_current_rejects_pure_surrogate():
    with pytest.raises(ValueError):
        required_q_current(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, P, 1.0, 0.0, P.J_eq)


GAINS = ActuatorGains(K_i=0.5, K_f=0.01, K_v=100.0, lambda_i=5.0, K2=1.0)


def test_voltages_are_pure_feedforward_without_errors():
    M = P.motor
    i_d, i_q, w = 0.2, 30.0, 50.0
    v_d, v_q = low_level_voltages(i_d, i_q, w, i_d, 0.0, 0.0, 1e3, 1e3, 0.1, 0.1, GAINS, M)
    we = M.p * w
    assert v_d == pytest.approx(M.R_s * i_d - we * M.L_q * i_q)
    assert v_q == pytest.approx(M.R_s * i_q + we * (M.L_d * i_d + M.lambda_m))


def test_force_error_adds_one_volt():
    base = low_level_voltages(0, 0, 0, 0, 0, 0, 0.0, 0.0, 0, 0, GAINS, P.motor)[1]
    assert low_level_voltages(0, 0, 0, 0, 0, 0, 100.0, 0.0, 0, 0, GAINS, P.motor)[1] - base == pytest.approx(1.0)


def test_d_axis_feedback_vanishes_when_tracking():
    M = P.motor
    v_track = low_level_voltages(1.0, 0, 0, 1.0, 0, 0, 0, 0, 0, 0, GAINS, M)[0]
    v_off = low_level_voltages(1.0, 0, 0, 2.0, 0, 0, 0, 0, 0, 0, GAINS, M)[0]
    assert v_track == pytest.approx(M.R_s * 1.0)
    assert v_off - v_track == pytest.approx(GAINS.K_i * 1.0)


# --------------------------------------------------------------------------- gain conditions


def _brute_force(g, b1, b2, L_d, L_q):
    K1 = g.k1(b1, L_q)
    return (
        b1 * g.K_f / L_q >= abs(b2) * g.K_i / (2 * L_d),
        g.K2 >= K1 * abs(b2) / 2,
        K1 == L_q / (b1 * g.K_v),
    )


def test_gain_check_boundary_passes_with_zero_margin():
    L_d = L_q = 2e-3
    b1, b2 = 1000.0, 400.0
    K_f = 0.02
    K_i = 2 * L_d * b1 * K_f / (L_q * b2)  # equality in the first condition
    K_v = 50.0
    K1 = L_q / (b1 * K_v)
    g = ActuatorGains(K_i=K_i, K_f=K_f, K_v=K_v, lambda_i=1.0, K2=K1 * b2 / 2)
    chk = gain_condition_check(g, b1, b2, L_d, L_q)
    assert chk.passed
    assert chk.margins == pytest.approx((0.0, 0.0, 0.0), abs=1e-12)


def test_halving_force_gain_fails_first_condition():
    L = 2e-3
    b1, b2 = 1000.0, 400.0
    g = ActuatorGains(K_i=2 * L * b1 * 0.02 / (L * b2), K_f=0.02, K_v=50.0, lambda_i=1.0, K2=1.0)
    assert gain_condition_check(g, b1, b2, L, L).passed
    chk = gain_condition_check(replace(g, K_f=0.01), b1, b2, L, L)
    assert not chk.passed
    assert chk.failed == ("force_vs_d_current",)
    assert chk.margins[0] < 0


def test_gain_check_agrees_with_brute_force_on_random_gain_sets():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        g = ActuatorGains(*(10 ** rng.uniform(-5, 2, 5)))
        b1, b2 = 10 ** rng.uniform(1, 4), rng.uniform(-1e3, 1e3)
        L_d, L_q = 10 ** rng.uniform(-4, -2, 2)
        chk = gain_condition_check(g, b1, b2, L_d, L_q, rtol=0.0)
        expected = _brute_force(g, b1, b2, L_d, L_q)
        assert chk.passed == all(expected)
        assert tuple(c for c, ok in zip(("force_vs_d_current", "d_current_weight", "force_weight_definition"), expected) if not ok) == chk.failed


def test_explicit_force_weight_must_match_definition():
    g = ActuatorGains(K_i=1e-4, K_f=1e-2, K_v=10.0, lambda_i=1.0, K2=1.0, K1=1.0)
    assert gain_condition_check(g, 100.0, 1.0, 1e-3, 1e-3).failed == ("force_weight_definition",)


def test_betas_vanish_for_pure_surrogate_and_scale_with_flux():
    assert betas(P, 1.0, 0.0, 10.0) == (0.0, 0.0)
    b1, b2 = betas(P, 0.0, 0.0, 10.0)
    k = 1.5 * P.motor.p / P.lead_ratio
    assert b1 == pytest.approx(k * P.motor.lambda_m)
    assert b2 == pytest.approx(k * P.motor.L_q * 10.0)


@pytest.mark.parametrize("kw", [{"K_f": 0.0}, {"K_v": -1.0}, {"lambda_i": 0.0}])
def test_non_positive_gains_are_rejected(kw):
    base = dict(K_i=1.0, K_f=1.0, K_v=1.0, lambda_i=1.0, K2=1.0)
    with pytest.raises(GainError):
        ActuatorGains(**{**base, **kw})


def test_gain_set_requires_positive_definite_matrices(inertia):
    with pytest.raises(GainError):
        _gains(inertia, Lambda=-1.0)
    with pytest.raises(GainError):
        _gains(inertia, K_A={"A2": -np.eye(6)})


# --------------------------------------------------------------------------- accompanying functions


def test_monitor_zero_errors_leave_only_the_divergence_term(inertia):
    G = _gains(inertia, gamma=7.0)
    M = {name: np.eye(6) for name in BODIES}
    zero = {name: np.zeros(6) for name in BODIES}
    rec = [{"V_err": zero, "bregman": 0.25, "e_F": np.zeros(3), "e_d": np.zeros(3)}] * 3
    out = lyapunov_monitor(rec, G, M, [1.0, 1.0, 1.0])
    np.testing.assert_allclose(out["nu"], 7.0 * 0.25)
    np.testing.assert_allclose(out["dnu"], 0.0)


def test_force_error_weight_scales_its_component():
    assert actuator_nu(3.0, 0.0, 2.0, 5.0) == pytest.approx(2 * actuator_nu(3.0, 0.0, 1.0, 5.0))
    assert actuator_nu(0.0, 2.0, 1.0, 3.0) == pytest.approx(6.0)


@pytest.fixture(scope="module")
def single_axis():
    cfg = SingleAxisConfig()
    return cfg, run_single_axis(cfg)


def test_single_actuator_accompanying_function_is_non_increasing(single_axis):
    cfg, run = single_axis
    assert run["gains_pass"]
    start = int(round(1e-3 / cfg.dt))
    assert np.max(np.diff(run["nu"])[start:]) <= 1e-6 * run["nu"][0]
    assert run["nu"][-1] < 1e-3 * run["nu"][0]


def test_single_actuator_force_error_rate_matches_closed_form(single_axis):
    cfg, run = single_axis
    start = int(round(1e-3 / cfg.dt))
    numeric = np.gradient(run["e_F"], cfg.dt)[start:-1]
    closed = force_error_rate(run, cfg)[start:-1]
    assert np.max(np.abs(numeric - closed)) <= 1e-3 * np.max(np.abs(closed))


def test_single_actuator_with_d_axis_error_still_decreases():
    cfg = SingleAxisConfig(initial_i_d=2.0, duration=0.05)
    run = run_single_axis(cfg)
    start = int(round(1e-3 / cfg.dt))
    assert run["gains_pass"]
    assert np.max(np.diff(run["nu"])[start:]) <= 1e-6 * run["nu"][0]


def test_controller_settings_validation():
    with pytest.raises(ValueError):
        ControllerSettings(variant="lqr")
    with pytest.raises(ValueError):
        ControllerSettings(theta_ddot_source="guess")
    with pytest.raises(ValueError):
        ControllerSettings(dt=0.0)
