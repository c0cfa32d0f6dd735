import math
from dataclasses import replace

import numpy as np
import pytest

from emla_vdc.emla import (
    DriveTrainParams,
    EmlaParams,
    EmlaState,
    EnergyAudit,
    LossModel,
    PmsmParams,
    StrokeLimitError,
    backdrive_torque,
    efficiency,
    electrical_rates,
    em_torque,
    energy_residual,
    friction_torque,
    mechanical_rates,
    screw_speed,
    shaft_length,
    static_equilibrium,
    step,
    stiffness,
    stored_energy,
)

P = EmlaParams()


def test_electrical_steady_state_at_standstill():
    s = EmlaState(i_d=3.0, i_q=-7.0, x=0.5)
    did, diq = electrical_rates(s, P.motor.R_s * 3.0, P.motor.R_s * -7.0, P)
    assert did == pytest.approx(0.0, abs=1e-12) and diq == pytest.approx(0.0, abs=1e-12)


def test_back_emf_only():
    w = 50.0
    s = EmlaState(theta_m_dot=w, x=0.5)
    _, diq = electrical_rates(s, 0.0, 40.0, P)
    assert diq == pytest.approx((40.0 - P.motor.p * w * P.motor.lambda_m) / P.motor.L_q)


def test_electrical_power_balance_over_one_step():
    # rotor speed held fixed: input = resistive + d(magnetic) + electromagnetic power
    M = P.motor
    s = EmlaState(i_d=2.0, i_q=5.0, theta_m_dot=80.0, x=0.5)
    v_d, v_q, dt, n = 10.0, 60.0, 1e-4, 100
    h = dt / n
    e_in = e_res = e_em = 0.0
    i_d, i_q = s.i_d, s.i_q
    for _ in range(n):
        st = EmlaState(i_d=i_d, i_q=i_q, theta_m_dot=s.theta_m_dot, x=0.5)
        did, diq = electrical_rates(st, v_d, v_q, P)
        mid = EmlaState(i_d=i_d + 0.5 * h * did, i_q=i_q + 0.5 * h * diq, theta_m_dot=s.theta_m_dot, x=0.5)
        did, diq = electrical_rates(mid, v_d, v_q, P)
        e_in += 1.5 * (v_d * mid.i_d + v_q * mid.i_q) * h
        e_res += 1.5 * M.R_s * (mid.i_d**2 + mid.i_q**2) * h
        e_em += em_torque(mid, P) * s.theta_m_dot * h
        i_d, i_q = i_d + h * did, i_q + h * diq
    w_mag = lambda a, b: 0.75 * (M.L_d * a * a + M.L_q * b * b)
    residual = e_in - e_res - e_em - (w_mag(i_d, i_q) - w_mag(s.i_d, s.i_q))
    assert abs(residual) < 1e-6 * abs(e_in)


def test_em_torque_values():
    M = PmsmParams(p=4, lambda_m=0.1)
    assert em_torque(EmlaState(i_q=10.0), M) == pytest.approx(6.0)
    assert em_torque(EmlaState(i_d=4.0), M) == 0.0
    assert em_torque(EmlaState(i_q=-1.0), M) < 0
    # with L_d = L_q the d-axis current has no effect
    assert em_torque(EmlaState(i_d=5.0, i_q=10.0), M) == pytest.approx(6.0)


def test_stiffness_limits_and_symmetry():
    big = 1e30
    D = DriveTrainParams(K_s=big, K_br=big, K_r=big, K_rot=big, K_n=3e8)
    assert stiffness(0.3, D) == pytest.approx(3e8, rel=1e-3)
    assert shaft_length(0.5, 1.0) == pytest.approx(0.25)
    D = DriveTrainParams(K_rot=big)
    assert stiffness(0.25, D) == pytest.approx(stiffness(0.75, D), rel=1e-12)
    xs = np.linspace(0.01, 0.99, 99)
    assert all(stiffness(x, P.drive) > 0 for x in xs)
    assert np.argmax([shaft_length(x, 1.0) for x in xs]) == 49


@pytest.mark.parametrize("x", [0.0, 1.0, -0.1, 1.2])
def test_stiffness_rejects_stroke_limits(x):
    with pytest.raises(StrokeLimitError):
        stiffness(x, P.drive)


def test_backdrive_torque_cases():
    D = DriveTrainParams(rho=0.01)
    assert backdrive_torque(EmlaState(x_n=0.3, x=0.3), 1e7, D) == 0.0
    tau = backdrive_torque(EmlaState(x_n=0.301, x=0.3), 1e7, D)
    assert tau == pytest.approx(0.01 / (2 * math.pi) * 1e4)
    lead_w = 100.0
    s = EmlaState(theta_m_dot=lead_w, x_n=0.3, x=0.3, x_dot=0.0)
    xn_dot = 0.01 / (2 * math.pi) * lead_w / D.N_gear
    assert backdrive_torque(s, 1e7, D) == pytest.approx(0.01 / (2 * math.pi) * D.C_b * xn_dot)


def test_equilibrium_has_zero_accelerations():
    s, v_d, v_q = static_equilibrium(0.4, 25e3, P)
    tau_e = em_torque(s, P)
    a_rot, a_rod = mechanical_rates(s, tau_e, 25e3, P)
    assert abs(a_rot) < 1e-6 and abs(a_rod) < 1e-6
    assert electrical_rates(s, v_d, v_q, P) == pytest.approx((0.0, 0.0), abs=1e-9)


def test_external_force_step_without_torque():
    s0 = EmlaState(x_n=0.5, x=0.5)
    _, a_rod = mechanical_rates(s0, 0.0, 1e4, P)
    assert a_rod < 0
    s = s0
    for _ in range(20):
        s = step(s, 0.0, 0.0, 1e4, 1e-5, P)
    assert s.x < 0.5 and s.x_n - s.x > 0


def test_coulomb_friction_regularisation():
    eps = P.motor.omega_eps
    assert friction_torque(0.0, P) == 0.0
    assert friction_torque(10 * eps, P) == pytest.approx(P.motor.tau_C + P.C_eq * 10 * eps, rel=1e-6)
    assert friction_torque(-10 * eps, P) == pytest.approx(-friction_torque(10 * eps, P))
    # a torque below the Coulomb level only creeps: the speed settles below atanh(0.5) * omega_eps
    free = EmlaParams(P.motor, replace(P.drive, K_n=1e3, K_s=1e3, K_br=1e3, K_r=1e3, C_b=0.0))
    s = EmlaState(x_n=0.5, x=0.5)
    tau_small = 0.5 * P.motor.tau_C
    i_q = tau_small / free.torque_constant
    s = replace(s, i_q=i_q)
    for _ in range(400):
        s = step(s, 0.0, P.motor.R_s * i_q, 0.0, 1e-4, free)
    assert abs(s.theta_m_dot) < math.atanh(0.5) * eps * 1.01


def test_rest_state_with_zero_inputs_stays_at_rest():
    s = EmlaState(x_n=0.5, x=0.5)
    out = step(s, 0.0, 0.0, 0.0, 1e-4, P)
    assert out == s


def _run(dt, T=0.1, wobble=0.0):
    # constant inputs keep the ODE smooth; a time-varying held input would be first order
    # start away from zero speed so the regularised friction stays in its smooth branch
    s, v_d, v_q = static_equilibrium(0.5, 5e3, P)
    s = replace(s, theta_m_dot=100.0, x_dot=P.lead_ratio * 100.0)
    for k in range(int(round(T / dt))):
        s = step(s, 2.0, v_q + 65.0 + wobble * math.sin(40 * k * dt), 5e3, dt, P)
    return s.as_array()


def test_rk4_fourth_order_convergence():
    y1, y2, y3 = _run(1e-4), _run(5e-5), _run(2.5e-5)
    ratio = np.linalg.norm((y1 - y2) / (np.abs(y3) + 1)) / np.linalg.norm((y2 - y3) / (np.abs(y3) + 1))
    assert 10 < ratio < 24


def test_step_is_bit_deterministic():
    np.testing.assert_array_equal(_run(1e-4, 0.02, 5.0), _run(1e-4, 0.02, 5.0))


def test_screw_speed_tracks_rotor():
    s = EmlaState(theta_m_dot=123.0, x=0.5)
    assert screw_speed(s, P) == 123.0 / P.drive.N_gear


def test_global_energy_balance():
    s0, v_d, v_q = static_equilibrium(0.5, 3e4, P)
    audit = EnergyAudit()
    s = s0
    for k in range(1500):
        s = step(s, 5.0 * math.sin(k * 1e-3), v_q + 80.0, 3e4 + 2e3 * math.sin(k * 2e-3), 1e-4, P, audit)
    residual, scale = energy_residual(s0, s, audit, P)
    assert abs(residual) < 1e-5 * scale
    assert all(v >= 0 for k, v in audit.as_dict().items() if k not in ("electrical_input", "output_work", "stiffness_variation"))
    assert set(stored_energy(s, P)) == {"magnetic", "rotor_kinetic", "rod_kinetic", "spring"}


def _steady_motoring(F, v, P_):
    lead = P_.lead_ratio
    w = v / lead
    tau_e = F * lead  # lossless transmission
    i_q = tau_e / P_.torque_constant
    return EmlaState(0.0, i_q, 0.0, w, 0.5 + F / stiffness(0.5, P_.drive), 0.5, v), tau_e


def test_efficiency_lossless_is_one():
    lossless = EmlaParams(
        replace(P.motor, C_m=0.0, tau_C=0.0),
        replace(P.drive, eta_gear=1.0, C_s=0.0, C_act=0.0),
    )
    s, tau_e = _steady_motoring(2e4, 0.05, lossless)
    a_rot, a_rod = mechanical_rates(s, tau_e, 2e4, lossless)
    assert abs(a_rot) < 1e-3 and abs(a_rod) < 1e-6
    assert efficiency(s, tau_e, 2e4, LossModel(R_s=0.0)) == pytest.approx(1.0)
    losses = LossModel.for_motor(P.motor)
    p_out = 2e4 * 0.05
    expected = p_out / (p_out + 1.5 * P.motor.R_s * s.i_q**2)
    assert efficiency(s, tau_e, 2e4, losses) == pytest.approx(expected)


def test_efficiency_undefined_outside_motoring():
    s = EmlaState(theta_m_dot=-10.0, x=0.5, x_dot=-0.01)
    assert efficiency(s, 5.0, 1e3, LossModel()) is None
    assert efficiency(EmlaState(x=0.5), 0.0, 0.0, LossModel()) is None


def test_loss_components_nonnegative():
    lm = LossModel(k_sw=0.5, k_h=0.01, k_e=1e-5, c_1=0.01, c_2=1e-4)
    rng = np.random.default_rng(0)
    for i_d, i_q, w in rng.normal(scale=[10, 50, 300], size=(50, 3)):
        assert all(v >= 0 for v in lm.components(i_d, i_q, w).values())
    with pytest.raises(ValueError):
        LossModel(k_sw=-1.0)


def test_parameter_validation():
    with pytest.raises(ValueError):
        DriveTrainParams(eta_gear=1.2)
    with pytest.raises(ValueError):
        PmsmParams(p=0)
    with pytest.raises(ValueError):
        PmsmParams(R_s=-0.1)
