import numpy as np
import pytest

from emla_vdc.emla import EmlaParams, rhs
from emla_vdc.harness import emla_params
from emla_vdc.plant import HdrmPlant, PlantInvariantError, energy_balance


@pytest.fixture
def plant(cfg, geom, inertia, g_world):
    return HdrmPlant(geom, inertia, emla_params(cfg), g_world)


def test_static_hold_stays_at_rest(plant, home):
    # open loop under fixed voltages the hold is only neutrally stable, so
    # round-off grows into velocities of order 1e-7
    tau_w = plant.initialise_static(home)
    v_d, v_q = plant.static_voltages()
    for _ in range(50):
        plant.prepare()
        plant.advance(v_d, v_q, tau_w, 1e-3)
    np.testing.assert_allclose(plant.zeta, home, atol=1e-8)
    np.testing.assert_allclose(plant.zeta_dot, 0.0, atol=1e-6)
    np.testing.assert_allclose(plant.E.lead * plant.emla[:, 3], 0.0, atol=1e-5)


def test_actuator_equations_match_single_emla_model(plant, home):
    plant.initialise_static(home)
    rng = np.random.default_rng(0)
    plant.emla += rng.normal(scale=[0.5, 2.0, 0.0, 20.0, 1e-5], size=(3, 5))
    plant.zeta_dot = rng.normal(scale=0.05, size=6)
    plant.prepare()
    v_d, v_q = rng.normal(size=3), rng.normal(size=3) * 10
    y = plant.state_vector()
    dy, _ = plant._rhs(y, v_d, v_q, np.zeros(3))
    x = plant.strokes(plant.zeta)
    x_dot = plant._frozen[3] * plant.zeta_dot[:3]
    for j, P in enumerate(plant.params):
        state = np.concatenate([plant.emla[j], [x[j], x_dot[j]]])
        ref = rhs(state, v_d[j], v_q[j], 0.0, P)
        np.testing.assert_allclose(dy[12 + 5 * j : 17 + 5 * j], ref[:5], rtol=1e-12, atol=1e-9)


def test_actuator_force_on_arm_matches_gravity_load(plant, home):
    plant.initialise_static(home)
    _, h, _, jac, _ = plant._frozen
    np.testing.assert_allclose(plant.actuator_forces(), h[:3] / jac, rtol=1e-10)


def test_energy_audit_over_driven_motion(plant, home):
    tau_w = plant.initialise_static(home)
    stored0 = plant.stored_energy()
    v_d, v_q = plant.static_voltages()
    for k in range(200):
        plant.prepare()
        bump = 2.0 * np.sin(2 * np.pi * 5 * k * 1e-3) * np.array([1.0, 1.0, 1.0])
        plant.advance(v_d, v_q + bump, tau_w, 1e-3)
    plant.prepare()
    assert np.max(np.abs(plant.zeta_dot[:3])) > 1e-4
    assert np.all(np.abs(energy_balance(plant, stored0)) < 1e-2)


def test_invariant_violation_raises(plant, home):
    plant.initialise_static(home)
    plant.zeta = plant.geom.joint_upper + 0.1
    with pytest.raises(PlantInvariantError):
        plant.check(plant.strokes(plant.zeta))


def test_measurement_reports_rotor_state(plant, home):
    plant.initialise_static(home)
    m = plant.measurement()
    np.testing.assert_array_equal(m.zeta, home)
    np.testing.assert_array_equal(m.i_q, plant.emla[:, 1])
    assert isinstance(plant.params[0], EmlaParams)
