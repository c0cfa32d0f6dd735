import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from conftest import random_joints
from emla_vdc.linkage import (
    FourBarGeometry,
    SingularityError,
    ThreeBarGeometry,
    TriangleState,
    WorkspaceError,
    closure_residuals,
    end_effector_velocity,
    four_bar_rates,
    four_bar_solve,
    four_bar_velocities,
    lift_angle,
    propagate_chain,
    solve_pose,
    task_jacobian,
    three_bar_positions,
    three_bar_velocities,
    tool_pose,
    triangle_positions,
)
from emla_vdc.spatial import Y_TAU


def unit_lift(**kw):
    base = dict(L1=1.0, L2=1.0, x0=1e-12, beta1=0.0, beta2=0.0, lc=0.1, base_direction=-np.pi / 2)
    base.update(kw)
    return ThreeBarGeometry(**base)


def test_lift_angle_examples():
    assert lift_angle(0.0, unit_lift()) == pytest.approx(-np.pi / 2)
    assert lift_angle(0.0, unit_lift(beta1=-np.pi / 4, beta2=-np.pi / 4)) == pytest.approx(0.0)
    g = unit_lift(beta1=0.2, beta2=0.1)
    assert lift_angle(0.3, g) - lift_angle(0.1, g) == pytest.approx(0.2)


def test_three_bar_positions_hand_cases():
    g = unit_lift()
    x, _, _ = three_bar_positions(0.0, g)
    assert x == pytest.approx(2.0)
    x, q1, q2 = three_bar_positions(np.pi / 2, g)
    assert x == pytest.approx(np.sqrt(2))
    assert q1 == pytest.approx(-np.pi / 4)
    assert q2 == pytest.approx(-np.pi / 4)


def test_three_bar_triangle_angle_sum(geom):
    g = geom.lift
    for q in np.linspace(-1.6, -0.4, 9):
        _, q1, q2 = three_bar_positions(q, g)
        # interior angles: at O is pi + q, at Q is -q1, at P is -q2
        assert (np.pi + q) + (-q1) + (-q2) == pytest.approx(np.pi, abs=1e-12)


def test_workspace_violation_raises():
    with pytest.raises(WorkspaceError):
        triangle_positions(np.pi, 1.0, 1.0, 0.0)


def test_three_bar_velocities_match_finite_difference(geom):
    g, h = geom.lift, 1e-6
    for q in np.linspace(-1.6, -0.4, 7):
        pos = three_bar_positions(q, g)
        analytic = np.array(three_bar_velocities(q, 1.0, pos, g))
        fd = (np.array(three_bar_positions(q + h, g)) - np.array(three_bar_positions(q - h, g))) / (2 * h)
        np.testing.assert_allclose(analytic, fd, rtol=1e-6)
        assert three_bar_velocities(q, 0.0, pos, g) == (0.0, 0.0, 0.0)
        # sin q < 0 on (-pi, 0) => stroke grows with q
        assert np.sign(analytic[0]) == -np.sign(np.sin(q))


def test_three_bar_singular_configuration_raises():
    g = unit_lift()
    pos = three_bar_positions(-1e-6, g)
    with pytest.raises(SingularityError):
        three_bar_velocities(-1e-6, 1.0, pos, g)


def test_four_bar_right_triangle():
    g = FourBarGeometry(d1=1.0, d2=1.0, d4=1.2, d5=1.0, gamma1=0.0, gamma7=0.0, L2=1.0, x0=0.5, lc=0.1)
    st = four_bar_solve(-np.pi / 2, g)
    assert st.gamma2 == pytest.approx(np.pi / 2)
    assert st.d3 == pytest.approx(np.sqrt(2))
    assert st.gamma3 == pytest.approx(np.pi / 4)


def test_four_bar_equilateral_gamma4():
    # d3 = d4 = d5 = sqrt(2) when d1 = d2 = 1 and gamma2 = pi/2
    r2 = np.sqrt(2)
    g = FourBarGeometry(d1=1.0, d2=1.0, d4=r2, d5=r2, gamma1=0.0, gamma7=0.0, L2=3.0, x0=0.5, lc=0.1)
    st = four_bar_solve(-np.pi / 2, g)
    assert st.gamma4 == pytest.approx(np.pi / 3)


def test_four_bar_two_triangle_paths_agree(geom):
    g = geom.tilt
    for z in np.linspace(geom.joint_lower[2], geom.joint_upper[2], 11):
        st = four_bar_solve(z, g)
        A = np.array([-g.d1, 0.0])
        C = g.d2 * np.array([np.cos(g.gamma1 + z), np.sin(g.gamma1 + z)])
        D_via_A = A + g.d4 * np.array([np.cos(st.gamma5), -np.sin(st.gamma5)])
        ang = g.gamma1 + z - st.gamma6
        D_via_B = st.L1 * np.array([np.cos(ang), np.sin(ang)])
        assert np.linalg.norm(D_via_A - D_via_B) < 1e-9
        assert np.linalg.norm(D_via_A - C) == pytest.approx(g.d5, abs=1e-9)


def test_four_bar_rates_match_finite_difference(geom):
    g, h = geom.tilt, 1e-6
    fields = ("d3", "gamma3", "gamma4", "gamma5", "L1", "gamma6", "q", "x", "q1", "q2")
    for z in np.linspace(geom.joint_lower[2], geom.joint_upper[2], 7):
        r = four_bar_rates(four_bar_solve(z, g), 1.0, g)
        sp, sm = four_bar_solve(z + h, g), four_bar_solve(z - h, g)
        for name in fields:
            fd = (getattr(sp, name) - getattr(sm, name)) / (2 * h)
            assert getattr(r, name) == pytest.approx(fd, rel=1e-6, abs=1e-9), name
        assert four_bar_velocities(four_bar_solve(z, g), 0.0, g) == (0.0, 0.0, 0.0, 0.0)


def test_gamma3_chain_rule_spot_check(geom):
    g, z = geom.tilt, -1.2
    st = four_bar_solve(z, g)
    # single-triangle oracle: gamma3 = atan2(d2 sin g2, d1 - d2 cos g2) for the acute branch
    f = lambda zz: np.arctan2(g.d2 * np.sin(g.gamma1 + np.pi + zz), g.d1 - g.d2 * np.cos(g.gamma1 + np.pi + zz))
    assert f(z) == pytest.approx(st.gamma3, abs=1e-12)
    h = 1e-6
    assert four_bar_rates(st, 1.0, g).gamma3 == pytest.approx((f(z + h) - f(z - h)) / (2 * h), rel=1e-6)


def test_propagation_zero_and_base_only(geom, home):
    pose = solve_pose(home, geom)
    V = propagate_chain(pose, np.zeros(6))
    assert all(not np.any(v) for v in V.values())
    V = propagate_chain(pose, np.array([0.7, 0, 0, 0, 0, 0]))
    np.testing.assert_allclose(V["T1"], 0.7 * Y_TAU)


def test_closure_on_random_states(geom):
    rng = np.random.default_rng(11)
    for z in random_joints(geom, rng, 25):
        pose = solve_pose(z, geom)
        lift_res, tilt_res = closure_residuals(propagate_chain(pose, rng.normal(size=6)))
        assert lift_res < 1e-9 and tilt_res < 1e-9


def test_tilt_closure_needs_the_sliding_term(geom, home):
    pose = solve_pose(home, geom)
    V = propagate_chain(pose, np.array([0, 0, 1.0, 0, 0, 0]))
    without_slide = pose.U["T13"].T @ V["A3"]
    assert np.max(np.abs(without_slide - V["T23"])) > 1e-3


def test_stacked_rates_equal_individual_columns(geom, home):
    pose = solve_pose(home, geom)
    Z = np.random.default_rng(3).normal(size=(6, 4))
    stacked = propagate_chain(pose, Z)
    for k in range(4):
        single = propagate_chain(pose, Z[:, k])
        for name, v in single.items():
            np.testing.assert_allclose(stacked[name][:, k], v, atol=1e-12)


def test_task_jacobian_against_chain_and_columns(geom):
    rng = np.random.default_rng(5)
    for z in random_joints(geom, rng, 20):
        pose = solve_pose(z, geom)
        J = task_jacobian(z, geom, pose)
        zd = rng.normal(size=6)
        v = end_effector_velocity(pose, zd)
        assert np.linalg.norm(J @ zd - v) <= 1e-8 * max(1.0, np.linalg.norm(v))
    e3 = np.eye(6)[3]
    np.testing.assert_allclose(J[:, 3], end_effector_velocity(pose, e3), atol=1e-14)


def test_task_jacobian_matches_finite_difference_of_forward_pose(geom, home):
    h = 1e-6
    J = task_jacobian(home, geom)
    Jfd = np.zeros((6, 6))
    for k in range(6):
        e = np.zeros(6)
        e[k] = h
        Tp, Tm = tool_pose(home + e, geom), tool_pose(home - e, geom)
        Jfd[:3, k] = (Tp.offset - Tm.offset) / (2 * h)
        Jfd[3:, k] = Rotation.from_matrix(Tp.rotation @ Tm.rotation.T).as_rotvec() / (2 * h)
    assert np.max(np.abs(J - Jfd)) <= 1e-5 * np.max(np.abs(J))


def test_actuator_lengths_positive_in_workspace(geom):
    rng = np.random.default_rng(8)
    for z in random_joints(geom, rng, 200):
        pose = solve_pose(z, geom)
        assert pose.lift.length > 0 and pose.tilt.length > 0


def test_tilt_override_replaces_four_bar_solution(geom, home):
    pose = solve_pose(home, geom)
    t = pose.tilt
    x, q1, q2 = triangle_positions(t.q + 0.01, t.L1, t.L2, t.x0)
    moved = solve_pose(home, geom, TriangleState(t.q + 0.01, t.L1, t.L2, t.x0, x, q1, q2))
    assert moved.tilt.x == x
    assert not np.allclose(moved.world["A3"].rotation, pose.world["A3"].rotation)
