"""Closed-chain kinematics of the base / lift / tilt / wrist manipulator.

Angles follow a counter-clockwise-positive convention.  The lift is a
three-bar mechanism (pivot O, actuator base Q, rod end P) and the tilt a
four-bar mechanism whose output is an equivalent three-bar with a
configuration-dependent arm length ``L13``.

Joint-level rates of every mechanism are linear in the sensor rates, so the
per-pose solution stores partial derivatives with respect to the sensor angle
and velocity propagation accepts either one rate vector ``(6,)`` or a stack of
column vectors ``(6, k)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import math

import numpy as np

from .spatial import (
    X_F,
    X_TAU,
    Y_TAU,
    Z_TAU,
    FrameTransform,
    compose,
    rot_x,
    rot_y,
    rot_z,
    to_matrix,
)

CLAMP_TOL = 1e-9
EPS_SING = 1e-4


class WorkspaceError(ValueError):
    """A law-of-cosines/sines argument left its domain (geometry infeasible)."""


class SingularityError(ValueError):
    """A velocity or force map divides by a vanishing sine/tangent."""


def _clamped(value: float, what: str) -> float:
    if value > 1.0 + CLAMP_TOL or value < -1.0 - CLAMP_TOL:
        raise WorkspaceError(f"{what}: argument {value:.12g} outside [-1, 1]")
    return min(1.0, max(-1.0, value))


def safe_arccos(value: float, what: str) -> float:
    return float(np.arccos(_clamped(value, what)))


def safe_arcsin(value: float, what: str) -> float:
    return float(np.arcsin(_clamped(value, what)))


def _guard_sin(value: float, name: str, eps: float) -> None:
    if abs(value) < eps:
        raise SingularityError(f"|sin {name}| = {abs(value):.3e} below {eps:g}")


# --------------------------------------------------------------------------- geometry


@dataclass(frozen=True)
class ThreeBarGeometry:
    """Lift mechanism: arm O-P of length ``L1``, base O-Q of length ``L2``.

    ``base_direction`` is the direction of Q seen from O in the mechanism base
    frame; ``lc`` is the distance from the rod frame origin to the rod-end pin.
    """

    L1: float
    L2: float
    x0: float
    beta1: float
    beta2: float
    lc: float
    base_direction: float

    def __post_init__(self):
        for name in ("L1", "L2", "x0", "lc"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class FourBarGeometry:
    """Tilt mechanism: ground link d1 (A-B), crank d2 (B-C), rocker d4 (A-D),
    coupler d5 (C-D); actuator from E (distance ``L2`` from B) to D."""

    d1: float
    d2: float
    d3_unused: float = 0.0  # placeholder keeps d-index alignment in config files
    d4: float = 1.0
    d5: float = 1.0
    gamma1: float = 0.0
    gamma7: float = 0.0
    L2: float = 1.0
    x0: float = 0.5
    lc: float = 0.1

    def __post_init__(self):
        for name in ("d1", "d2", "d4", "d5", "L2", "x0", "lc"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def base_direction(self) -> float:
        """Direction of E seen from B in the tilt base frame."""
        return self.gamma1 + self.gamma7 - np.pi


# --------------------------------------------------------------------------- three-bar


def lift_angle(zeta2: float, g: ThreeBarGeometry) -> float:
    return (-0.5 * np.pi - g.beta1 - g.beta2) + zeta2


@dataclass(frozen=True)
class TriangleState:
    """Solved actuator triangle plus partials with respect to the sensor angle."""

    q: float
    L1: float
    L2: float
    x0: float
    x: float
    q1: float
    q2: float
    dq: float = 1.0
    dL1: float = 0.0
    dx: float = 0.0
    dq1: float = 0.0
    dq2: float = 0.0

    @property
    def length(self) -> float:
        return self.x + self.x0


def triangle_positions(q: float, L1: float, L2: float, x0: float) -> tuple[float, float, float]:
    s2 = L1 * L1 + L2 * L2 + 2.0 * L1 * L2 * np.cos(q)
    if s2 <= 0.0:
        raise WorkspaceError("actuator length vanishes")
    s = float(np.sqrt(s2))
    q1 = -safe_arccos((L1 * L1 - s * s - L2 * L2) / (-2.0 * s * L2), "angle at actuator base")
    q2 = -safe_arccos((L2 * L2 - s * s - L1 * L1) / (-2.0 * s * L1), "angle at rod end")
    return s - x0, q1, q2


def three_bar_positions(q2: float, g: ThreeBarGeometry) -> tuple[float, float, float]:
    """``(x2, q12, q22)`` from the lift angle by the law of cosines."""
    x, q1, q2_ = triangle_positions(q2, g.L1, g.L2, g.x0)
    if x + g.x0 <= 0:
        raise WorkspaceError("non-positive actuator length")
    return x, q1, q2_


def triangle_rates(q, dq, L1, dL1, L2, x0, x, q1, q2, eps=EPS_SING):
    """Derivatives of ``(x, q1, q2)`` given rates of ``q`` and of the arm length."""
    s = x + x0
    sq, cq = np.sin(q), np.cos(q)
    ds = (dL1 * (L1 + L2 * cq) - L1 * L2 * sq * dq) / s
    _guard_sin(np.sin(q1), "q1", eps)
    _guard_sin(np.sin(q2), "q2", eps)
    if dL1 == 0.0:
        dq1 = -((s - L2 * np.cos(q1)) / (s * L2 * np.sin(q1))) * ds
        dq2 = -((s - L1 * np.cos(q2)) / (s * L1 * np.sin(q2))) * ds
    else:
        c1_dot = (ds * (s * s - L2 * L2 + L1 * L1) - 2.0 * s * L1 * dL1) / (2.0 * s * s * L2)
        num = s * s + L1 * L1 - L2 * L2
        c2_dot = ((2 * s * ds + 2 * L1 * dL1) * (2 * s * L1) - num * (2 * ds * L1 + 2 * s * dL1)) / (
            4 * s * s * L1 * L1
        )
        dq1 = -c1_dot / np.sin(q1)
        dq2 = -c2_dot / np.sin(q2)
    return ds, dq1, dq2


def three_bar_velocities(q2, q2_dot, positions, g: ThreeBarGeometry, eps=EPS_SING):
    """``(x2_dot, q12_dot, q22_dot)`` for a lift angle rate."""
    x, q1, qq2 = positions
    return triangle_rates(q2, q2_dot, g.L1, 0.0, g.L2, g.x0, x, q1, qq2, eps)


def solve_three_bar(zeta2: float, g: ThreeBarGeometry, eps=EPS_SING) -> TriangleState:
    q = lift_angle(zeta2, g)
    x, q1, q2 = three_bar_positions(q, g)
    dx, dq1, dq2 = three_bar_velocities(q, 1.0, (x, q1, q2), g, eps)
    return TriangleState(q, g.L1, g.L2, g.x0, x, q1, q2, 1.0, 0.0, dx, dq1, dq2)


# --------------------------------------------------------------------------- four-bar


@dataclass(frozen=True)
class FourBarState:
    zeta: float
    gamma2: float
    d3: float
    gamma3: float
    gamma4: float
    gamma5: float
    L1: float
    gamma6: float
    q: float
    x: float
    q1: float
    q2: float


def four_bar_solve(zeta3: float, g: FourBarGeometry) -> FourBarState:
    gamma2 = g.gamma1 + (np.pi + zeta3)
    d3_sq = g.d1**2 + g.d2**2 - 2.0 * g.d1 * g.d2 * np.cos(gamma2)
    if d3_sq <= 0:
        raise WorkspaceError("triangle ABC degenerate (d3 = 0)")
    d3 = float(np.sqrt(d3_sq))
    gamma3 = safe_arcsin(g.d2 / d3 * np.sin(gamma2), "triangle ABC")
    gamma4 = safe_arccos((d3**2 + g.d4**2 - g.d5**2) / (2.0 * d3 * g.d4), "triangle ACD")
    gamma5 = gamma3 + gamma4
    L1_sq = g.d1**2 + g.d4**2 - 2.0 * g.d1 * g.d4 * np.cos(gamma5)
    if L1_sq <= 0:
        raise WorkspaceError("triangle ABD degenerate (L13 = 0)")
    L1 = float(np.sqrt(L1_sq))
    gamma6 = safe_arccos((g.d2**2 + L1**2 - g.d5**2) / (2.0 * g.d2 * L1), "triangle BCD")
    q = -g.gamma7 - gamma6 + zeta3
    x, q1, q2 = triangle_positions(q, L1, g.L2, g.x0)
    if x + g.x0 <= 0:
        raise WorkspaceError("non-positive actuator length")
    return FourBarState(zeta3, gamma2, d3, gamma3, gamma4, gamma5, L1, gamma6, q, x, q1, q2)


@dataclass(frozen=True)
class FourBarRates:
    d3: float
    gamma3: float
    gamma4: float
    gamma5: float
    L1: float
    gamma6: float
    q: float
    x: float
    q1: float
    q2: float


def four_bar_rates(st: FourBarState, zeta_dot: float, g: FourBarGeometry, eps=EPS_SING) -> FourBarRates:
    """Chain-rule derivatives of every quantity in the four-bar cascade."""
    g2d = zeta_dot
    d3d = g.d1 * g.d2 * np.sin(st.gamma2) * g2d / st.d3
    u_dot = g.d2 * (np.cos(st.gamma2) * g2d * st.d3 - np.sin(st.gamma2) * d3d) / st.d3**2
    c3 = np.cos(st.gamma3)
    _guard_sin(c3, "(pi/2 - gamma3)", eps)
    g3d = u_dot / c3
    s4 = np.sin(st.gamma4)
    _guard_sin(s4, "gamma4", eps)
    w_dot = d3d * (st.d3**2 - g.d4**2 + g.d5**2) / (2.0 * st.d3**2 * g.d4)
    g4d = -w_dot / s4
    g5d = g3d + g4d
    L1d = g.d1 * g.d4 * np.sin(st.gamma5) * g5d / st.L1
    s6 = np.sin(st.gamma6)
    _guard_sin(s6, "gamma6", eps)
    k_dot = L1d * (st.L1**2 - g.d2**2 + g.d5**2) / (2.0 * g.d2 * st.L1**2)
    g6d = -k_dot / s6
    qd = zeta_dot - g6d
    xd, q1d, q2d = triangle_rates(st.q, qd, st.L1, L1d, g.L2, g.x0, st.x, st.q1, st.q2, eps)
    return FourBarRates(d3d, g3d, g4d, g5d, L1d, g6d, qd, xd, q1d, q2d)


def four_bar_velocities(state: FourBarState, zeta3_dot: float, g: FourBarGeometry, eps=EPS_SING):
    """``(x3_dot, q3_dot, q13_dot, q23_dot)``."""
    r = four_bar_rates(state, zeta3_dot, g, eps)
    return r.x, r.q, r.q1, r.q2


def solve_four_bar(zeta3: float, g: FourBarGeometry, eps=EPS_SING) -> tuple[FourBarState, TriangleState]:
    st = four_bar_solve(zeta3, g)
    r = four_bar_rates(st, 1.0, g, eps)
    tri = TriangleState(st.q, st.L1, g.L2, g.x0, st.x, st.q1, st.q2, r.q, r.L1, r.x, r.q1, r.q2)
    return st, tri


# --------------------------------------------------------------------------- manipulator


@dataclass(frozen=True)
class WristGeometry:
    mount_offset: np.ndarray  # B4 origin in the tilt-arm frame A3 [m]
    mount_angle: float  # rotation of B4 about z relative to A3 [rad]
    pitch_offset: np.ndarray  # C4 origin in A4 [m]
    roll_offset: np.ndarray  # D4 origin in C4 [m]
    tool_offset: np.ndarray  # T4 origin in D4 [m]


@dataclass(frozen=True)
class ManipulatorGeometry:
    base_radius: float  # r_B [m]
    base_stroke_offset: float  # base actuator length at zeta1 = 0 [m]
    lift_mount: np.ndarray  # Bc2 origin in T1 [m]
    lift: ThreeBarGeometry
    tilt_mount: np.ndarray  # Bc3 origin in the lift tip frame [m]
    tilt: FourBarGeometry
    wrist: WristGeometry
    joint_lower: np.ndarray = field(default_factory=lambda: np.full(6, -np.inf))
    joint_upper: np.ndarray = field(default_factory=lambda: np.full(6, np.inf))
    eps_sing: float = EPS_SING

    @classmethod
    def from_dict(cls, d: dict) -> "ManipulatorGeometry":
        lift = ThreeBarGeometry(**d["lift"])
        tilt = FourBarGeometry(**d["tilt"])
        w = d["wrist"]
        wrist = WristGeometry(
            np.asarray(w["mount_offset"], float),
            float(w["mount_angle"]),
            np.asarray(w["pitch_offset"], float),
            np.asarray(w["roll_offset"], float),
            np.asarray(w["tool_offset"], float),
        )
        lim = d.get("joint_limits", {})
        return cls(
            base_radius=float(d["base_radius"]),
            base_stroke_offset=float(d["base_stroke_offset"]),
            lift_mount=np.asarray(d["lift_mount"], float),
            lift=lift,
            tilt_mount=np.asarray(d["tilt_mount"], float),
            tilt=tilt,
            wrist=wrist,
            joint_lower=np.asarray(lim.get("lower", [-np.inf] * 6), float),
            joint_upper=np.asarray(lim.get("upper", [np.inf] * 6), float),
            eps_sing=float(d.get("eps_sing", EPS_SING)),
        )


# Frame names in propagation order.  Bc2 doubles as B12/B22, Bc3 as B13/B23,
# and the lift tip frame T12 (= T22 = Tc2).
FRAMES = (
    "T1", "Bc2", "A2", "T12", "C2", "D2", "T22",
    "Bc3", "A3", "T13", "C3", "D3", "T23",
    "B4", "A4", "C4", "D4", "T4",
)
BODIES = ("T1", "A2", "C2", "D2", "A3", "C3", "D3", "A4", "C4", "D4")


@dataclass
class Pose:
    """Everything configuration-dependent: transforms, mechanism solutions,
    world orientations of all frames and the per-frame 6x6 matrices."""

    zeta: np.ndarray
    lift: TriangleState
    tilt: TriangleState
    tilt_fourbar: FourBarState
    transforms: dict  # child -> (parent, FrameTransform)
    U: dict  # child -> 6x6 of (parent, child)
    world: dict  # frame -> FrameTransform relative to ground
    actuator_lengths: np.ndarray  # x1, x2, x3 [m]
    actuator_jacobian: np.ndarray  # dx_i / dzeta_i [m/rad]


def _tf(R, r=(0.0, 0.0, 0.0)) -> FrameTransform:
    return FrameTransform.unchecked(R, np.asarray(r, dtype=float).reshape(3))


def solve_pose(zeta, geom: ManipulatorGeometry, tilt_state: TriangleState | None = None) -> Pose:
    """Solve every mechanism at ``zeta``.

    ``tilt_state`` replaces the four-bar solution of the tilt triangle; it is
    used to move the tilt as a plain three-bar with a frozen arm length.
    """
    zeta = np.asarray(zeta, dtype=float)
    z1, z2, z3, z4, z5, z6 = zeta
    lift = solve_three_bar(z2, geom.lift, geom.eps_sing)
    fb, tilt = solve_four_bar(z3, geom.tilt, geom.eps_sing)
    if tilt_state is not None:
        tilt = tilt_state
    lg, tg, wg = geom.lift, geom.tilt, geom.wrist
    psi2, psi3 = lg.base_direction, tg.base_direction
    s2, s3 = lift.length, tilt.length
    T = {
        "T1": ("B1", _tf(rot_y(z1))),
        "Bc2": ("T1", _tf(np.eye(3), geom.lift_mount)),
        "A2": ("Bc2", _tf(rot_z(lift.q + psi2 + np.pi))),
        "T12": ("A2", _tf(np.eye(3), (lg.L1, 0.0, 0.0))),
        "C2": ("Bc2", _tf(rot_z(psi2 + np.pi + lift.q1), (lg.L2 * np.cos(psi2), lg.L2 * np.sin(psi2), 0.0))),
        "D2": ("C2", _tf(np.eye(3), (s2 - lg.lc, 0.0, 0.0))),
        "T22": ("D2", _tf(rot_z(lift.q2), (lg.lc, 0.0, 0.0))),
        "Bc3": ("T12", _tf(np.eye(3), geom.tilt_mount)),
        "A3": ("Bc3", _tf(rot_z(tilt.q + psi3 + np.pi))),
        "T13": ("A3", _tf(np.eye(3), (tilt.L1, 0.0, 0.0))),
        "C3": ("Bc3", _tf(rot_z(psi3 + np.pi + tilt.q1), (tg.L2 * np.cos(psi3), tg.L2 * np.sin(psi3), 0.0))),
        "D3": ("C3", _tf(np.eye(3), (s3 - tg.lc, 0.0, 0.0))),
        "T23": ("D3", _tf(rot_z(tilt.q2), (tg.lc, 0.0, 0.0))),
        "B4": ("A3", _tf(rot_z(wg.mount_angle), wg.mount_offset)),
        "A4": ("B4", _tf(rot_x(z4))),
        "C4": ("A4", _tf(rot_z(z5), wg.pitch_offset)),
        "D4": ("C4", _tf(rot_x(z6), wg.roll_offset)),
        "T4": ("D4", _tf(np.eye(3), wg.tool_offset)),
    }
    U = {k: to_matrix(t) for k, (_, t) in T.items()}
    world = {"B1": FrameTransform.identity()}
    for name in FRAMES:
        parent, t = T[name]
        world[name] = compose(world[parent], t)
    lengths = np.array([geom.base_stroke_offset + geom.base_radius * z1, lift.x, tilt.x])
    jac = np.array([geom.base_radius, lift.dx, tilt.dx])
    return Pose(zeta, lift, tilt, fb, T, U, world, lengths, jac)


def mechanism_rates(pose: Pose, zeta_dot) -> dict:
    """Joint-level rates of every mechanism coordinate (linear in ``zeta_dot``)."""
    zd = np.asarray(zeta_dot, dtype=float)
    l, t = pose.lift, pose.tilt
    return {
        "zeta": zd,
        "q2": l.dq * zd[1], "x2": l.dx * zd[1], "q12": l.dq1 * zd[1], "q22": l.dq2 * zd[1],
        "q3": t.dq * zd[2], "L13": t.dL1 * zd[2], "x3": t.dx * zd[2],
        "q13": t.dq1 * zd[2], "q23": t.dq2 * zd[2],
        "x1": pose.actuator_jacobian[0] * zd[0],
    }


def _axis_term(axis: np.ndarray, rate) -> np.ndarray:
    rate = np.asarray(rate, dtype=float)
    return np.multiply.outer(axis, rate) if rate.ndim else axis * rate


def propagate_chain(pose: Pose, zeta_dot, base_velocity=None) -> dict:
    """Spatial velocity of every frame (each expressed in its own frame).

    Both open chains of the lift and of the tilt are evaluated; the dict keys
    ``T12``/``T22`` and ``T13``/``T23`` carry the two tip velocities whose
    agreement is the closure constraint.
    """
    zd = np.asarray(zeta_dot, dtype=float)
    r = mechanism_rates(pose, zd)
    U = pose.U
    shape = (6,) + zd.shape[1:]
    VB1 = np.zeros(shape) if base_velocity is None else np.asarray(base_velocity, float)
    V = {}
    V["T1"] = _axis_term(Y_TAU, zd[0]) + U["T1"].T @ VB1
    V["Bc2"] = U["Bc2"].T @ V["T1"]
    # lift open chain 1
    V["A2"] = _axis_term(Z_TAU, r["q2"]) + U["A2"].T @ V["Bc2"]
    V["T12"] = U["T12"].T @ V["A2"]
    # lift open chain 2
    V["C2"] = _axis_term(Z_TAU, r["q12"]) + U["C2"].T @ V["Bc2"]
    V["D2"] = _axis_term(X_F, r["x2"]) + U["D2"].T @ V["C2"]
    V["T22"] = _axis_term(Z_TAU, r["q22"]) + U["T22"].T @ V["D2"]
    V["Bc3"] = U["Bc3"].T @ V["T12"]
    # tilt open chain 1; the rod-end frame slides along the arm as L13 varies
    V["A3"] = _axis_term(Z_TAU, r["q3"]) + U["A3"].T @ V["Bc3"]
    V["T13"] = _axis_term(X_F, r["L13"]) + U["T13"].T @ V["A3"]
    # tilt open chain 2
    V["C3"] = _axis_term(Z_TAU, r["q13"]) + U["C3"].T @ V["Bc3"]
    V["D3"] = _axis_term(X_F, r["x3"]) + U["D3"].T @ V["C3"]
    V["T23"] = _axis_term(Z_TAU, r["q23"]) + U["T23"].T @ V["D3"]
    # wrist, mounted rigidly on the tilt arm
    V["B4"] = U["B4"].T @ V["A3"]
    V["A4"] = _axis_term(X_TAU, zd[3]) + U["A4"].T @ V["B4"]
    V["C4"] = _axis_term(Z_TAU, zd[4]) + U["C4"].T @ V["A4"]
    V["D4"] = _axis_term(X_TAU, zd[5]) + U["D4"].T @ V["C4"]
    V["T4"] = U["T4"].T @ V["D4"]
    return V


def closure_residuals(V: dict) -> tuple[float, float]:
    return (
        float(np.max(np.abs(V["T12"] - V["T22"]))),
        float(np.max(np.abs(V["T13"] - V["T23"]))),
    )


def world_twist_matrix(pose: Pose, frame: str = "T4") -> np.ndarray:
    R = pose.world[frame].rotation
    W = np.zeros((6, 6))
    W[:3, :3] = R
    W[3:, 3:] = R
    return W


def end_effector_velocity(pose: Pose, zeta_dot) -> np.ndarray:
    """Tool velocity ``[p_dot; omega]`` in ground coordinates."""
    return world_twist_matrix(pose) @ propagate_chain(pose, zeta_dot)["T4"]


def task_jacobian(zeta, geom: ManipulatorGeometry, pose: Pose | None = None) -> np.ndarray:
    pose = solve_pose(zeta, geom) if pose is None else pose
    return world_twist_matrix(pose) @ propagate_chain(pose, np.eye(6))["T4"]


def tool_pose(zeta, geom: ManipulatorGeometry) -> FrameTransform:
    return solve_pose(zeta, geom).world["T4"]


def body_jacobians(pose: Pose) -> dict:
    """``J_b`` with ``V_b = J_b @ zeta_dot`` for every frame."""
    return propagate_chain(pose, np.eye(6))


def rotation_error(R_desired: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Rotation vector of ``R_desired @ R.T`` (ground coordinates)."""
    E = R_desired @ R.T
    c = 0.5 * (E[0, 0] + E[1, 1] + E[2, 2] - 1.0)
    vee = 0.5 * np.array([E[2, 1] - E[1, 2], E[0, 2] - E[2, 0], E[1, 0] - E[0, 1]])
    if c > 0.99:
        # sin(a) = |vee|; series for a / sin(a) near zero
        s = math.sqrt(vee @ vee)
        return vee * (math.asin(min(s, 1.0)) / s if s > 1e-12 else 1.0)
    if c > -0.99:
        a = math.acos(c)
        return vee * (a / math.sin(a))
    from scipy.spatial.transform import Rotation

    return Rotation.from_matrix(E).as_rotvec()
