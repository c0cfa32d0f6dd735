"""Wrist-to-base force/moment recursion and the three actuator line forces.

The same recursion serves the plant (actual net forces) and the controller
(required net forces); callers pass a mapping ``frame -> net force`` where
missing frames count as massless.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linkage import EPS_SING, Pose, SingularityError, TriangleState
from .rigid_body import InertialParameters, RigidBodyModel, net_force
from .spatial import X_F, X_TAU, Y_F, Y_TAU, Z_TAU

_ZERO6 = np.zeros(6)


def _net(net: dict, name: str) -> np.ndarray:
    return np.asarray(net.get(name, _ZERO6), dtype=float)


@dataclass(frozen=True)
class ActuatorForces:
    f1: float
    f2: float
    f3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.f1, self.f2, self.f3])


@dataclass
class ForceSolution:
    frames: dict  # frame -> propagated force/moment vector
    actuator: ActuatorForces
    wrist_torques: np.ndarray  # joint torques of the three wrist axes


# --------------------------------------------------------------------------- recursion


def wrist_propagate(F_T4, net: dict, pose: Pose, out: dict | None = None) -> np.ndarray:
    U = pose.U
    out = {} if out is None else out
    out["T4"] = np.asarray(F_T4, dtype=float)
    out["D4"] = _net(net, "D4") + U["T4"] @ out["T4"]
    out["C4"] = _net(net, "C4") + U["D4"] @ out["D4"]
    out["A4"] = _net(net, "A4") + U["C4"] @ out["C4"]
    out["B4"] = _net(net, "B4") + U["A4"] @ out["A4"]
    return out["B4"]


def _closed_mechanism_base(net, U, arm, cyl, rod, tip_U, F_tip, base_name):
    return (
        _net(net, base_name)
        + U[arm] @ _net(net, arm)
        + U[cyl] @ _net(net, cyl)
        + U[cyl] @ U[rod] @ _net(net, rod)
        + U[arm] @ tip_U @ F_tip
    )


def tilt_propagate(F_B4, net: dict, pose: Pose) -> np.ndarray:
    """Force/moment at the tilt base from the wrist load and tilt net forces."""
    return _closed_mechanism_base(net, pose.U, "A3", "C3", "D3", pose.U["B4"], np.asarray(F_B4, float), "B13")


def lift_propagate(F_Bc3, net: dict, pose: Pose) -> np.ndarray:
    tip_U = pose.U["T12"] @ pose.U["Bc3"]
    return _closed_mechanism_base(net, pose.U, "A2", "C2", "D2", tip_U, np.asarray(F_Bc3, float), "B12")


def _actuator_force(F_arm_total, F_cyl, F_rod, tri: TriangleState, L1: float, lc: float, eps: float, tag: str):
    s = tri.length
    if s <= 0:
        raise SingularityError(f"actuator length {s} not positive")
    sin_q2 = np.sin(tri.q2)
    tan_q2 = np.tan(tri.q2)
    if abs(sin_q2) < eps or abs(tan_q2) < eps:
        raise SingularityError(f"|sin/tan q2{tag}| below {eps:g}")
    return float(
        X_F @ F_rod
        - (Z_TAU @ F_arm_total) / (L1 * sin_q2)
        - (Z_TAU @ (F_cyl + F_rod) + (Y_F @ F_rod) * (s - lc)) / (s * tan_q2)
    )


def tilt_actuator_force(net: dict, F_B4, pose: Pose, lc3: float, eps: float = EPS_SING) -> float:
    arm = _net(net, "A3") + pose.U["B4"] @ np.asarray(F_B4, float)
    return _actuator_force(arm, _net(net, "C3"), _net(net, "D3"), pose.tilt, pose.tilt.L1, lc3, eps, "3")


def tilt_actuator_force_exact(net: dict, F_B4, pose: Pose, eps: float = EPS_SING) -> float:
    """Tilt line force from virtual power along the true four-bar motion.

    Reduces to :func:`tilt_actuator_force` when the equivalent arm length is
    constant; otherwise it accounts for the power absorbed by the arm-length
    variation that the closed form ignores.
    """
    t = pose.tilt
    if abs(t.dx) < eps:
        raise SingularityError("tilt actuator rate vanishes (dx3/dzeta3 ~ 0)")
    arm = _net(net, "A3") + pose.U["B4"] @ np.asarray(F_B4, float)
    rod = _net(net, "D3")
    rod_twist = X_F * t.dx + pose.U["D3"].T @ Z_TAU * t.dq1
    power = (Z_TAU @ arm) * t.dq + (Z_TAU @ _net(net, "C3")) * t.dq1 + rod @ rod_twist
    return float(power / t.dx)


def lift_actuator_force(net: dict, F_Bc3, pose: Pose, lc2: float, eps: float = EPS_SING) -> float:
    tip_U = pose.U["T12"] @ pose.U["Bc3"]
    arm = _net(net, "A2") + tip_U @ np.asarray(F_Bc3, float)
    return _actuator_force(arm, _net(net, "C2"), _net(net, "D2"), pose.lift, pose.lift.L1, lc2, eps, "2")


def base_force(F_Bc2, net_T1, pose: Pose, r_B: float) -> tuple[np.ndarray, float]:
    if r_B <= 0:
        raise ValueError("base radius must be positive")
    F_T1 = np.asarray(net_T1, float) + pose.U["Bc2"] @ np.asarray(F_Bc2, float)
    return F_T1, float(Y_TAU @ F_T1) / r_B


def wrist_joint_torques(frames: dict) -> np.ndarray:
    """Torques about the wrist axes: x of A4, z of C4, x of D4."""
    return np.array([X_TAU @ frames["A4"], Z_TAU @ frames["C4"], X_TAU @ frames["D4"]])


TILT_FORCE_MODELS = ("exact", "rigid_arm")


def propagate_forces(pose: Pose, net: dict, F_T4, geom, tilt_model: str = "exact") -> ForceSolution:
    """Full wrist-to-base recursion; ``geom`` is a :class:`ManipulatorGeometry`.

    ``tilt_model="rigid_arm"`` uses the closed-form tilt force that treats the
    equivalent arm length as constant; ``"exact"`` uses virtual power.
    """
    if tilt_model not in TILT_FORCE_MODELS:
        raise ValueError(f"tilt_model must be one of {TILT_FORCE_MODELS}")
    frames: dict = {}
    F_B4 = wrist_propagate(F_T4, net, pose, frames)
    frames["Bc3"] = tilt_propagate(F_B4, net, pose)
    if tilt_model == "exact":
        f3 = tilt_actuator_force_exact(net, F_B4, pose, geom.eps_sing)
    else:
        f3 = tilt_actuator_force(net, F_B4, pose, geom.tilt.lc, geom.eps_sing)
    frames["Bc2"] = lift_propagate(frames["Bc3"], net, pose)
    f2 = lift_actuator_force(net, frames["Bc3"], pose, geom.lift.lc, geom.eps_sing)
    frames["T1"], f1 = base_force(frames["Bc2"], _net(net, "T1"), pose, geom.base_radius)
    return ForceSolution(frames, ActuatorForces(f1, f2, f3), wrist_joint_torques(frames))


# --------------------------------------------------------------------------- body models


@dataclass(frozen=True)
class ManipulatorInertia:
    """Inertial parameters of every rigid body, keyed by body frame name."""

    bodies: dict

    @classmethod
    def from_dict(cls, d: dict) -> "ManipulatorInertia":
        bodies = {}
        for name, spec in d.items():
            I = spec.get("inertia_com", [0.0, 0.0, 0.0])
            I = np.diag(I) if np.ndim(I) == 1 else np.asarray(I, float)
            bodies[name] = InertialParameters.from_com(float(spec["mass"]), spec.get("com", [0, 0, 0]), I)
        return cls(bodies)

    def scaled(self, factor: float) -> "ManipulatorInertia":
        return ManipulatorInertia({k: p.scaled(factor) for k, p in self.bodies.items()})

    def with_payload(self, body: str, mass: float, com) -> "ManipulatorInertia":
        """Add a point mass rigidly attached to ``body``."""
        extra = InertialParameters.from_com(mass, com, np.zeros((3, 3)))
        p = self.bodies[body]
        merged = InertialParameters.from_vector(p.vector() + extra.vector())
        return ManipulatorInertia({**self.bodies, body: merged})


def body_gravity(pose: Pose, name: str, g_world) -> np.ndarray:
    return pose.world[name].rotation.T @ np.asarray(g_world, float)


def net_forces(pose: Pose, inertia: ManipulatorInertia, V: dict, dV: dict, g_world) -> dict:
    out = {}
    for name, p in inertia.bodies.items():
        model = RigidBodyModel(p, body_gravity(pose, name, g_world))
        out[name] = net_force(model, V.get(name, _ZERO6), dV.get(name, _ZERO6))
    return out


def potential_energy(pose: Pose, inertia: ManipulatorInertia, g_world) -> float:
    g = np.asarray(g_world, float)
    total = 0.0
    for name, p in inertia.bodies.items():
        w = pose.world[name]
        com_world = w.offset * p.mass + w.rotation @ p.first_moment
        total -= float(g @ com_world)
    return total
