"""Coupled plant: the rigid-body arm driven by three EMLAs (base, lift, tilt)
and three ideal wrist torque sources.

Arm dynamics use the virtual-power (Kane) form ``M(zeta) zeta_dd + h = Q``
assembled from body Jacobians.  ``M`` and ``h`` are frozen over one control
tick while the actuator states are integrated with inner RK4 steps.  The EMLA
rods move with the arm; the screw force minus rod damping acts on the arm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .controller import Measurement
from .emla import TWO_PI, EmlaParams
from .hdrm import ManipulatorInertia, body_gravity
from .linkage import Pose, propagate_chain, solve_pose
from .rigid_body import RigidBodyModel
from .spatial import force_cross, skew

N_ACT = 3
EMLA_FIELDS = ("i_d", "i_q", "theta_m", "theta_m_dot", "x_n")
N_POWER = 8
POWER_FIELDS = (
    "electrical_in",
    "copper",
    "friction",
    "gear",
    "nut_damping",
    "rod_damping",
    "stiffness_variation",
    "work_on_arm",
)


class PlantInvariantError(RuntimeError):
    pass


@njit(cache=True)
def _plant_rates(y, consts, Minv, h, x0, jac, z0, v_d, v_q, tau_w, audit, dy, w_dots):
    """Write the state derivative into ``dy`` and rotor accelerations into ``w_dots``."""
    Q = np.empty(6)
    for j in range(N_ACT):
        c = consts[j]
        R, Ld, Lq, lam, p, J, C, tC = c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]
        weps, N, log_eta, r2p, lead, Cb, Cact, Ks = c[8], c[9], c[10], c[11], c[12], c[13], c[14], c[15]
        c0, Ls, rot, Peps = c[16], c[17], c[18], c[19]
        base = 12 + 5 * j
        i_d, i_q, w, xn = y[base], y[base + 1], y[base + 3], y[base + 4]
        jx = jac[j]
        x = x0[j] + jx * (y[j] - z0[j])
        xd = jx * y[6 + j]
        lam_d = Ld * i_d + lam
        lam_q = Lq * i_q
        we = p * w
        vd, vq = v_d[j], v_q[j]
        tau_e = 1.5 * p * (lam_d * i_q - lam_q * i_d)
        K = 1.0 / (x * (Ls - x) / (Ls * Ks) + c0 + rot * x)
        xn_dot = lead * w
        delta = xn - x
        F_s = Cb * (xn_dot - xd) + K * delta
        tau_bd = F_s * r2p
        tau_load = math.exp(-math.tanh(tau_bd * w / N / Peps) * log_eta) * tau_bd / N
        tau_f = C * w + tC * math.tanh(w / weps)
        w_dot = (tau_e - tau_f - tau_load) / J
        F_arm = F_s - Cact * xd
        Q[j] = F_arm * jx
        dy[base] = (vd - R * i_d + we * lam_q) / Ld
        dy[base + 1] = (vq - R * i_q - we * lam_d) / Lq
        dy[base + 2] = w
        dy[base + 3] = w_dot
        dy[base + 4] = xn_dot
        w_dots[j] = w_dot
        if audit:
            dK = -K * K * ((Ls - 2.0 * x) / (Ls * Ks) + rot)
            a = 27 + N_POWER * j
            dy[a] = 1.5 * (vd * i_d + vq * i_q)
            dy[a + 1] = 1.5 * R * (i_d * i_d + i_q * i_q)
            dy[a + 2] = tau_f * w
            dy[a + 3] = tau_load * w - tau_bd * w / N
            dy[a + 4] = Cb * (xn_dot - xd) ** 2
            dy[a + 5] = Cact * xd * xd
            dy[a + 6] = -0.5 * dK * xd * delta * delta
            dy[a + 7] = F_arm * xd
    for k in range(3):
        Q[3 + k] = tau_w[k]
    for i in range(6):
        dy[i] = y[6 + i]
        acc = 0.0
        for k in range(6):
            acc += Minv[i, k] * (Q[k] - h[k])
        dy[6 + i] = acc


@njit(cache=True)
def _rk4_ticks(y, step, n, consts, Minv, h, x0, jac, z0, v_d, v_q, tau_w, audit):
    """``n`` fixed RK4 steps of the plant with inputs and arm terms held."""
    k1, k2, k3, k4 = np.empty_like(y), np.empty_like(y), np.empty_like(y), np.empty_like(y)
    w = np.empty(N_ACT)
    for _ in range(n):
        _plant_rates(y, consts, Minv, h, x0, jac, z0, v_d, v_q, tau_w, audit, k1, w)
        _plant_rates(y + 0.5 * step * k1, consts, Minv, h, x0, jac, z0, v_d, v_q, tau_w, audit, k2, w)
        _plant_rates(y + 0.5 * step * k2, consts, Minv, h, x0, jac, z0, v_d, v_q, tau_w, audit, k3, w)
        _plant_rates(y + step * k3, consts, Minv, h, x0, jac, z0, v_d, v_q, tau_w, audit, k4, w)
        y = y + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


@dataclass(frozen=True)
class _EmlaArrays:
    """Per-actuator parameters as arrays for vectorised evaluation."""

    R_s: np.ndarray
    L_d: np.ndarray
    L_q: np.ndarray
    lam: np.ndarray
    p: np.ndarray
    J_eq: np.ndarray
    C_eq: np.ndarray
    tau_C: np.ndarray
    w_eps: np.ndarray
    N: np.ndarray
    eta: np.ndarray
    rho: np.ndarray
    lead: np.ndarray
    C_b: np.ndarray
    C_act: np.ndarray
    K_s: np.ndarray
    K_br: np.ndarray
    K_n: np.ndarray
    K_r: np.ndarray
    K_rot: np.ndarray
    L_s: np.ndarray
    P_eps: np.ndarray

    @classmethod
    def of(cls, params: list) -> "_EmlaArrays":
        def col(f):
            return np.array([f(P) for P in params], dtype=float)

        return cls(
            col(lambda P: P.motor.R_s), col(lambda P: P.motor.L_d), col(lambda P: P.motor.L_q),
            col(lambda P: P.motor.lambda_m), col(lambda P: P.motor.p), col(lambda P: P.J_eq),
            col(lambda P: P.C_eq), col(lambda P: P.motor.tau_C), col(lambda P: P.motor.omega_eps),
            col(lambda P: P.drive.N_gear), col(lambda P: P.drive.eta_gear), col(lambda P: P.drive.rho),
            col(lambda P: P.lead_ratio), col(lambda P: P.drive.C_b), col(lambda P: P.drive.C_act),
            col(lambda P: P.drive.K_s), col(lambda P: P.drive.K_br), col(lambda P: P.drive.K_n),
            col(lambda P: P.drive.K_r), col(lambda P: P.drive.K_rot), col(lambda P: P.drive.L_s),
            col(lambda P: P.drive.power_eps),
        )

    def stiffness(self, x):
        shaft = x * (self.L_s - x) / self.L_s
        c = shaft / self.K_s + 0.5 / self.K_br + 1.0 / self.K_n + 1.0 / self.K_r + self.rho**2 * x / (4 * math.pi**2 * self.K_rot)
        K = 1.0 / c
        dc = (self.L_s - 2.0 * x) / (self.L_s * self.K_s) + self.rho**2 / (4 * math.pi**2 * self.K_rot)
        return K, -K * K * dc


class HdrmPlant:
    """State: joint angles and rates, plus ``(i_d, i_q, theta_m, theta_m_dot, x_n)`` per EMLA."""

    def __init__(
        self,
        geom,
        inertia: ManipulatorInertia,
        emlas: list,
        g_world,
        inner_steps: int = 10,
        audit: bool = True,
    ):
        if len(emlas) != N_ACT:
            raise ValueError("need three EMLA parameter sets")
        self.geom = geom
        self.inertia = inertia
        self.params: list[EmlaParams] = list(emlas)
        self.E = _EmlaArrays.of(self.params)
        E = self.E
        self._consts = np.array(
            list(zip(
                E.R_s, E.L_d, E.L_q, E.lam, E.p, E.J_eq, E.C_eq, E.tau_C, E.w_eps, E.N, np.log(E.eta),
                E.rho / TWO_PI, E.lead, E.C_b, E.C_act, E.K_s,
                0.5 / E.K_br + 1.0 / E.K_n + 1.0 / E.K_r, E.L_s, E.rho**2 / (4 * math.pi**2 * E.K_rot), E.P_eps,
            ))
        )
        self.g = np.asarray(g_world, float)
        self.inner_steps = int(inner_steps)
        self.audit = audit
        self.M_b = {name: RigidBodyModel(p).mass_matrix() for name, p in inertia.bodies.items()}
        self.t = 0.0
        self.zeta = np.zeros(6)
        self.zeta_dot = np.zeros(6)
        self.emla = np.zeros((N_ACT, 5))
        self.energy = np.zeros((N_ACT, N_POWER))
        self.theta_ddot = np.zeros(N_ACT)
        self._frozen = None

    # ----------------------------------------------------------------- arm terms

    def arm_terms(self, pose: Pose, W: dict, zeta_dot, W_ahead: dict | None, eps: float):
        """Generalised mass matrix and bias forces in joint coordinates."""
        M = np.zeros((6, 6))
        h = np.zeros(6)
        for name, Mb in self.M_b.items():
            Wb = W[name]
            V = Wb @ zeta_dot
            c = (W_ahead[name] - Wb) @ zeta_dot / eps if W_ahead is not None else np.zeros(6)
            gb = body_gravity(pose, name, self.g)
            p = self.inertia.bodies[name]
            G = -np.concatenate([p.mass * gb, skew(p.first_moment) @ gb])
            M += Wb.T @ Mb @ Wb
            h += Wb.T @ (Mb @ c + force_cross(V) @ Mb @ V + G)
        return 0.5 * (M + M.T), h

    def prepare(self) -> tuple[Pose, dict]:
        """Solve kinematics at the current state and freeze the arm terms."""
        pose = solve_pose(self.zeta, self.geom)
        W = propagate_chain(pose, np.eye(6))
        speed = float(np.max(np.abs(self.zeta_dot)))
        W_ahead, eps = None, 1.0
        if speed > 0:
            eps = 1e-7 / speed
            W_ahead = propagate_chain(solve_pose(self.zeta + eps * self.zeta_dot, self.geom), np.eye(6))
        M, h = self.arm_terms(pose, W, self.zeta_dot, W_ahead, eps)
        self._frozen = (np.linalg.inv(M), h, pose.actuator_lengths.copy(), pose.actuator_jacobian.copy(), self.zeta[:3].copy())
        return pose, W

    # ----------------------------------------------------------------- EMLA helpers

    def strokes(self, zeta) -> np.ndarray:
        _, _, x0, jac, z0 = self._frozen
        return x0 + jac * (zeta[:3] - z0)

    def screw_forces(self, emla, x, x_dot):
        E = self.E
        K, _ = E.stiffness(x)
        xn_dot = E.lead * emla[:, 3]
        return E.C_b * (xn_dot - x_dot) + K * (emla[:, 4] - x)

    def em_torque(self, emla) -> np.ndarray:
        E = self.E
        lam_d = E.L_d * emla[:, 0] + E.lam
        lam_q = E.L_q * emla[:, 1]
        return 1.5 * E.p * (lam_d * emla[:, 1] - lam_q * emla[:, 0])

    def _rhs(self, y, v_d, v_q, tau_w):
        """State derivative and rotor accelerations."""
        Minv, h, x0, jac, z0 = self._frozen
        y = np.asarray(y, float)
        dy = np.empty_like(y)
        w_dots = np.empty(N_ACT)
        _plant_rates(y, self._consts, Minv, h, x0, jac, z0,
                     np.asarray(v_d, float), np.asarray(v_q, float), np.asarray(tau_w, float),
                     self.audit, dy, w_dots)
        return dy, w_dots

    # ----------------------------------------------------------------- stepping

    def state_vector(self) -> np.ndarray:
        parts = [self.zeta, self.zeta_dot, self.emla.ravel()]
        if self.audit:
            parts.append(self.energy.ravel())
        return np.concatenate(parts)

    def _load(self, y):
        self.zeta = y[0:6].copy()
        self.zeta_dot = y[6:12].copy()
        self.emla = y[12:27].reshape(N_ACT, 5).copy()
        if self.audit:
            self.energy = y[27:].reshape(N_ACT, N_POWER).copy()

    def advance(self, v_d, v_q, tau_w, dt: float) -> None:
        """Integrate one control tick with voltages and wrist torques held."""
        if self._frozen is None:
            self.prepare()
        v_d, v_q, tau_w = (np.asarray(a, float) for a in (v_d, v_q, tau_w))
        Minv, h, x0, jac, z0 = self._frozen
        y = _rk4_ticks(self.state_vector(), dt / self.inner_steps, self.inner_steps, self._consts,
                       Minv, h, x0, jac, z0, v_d, v_q, tau_w, self.audit)
        if not np.all(np.isfinite(y)):
            raise PlantInvariantError(f"non-finite plant state at t={self.t + dt:.4f}")
        self._load(y)
        self.t += dt
        self.theta_ddot = np.array(self._rhs(y, v_d, v_q, tau_w)[1])
        self.check(self.strokes(self.zeta))
        self._frozen = None

    def check(self, x) -> None:
        lo, hi = self.geom.joint_lower, self.geom.joint_upper
        if np.any(self.zeta < lo) or np.any(self.zeta > hi):
            raise PlantInvariantError(f"joint limit violated at t={self.t:.4f}: {np.round(self.zeta, 4)}")
        if np.any(x <= 0) or np.any(x >= self.E.L_s):
            raise PlantInvariantError(f"actuator stroke outside (0, L_s) at t={self.t:.4f}: {x}")

    # ----------------------------------------------------------------- set-up / outputs

    def initialise_static(self, zeta0) -> np.ndarray:
        """Rest at ``zeta0`` with each EMLA holding its gravity load.

        Returns the wrist torques that hold the pose."""
        self.zeta = np.asarray(zeta0, float).copy()
        self.zeta_dot = np.zeros(6)
        pose, W = self.prepare()
        _, h, x, jac, _ = self._frozen
        f = h[:3] / jac
        E = self.E
        K, _ = E.stiffness(x)
        tau_e = f * E.rho / TWO_PI / E.N
        i_q = tau_e / (1.5 * E.p * E.lam)
        self.emla = np.stack([np.zeros(3), i_q, np.zeros(3), np.zeros(3), x + f / K], axis=1)
        self.energy = np.zeros((N_ACT, N_POWER))
        self.theta_ddot = np.zeros(3)
        return h[3:].copy()

    def static_voltages(self) -> tuple[np.ndarray, np.ndarray]:
        return np.zeros(3), self.E.R_s * self.emla[:, 1] + self.E.p * self.emla[:, 3] * self.E.lam

    def measurement(self) -> Measurement:
        return Measurement(
            self.zeta.copy(),
            self.zeta_dot.copy(),
            self.emla[:, 0].copy(),
            self.emla[:, 1].copy(),
            self.emla[:, 3].copy(),
            self.theta_ddot.copy(),
        )

    def actuator_forces(self) -> np.ndarray:
        """Force each EMLA applies to the arm."""
        if self._frozen is None:
            self.prepare()
        x = self.strokes(self.zeta)
        xd = self._frozen[3] * self.zeta_dot[:3]
        return self.screw_forces(self.emla, x, xd) - self.E.C_act * xd

    def stored_energy(self) -> np.ndarray:
        """Magnetic, rotor kinetic and spring energy per EMLA."""
        E = self.E
        i_d, i_q, w, xn = self.emla[:, 0], self.emla[:, 1], self.emla[:, 3], self.emla[:, 4]
        x = self._frozen[2] if self._frozen is not None else solve_pose(self.zeta, self.geom).actuator_lengths
        K, _ = E.stiffness(x)
        return 0.75 * (E.L_d * i_d**2 + E.L_q * i_q**2) + 0.5 * E.J_eq * w**2 + 0.5 * K * (xn - x) ** 2


def energy_balance(plant: HdrmPlant, stored0: np.ndarray) -> np.ndarray:
    """Relative residual per EMLA of input = losses + stored change + work on the arm."""
    e = plant.energy
    stored = plant.stored_energy()
    out = e[:, 1:].sum(axis=1) + (stored - stored0)
    scale = np.maximum(np.abs(e[:, 0]), np.abs(e[:, 1:]).sum(axis=1) + np.abs(stored - stored0))
    return (e[:, 0] - out) / np.maximum(scale, 1e-12)
