"""Hierarchical controller: task-level CLIK, required velocity and force
chains through the mechanisms, per-actuator dq voltage law, the gain-condition
verifier and the accompanying-function monitor.

Tick order: kinematics, CLIK, required velocities, adaptation update,
required forces, required currents, voltages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .emla import EmlaParams, PmsmParams, flux_linkages
from .hdrm import ManipulatorInertia, body_gravity, propagate_forces
from .linkage import BODIES, Pose, SingularityError, propagate_chain, rotation_error, world_twist_matrix
from .rigid_body import (
    AdaptationState,
    RigidBodyModel,
    bregman_divergence,
    nal_step,
    regressor,
    s_matrix,
    theta_to_pseudo,
)
from .surrogate import HybridModel, physics_force

SIGMA_DAMP = 1e-3
COND_MAX = 1e8
VARIANTS = ("adaptive", "modular", "pd")


class GainError(ValueError):
    pass


# --------------------------------------------------------------------------- gains


@dataclass(frozen=True)
class ActuatorGains:
    K_i: float  # d-axis current feedback [V/A]
    K_f: float  # force feedback [V/N]
    K_v: float  # velocity feedback [V s/m]
    lambda_i: float  # d-axis required-current rate [1/s]
    K2: float  # d-current weight of the accompanying function
    K1: float | None = None  # force-error weight; derived from K_v when None

    def __post_init__(self):
        for name in ("K_i", "K_f", "K_v", "lambda_i", "K2"):
            if not getattr(self, name) > 0:
                raise GainError(f"{name} must be positive")
        if self.K1 is not None and not self.K1 > 0:
            raise GainError("K1 must be positive")

    def k1(self, beta1: float, L_q: float) -> float:
        return self.K1 if self.K1 is not None else L_q / (beta1 * self.K_v)


@dataclass(frozen=True)
class GainSet:
    Lambda: np.ndarray  # 6x6 task-space CLIK gain
    K_A: dict  # body -> 6x6 velocity-error gain
    actuators: tuple  # three ActuatorGains
    lambda_joint: float = 10.0  # joint-space required-velocity gain [1/s]
    gamma: float = 100.0  # adaptation gain

    def __post_init__(self):
        object.__setattr__(self, "Lambda", np.asarray(self.Lambda, float))
        _require_pd(self.Lambda, "Lambda")
        for name, K in self.K_A.items():
            _require_pd(np.asarray(K, float), f"K_A[{name}]")
        if len(self.actuators) != 3:
            raise GainError("need gains for exactly three actuators")
        if self.lambda_joint <= 0 or self.gamma <= 0:
            raise GainError("lambda_joint and gamma must be positive")

    @classmethod
    def from_dict(cls, d: dict, inertia: ManipulatorInertia) -> "GainSet":
        """``K_A`` is ``kappa * M_b + floor * I`` per body unless given explicitly."""
        Lam = d.get("Lambda", 10.0)
        Lam = np.diag(Lam) if np.ndim(Lam) == 1 else (Lam * np.eye(6) if np.ndim(Lam) == 0 else np.asarray(Lam))
        kappa = float(d.get("kappa", 20.0))
        floor = float(d.get("K_A_floor", 1.0))
        K_A = {}
        for name, p in inertia.bodies.items():
            M = RigidBodyModel(p).mass_matrix()
            K_A[name] = kappa * M + floor * np.eye(6)
        for name, K in (d.get("K_A") or {}).items():
            K_A[name] = np.asarray(K, float)
        act = d.get("actuators", {})
        if isinstance(act, dict):
            act = [act] * 3
        acts = tuple(ActuatorGains(**a) for a in act)
        return cls(Lam, K_A, acts, float(d.get("lambda_joint", 10.0)), float(d.get("gamma", 100.0)))

    def with_actuator(self, j: int, **changes) -> "GainSet":
        acts = list(self.actuators)
        acts[j] = replace(acts[j], **changes)
        return replace(self, actuators=tuple(acts))


def _require_pd(K: np.ndarray, name: str) -> None:
    try:
        np.linalg.cholesky(0.5 * (K + K.T))
    except np.linalg.LinAlgError as exc:
        raise GainError(f"{name} must be positive definite") from exc


# --------------------------------------------------------------------------- task level


def task_error(p_desired, R_desired, p, R) -> np.ndarray:
    """Position error and rotation-vector orientation error, ground frame."""
    return np.concatenate([np.asarray(p_desired, float) - p, rotation_error(R_desired, R)])


def clik(J, Pi_dot_d, Pi_d, Pi, Lambda, error=None, sigma_damp: float = SIGMA_DAMP, cond_max: float = COND_MAX):
    """Required joint rates ``J^-1 (Pi_dot_d + Lambda (Pi_d - Pi))``.

    ``error`` overrides ``Pi_d - Pi`` (orientation errors are not differences).
    Damped least squares takes over when the smallest singular value drops
    below ``sigma_damp``.
    """
    J = np.asarray(J, float)
    e = np.asarray(Pi_d, float) - np.asarray(Pi, float) if error is None else np.asarray(error, float)
    rhs = np.asarray(Pi_dot_d, float) + np.asarray(Lambda, float) @ e
    U, s, Vt = np.linalg.svd(J)
    if s[-1] == 0 or s[0] / s[-1] > cond_max:
        raise SingularityError(f"task Jacobian condition number above {cond_max:g}")
    if s[-1] >= sigma_damp:
        return np.linalg.solve(J, rhs)
    mu2 = sigma_damp**2 - s[-1] ** 2
    return Vt.T @ ((s / (s**2 + mu2)) * (U.T @ rhs))


def required_joint_velocity(qd_dot, qd, q, lam):
    if np.any(np.asarray(lam) <= 0):
        raise GainError("lambda must be positive")
    return np.asarray(qd_dot, float) + np.asarray(lam, float) * (np.asarray(qd, float) - np.asarray(q, float))


def required_velocity_chain(theta_dot_r, pose: Pose) -> dict:
    """Required spatial velocities of every frame plus the required actuator rates."""
    V = propagate_chain(pose, theta_dot_r)
    V["actuators"] = pose.actuator_jacobian * np.asarray(theta_dot_r, float)[:3]
    return V


@dataclass
class RequiredForces:
    net: dict
    feedback: dict
    regressors: dict
    actuator: np.ndarray  # f_r1..3
    wrist_torques: np.ndarray


def required_force_chain(
    pose: Pose,
    V_r: dict,
    dV_r: dict,
    V: dict,
    theta_hat: dict,
    K_A: dict,
    F_T4r,
    g_world,
    geom,
    use_model: bool = True,
    tilt_model: str = "exact",
    regressors: dict | None = None,
) -> RequiredForces:
    """Required net force per body (``Y theta_hat + K_A (V_r - V)``), then the
    wrist-to-base recursion with required quantities.

    ``regressors`` supplies precomputed ``Y(dV_r, V_r)`` per body."""
    net, fb, Ys = {}, {}, {}
    for name in BODIES:
        if name not in theta_hat and name not in K_A:
            continue
        err = V_r[name] - V[name]
        fb[name] = np.asarray(K_A[name]) @ err if name in K_A else np.zeros(6)
        total = fb[name].copy()
        if use_model and name in theta_hat:
            Y = regressors[name] if regressors else regressor(dV_r[name], V_r[name], body_gravity(pose, name, g_world))
            Ys[name] = Y
            total += Y @ theta_hat[name]
        net[name] = total
    sol = propagate_forces(pose, net, F_T4r, geom, tilt_model)
    return RequiredForces(net, fb, Ys, sol.actuator.as_array(), sol.wrist_torques)


# --------------------------------------------------------------------------- actuator level


def betas(P: EmlaParams, alpha: float, i_d: float, i_q: float) -> tuple[float, float]:
    lam_d, lam_q = flux_linkages(i_d, i_q, P.motor)
    k = (1.0 - alpha) / P.lead_ratio * 1.5 * P.motor.p
    return k * lam_d, k * lam_q


def hybrid_force(i_d, i_q, theta_dot, theta_ddot, P: EmlaParams, alpha: float, F_hat: float, inertia: float) -> float:
    """``(1 - alpha) F_phys(tau_e, theta_dot, theta_ddot) + alpha F_hat``."""
    lam_d, lam_q = flux_linkages(i_d, i_q, P.motor)
    tau_e = 1.5 * P.motor.p * (lam_d * i_q - lam_q * i_d)
    return (1.0 - alpha) * float(physics_force(theta_dot, tau_e, P, theta_ddot, inertia)) + alpha * F_hat


def required_d_current(i_d: float, lambda_i: float, i_dr_prev: float = 0.0, dt: float = 0.0, i_dd: float = 0.0, di_dd: float = 0.0):
    """``(i_dr, di_dr/dt)`` with ``di_dr/dt = di_dd/dt + lambda_i (i_dd - i_d)``;
    ``i_dr`` is the controller state advanced by ``dt``."""
    if lambda_i <= 0:
        raise GainError("lambda_i must be positive")
    rate = di_dd + lambda_i * (i_dd - i_d)
    return i_dr_prev + dt * rate, rate


def required_q_current(F_r, i_d, i_q, i_dr, theta_dot, theta_ddot, P: EmlaParams, alpha: float, F_hat: float, inertia: float) -> float:
    """Invert the hybrid required-force expression for ``i_qr``."""
    if alpha >= 1.0:
        raise ValueError("alpha = 1 leaves no physics channel to realise the force command")
    lam_d, lam_q = flux_linkages(i_d, i_q, P.motor)
    if abs(lam_d) < 1e-12:
        raise ValueError("d-axis flux linkage vanishes; q current cannot be solved")
    M = P.motor
    friction = M.C_m * theta_dot + M.tau_C * math.tanh(theta_dot / M.omega_eps)
    tau_r = (F_r - alpha * F_hat) * P.lead_ratio / (1.0 - alpha) + inertia * theta_ddot + friction
    return (tau_r / (1.5 * M.p) + lam_q * i_dr) / lam_d


def low_level_voltages(
    i_d, i_q, theta_dot, i_dr, di_dr, di_qr, F_r, F_hyb, x_dot_r, x_dot, gains: ActuatorGains, motor: PmsmParams
) -> tuple[float, float]:
    lam_d, lam_q = flux_linkages(i_d, i_q, motor)
    we = motor.p * theta_dot
    v_d = motor.R_s * i_d + motor.L_d * di_dr - we * lam_q + gains.K_i * (i_dr - i_d)
    v_q = motor.R_s * i_q + motor.L_q * di_qr + we * lam_d + gains.K_f * (F_r - F_hyb) + gains.K_v * (x_dot_r - x_dot)
    return float(v_d), float(v_q)


# --------------------------------------------------------------------------- stability


CONDITIONS = ("force_vs_d_current", "d_current_weight", "force_weight_definition")


@dataclass(frozen=True)
class GainCheck:
    margins: tuple  # one per condition; >= 0 means satisfied (the third must be ~0)
    passed: bool
    failed: tuple

    def to_dict(self) -> dict:
        return {"margins": dict(zip(CONDITIONS, self.margins)), "passed": self.passed, "failed": list(self.failed)}


def gain_condition_check(g: ActuatorGains, beta1: float, beta2: float, L_d: float, L_q: float, rtol: float = 1e-9) -> GainCheck:
    """Actuator stability conditions; ``|beta2|`` bounds the cross term."""
    b2 = abs(beta2)
    K1 = g.k1(beta1, L_q)
    m1 = beta1 * g.K_f / L_q - b2 * g.K_i / (2.0 * L_d)
    m2 = g.K2 - K1 * b2 / 2.0
    K1_def = L_q / (beta1 * g.K_v) if beta1 != 0 else math.inf
    m3 = K1 - K1_def
    tol1 = rtol * max(beta1 * g.K_f / L_q, b2 * g.K_i / (2.0 * L_d), 1e-300)
    tol2 = rtol * max(g.K2, K1 * b2 / 2.0, 1e-300)
    ok = (m1 >= -tol1, m2 >= -tol2, math.isfinite(K1_def) and abs(m3) <= rtol * max(K1, K1_def))
    failed = tuple(c for c, good in zip(CONDITIONS, ok) if not good)
    return GainCheck((m1, m2, m3), not failed, failed)


def rigid_body_nu(V_err: dict, mass_matrices: dict, bregman: float = 0.0, gamma: float = 0.0) -> float:
    kin = sum(0.5 * float(e @ mass_matrices[k] @ e) for k, e in V_err.items())
    return kin + gamma * bregman


def actuator_nu(e_F: float, e_d: float, K1: float, K2: float) -> float:
    return 0.5 * K1 * e_F**2 + 0.5 * K2 * e_d**2


def lyapunov_monitor(records, gains: GainSet, mass_matrices: dict, K1) -> dict:
    """Accompanying-function series from per-tick records.

    Each record carries ``V_err`` (body -> 6-vector), ``bregman`` (summed
    divergence), ``e_F`` and ``e_d`` (3 each).  ``K1`` holds the force-error
    weights of the three actuators.
    """
    nu1, nua = [], []
    for r in records:
        nu1.append(rigid_body_nu(r["V_err"], mass_matrices, r.get("bregman", 0.0), gains.gamma))
        nua.append([actuator_nu(r["e_F"][j], r["e_d"][j], K1[j], gains.actuators[j].K2) for j in range(len(r["e_F"]))])
    nu1, nua = np.array(nu1), np.array(nua)
    total = nu1 + nua.sum(axis=1) if nua.size else nu1
    return {"nu1": nu1, "nu_a": nua, "nu": total, "dnu": np.diff(total)}


# --------------------------------------------------------------------------- stateful controller


class FilteredDerivative:
    """Backward difference followed by a first-order low-pass."""

    def __init__(self, dt: float, cutoff_hz: float | None, shape=()):
        self.dt = dt
        self.a = 1.0 if not cutoff_hz else 1.0 - math.exp(-2.0 * math.pi * cutoff_hz * dt)
        self.prev = None
        self.value = np.zeros(shape)

    def update(self, x):
        x = np.asarray(x, float)
        if self.prev is not None:
            raw = (x - self.prev) / self.dt
            self.value = self.value + self.a * (raw - self.value)
        self.prev = x.copy()
        return self.value


@dataclass
class TaskReference:
    p: np.ndarray
    p_dot: np.ndarray
    R: np.ndarray
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass
class Measurement:
    zeta: np.ndarray
    zeta_dot: np.ndarray
    i_d: np.ndarray
    i_q: np.ndarray
    theta_dot: np.ndarray
    theta_ddot: np.ndarray | None = None  # exact rotor acceleration when available


@dataclass
class ControllerSettings:
    dt: float = 1e-3
    variant: str = "adaptive"
    alpha: float = 0.5
    tilt_model: str = "exact"
    accel_cutoff_hz: float = 1000.0  # rotor acceleration estimate
    required_accel_cutoff_hz: float = 100.0  # required spatial accelerations
    theta_ddot_source: str = "measured"  # or "required"
    adaptation_substeps: int = 1
    actuator_speed: str = "motor"  # "motor" (lead * theta_dot) or "rod" (linkage rate)
    current_ref_cutoff_hz: float | None = 50.0  # low-pass on d i_qr / dt; None: plain backward difference

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.theta_ddot_source not in ("measured", "required"):
            raise ValueError("theta_ddot_source must be 'measured' or 'required'")
        if self.dt <= 0:
            raise ValueError("dt must be positive")


class VdcController:
    """One control loop owning all controller state."""

    def __init__(
        self,
        geom,
        inertia_estimate: ManipulatorInertia,
        actuator_models: list,
        gains: GainSet,
        g_world,
        settings: ControllerSettings = ControllerSettings(),
    ):
        if len(actuator_models) != 3:
            raise ValueError("need three actuator models")
        self.geom = geom
        self.gains = gains
        self.g = np.asarray(g_world, float)
        self.s = settings
        self.models: list[HybridModel] = [replace(h, alpha=settings.alpha) for h in actuator_models]
        self.adapt = {
            name: AdaptationState(theta_to_pseudo(p), gains.gamma) for name, p in inertia_estimate.bodies.items()
        }
        self.adaptation_enabled = settings.variant == "adaptive"
        dt = settings.dt
        self._dVr = {name: FilteredDerivative(dt, settings.required_accel_cutoff_hz, 6) for name in BODIES}
        self._theta_dd = FilteredDerivative(dt, settings.accel_cutoff_hz, 3)
        self._xr_dd = FilteredDerivative(dt, settings.accel_cutoff_hz, 3)
        self._diqr = FilteredDerivative(dt, settings.current_ref_cutoff_hz, 3)
        self.i_dr = np.zeros(3)

    def theta_hat(self) -> dict:
        return {k: st.theta_vector.copy() for k, st in self.adapt.items()}

    def bregman_sum(self, truth: ManipulatorInertia) -> float:
        return sum(bregman_divergence(theta_to_pseudo(truth.bodies[k]), st.L_hat) for k, st in self.adapt.items())

    def tick(self, m: Measurement, ref: TaskReference, pose: Pose, chain: dict | None = None):
        s, G = self.s, self.gains
        # kinematics
        W = propagate_chain(pose, np.eye(6)) if chain is None else chain
        J = world_twist_matrix(pose) @ W["T4"]
        tool = pose.world["T4"]
        # CLIK
        e_task = task_error(ref.p, ref.R, tool.offset, tool.rotation)
        Pi_dot_d = np.concatenate([ref.p_dot, ref.omega])
        theta_dot_r = clik(J, Pi_dot_d, None, None, G.Lambda, error=e_task)
        # required and actual velocities
        V = {k: W[k] @ m.zeta_dot for k in W}
        V_r = {k: W[k] @ theta_dot_r for k in W}
        dV_r = {name: self._dVr[name].update(V_r[name]) for name in BODIES}
        use_model = s.variant != "pd"
        Ys = {}
        if use_model:
            Ys = {name: regressor(dV_r[name], V_r[name], body_gravity(pose, name, self.g)) for name in self.adapt}
        # adaptation
        if self.adaptation_enabled:
            for name, st in self.adapt.items():
                S = s_matrix(Ys[name], V_r[name] - V[name])
                self.adapt[name] = nal_step(st, S, s.dt, s.adaptation_substeps)
        theta_hat = self.theta_hat() if use_model else {}
        # required forces
        req = required_force_chain(
            pose, V_r, dV_r, V, theta_hat, G.K_A, np.zeros(6), self.g, self.geom, use_model, s.tilt_model, Ys
        )
        # required currents and voltages
        jac = pose.actuator_jacobian
        x_dot = jac * m.zeta_dot[:3]
        if s.actuator_speed == "motor":
            x_dot = np.array([h.params.lead_ratio for h in self.models]) * m.theta_dot
        x_dot_r = jac * theta_dot_r[:3]
        theta_dd_meas = self._theta_dd.update(m.theta_dot)
        x_dd_r = self._xr_dd.update(x_dot_r)
        if m.theta_ddot is not None:
            theta_dd_meas = np.asarray(m.theta_ddot, float)
        v_d, v_q = np.zeros(3), np.zeros(3)
        i_qr, di_dr = np.zeros(3), np.zeros(3)
        e_F, e_d, F_hyb = np.zeros(3), np.zeros(3), np.zeros(3)
        beta = np.zeros((3, 2))
        i_dr = self.i_dr.copy()
        for j, h in enumerate(self.models):
            P = h.params
            tau_e = 1.5 * P.motor.p * (
                (P.motor.L_d * m.i_d[j] + P.motor.lambda_m) * m.i_q[j] - P.motor.L_q * m.i_q[j] * m.i_d[j]
            )
            F_hat = h.surrogate(tau_e, m.theta_dot[j])[0] if h.alpha > 0 else 0.0
            th_dd = theta_dd_meas[j] if s.theta_ddot_source == "measured" else x_dd_r[j] / P.lead_ratio
            _, di_dr[j] = required_d_current(m.i_d[j], G.actuators[j].lambda_i)
            i_qr[j] = required_q_current(
                req.actuator[j], m.i_d[j], m.i_q[j], i_dr[j], m.theta_dot[j], th_dd, P, h.alpha, F_hat, h.inertia
            )
            F_hyb[j] = hybrid_force(m.i_d[j], m.i_q[j], m.theta_dot[j], th_dd, P, h.alpha, F_hat, h.inertia)
            e_F[j] = req.actuator[j] - F_hyb[j]
            e_d[j] = i_dr[j] - m.i_d[j]
            beta[j] = betas(P, h.alpha, m.i_d[j], m.i_q[j])
        di_qr = self._diqr.update(i_qr)
        for j, h in enumerate(self.models):
            v_d[j], v_q[j] = low_level_voltages(
                m.i_d[j], m.i_q[j], m.theta_dot[j], i_dr[j], di_dr[j], di_qr[j],
                req.actuator[j], F_hyb[j], x_dot_r[j], x_dot[j], G.actuators[j], h.params.motor,
            )
        self.i_dr = i_dr + s.dt * di_dr
        record = {
            "theta_dot_r": theta_dot_r,
            "task_error": e_task,
            "f_r": req.actuator,
            "tau_wrist_r": req.wrist_torques,
            "x_dot_r": x_dot_r,
            "x_dot": x_dot,
            "i_qr": i_qr,
            "i_dr": self.i_dr.copy(),
            "F_hyb": F_hyb,
            "e_F": e_F,
            "e_d": e_d,
            "beta": beta,
            "V_err": {k: V_r[k] - V[k] for k in BODIES},
        }
        return v_d, v_q, req.wrist_torques, record

    def gain_checks(self, beta: np.ndarray) -> list[GainCheck]:
        out = []
        for j, h in enumerate(self.models):
            M = h.params.motor
            out.append(gain_condition_check(self.gains.actuators[j], beta[j, 0], beta[j, 1], M.L_d, M.L_q))
        return out
