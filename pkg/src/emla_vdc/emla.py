"""Electromechanical linear actuator: PMSM in the dq frame, rigid gearbox and
lead screw lumped onto the rotor, and a compliant nut-rod interface.

State vector ordering (used by :func:`rhs` and the CSV trace)::

    [i_d, i_q, theta_m, theta_m_dot, x_n, x, x_dot]

The screw shaft speed is always ``theta_m_dot / N_gear`` and is never stored.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

TWO_PI = 2.0 * math.pi
STATE_FIELDS = ("i_d", "i_q", "theta_m", "theta_m_dot", "x_n", "x", "x_dot")


class StrokeLimitError(ValueError):
    """Rod position left the open interval (0, L_s)."""


class NonFiniteStateError(FloatingPointError):
    pass


@dataclass(frozen=True)
class PmsmParams:
    R_s: float = 0.2  # stator resistance [ohm]
    L_d: float = 2e-3  # [H]
    L_q: float = 2e-3  # [H]
    lambda_m: float = 0.15  # magnet flux linkage [Wb]
    p: int = 4  # pole pairs
    J_m: float = 5e-3  # rotor inertia [kg m^2]
    C_m: float = 2e-3  # viscous damping [N m s/rad]
    tau_C: float = 0.1  # Coulomb friction [N m]
    omega_eps: float = 1e-3  # friction regularisation speed [rad/s]

    def __post_init__(self):
        if self.p < 1 or int(self.p) != self.p:
            raise ValueError("pole pairs must be a positive integer")
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("C_m", "tau_C"):
                if v < 0:
                    raise ValueError(f"{f.name} must be non-negative")
            elif v <= 0:
                raise ValueError(f"{f.name} must be positive")


@dataclass(frozen=True)
class DriveTrainParams:
    N_gear: float = 5.0
    eta_gear: float = 0.9
    rho: float = 0.01  # screw lead [m/rev]
    J_s: float = 1e-3  # screw shaft inertia [kg m^2]
    C_s: float = 1e-3  # screw viscous damping [N m s/rad]
    C_b: float = 1e5  # nut-rod damping [N s/m]
    M_act: float = 20.0  # rod and driven parts [kg]
    C_act: float = 500.0  # rod damping [N s/m]
    K_s: float = 2.6e8  # screw axial rigidity EA [N]
    K_br: float = 5e8  # bearing stiffness [N/m]
    K_n: float = 4e8  # nut interface stiffness [N/m]
    K_r: float = 5e8  # rod stiffness [N/m]
    K_rot: float = 2e4  # torsional rigidity GJ [N m^2]
    L_s: float = 1.0  # distance between screw bearings [m]
    power_eps: float = 1.0  # power scale of the motoring/back-driving blend [W]

    def __post_init__(self):
        if not 0 < self.eta_gear <= 1:
            raise ValueError("eta_gear must lie in (0, 1]")
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("C_s", "C_b", "C_act"):
                if v < 0:
                    raise ValueError(f"{f.name} must be non-negative")
            elif v <= 0:
                raise ValueError(f"{f.name} must be positive")


@dataclass(frozen=True)
class EmlaParams:
    motor: PmsmParams = PmsmParams()
    drive: DriveTrainParams = DriveTrainParams()

    @property
    def lead_ratio(self) -> float:
        """Rod metres per motor radian, ``rho / (2 pi N)``."""
        return self.drive.rho / (TWO_PI * self.drive.N_gear)

    @property
    def J_eq(self) -> float:
        return self.motor.J_m + self.drive.J_s / self.drive.N_gear**2

    @property
    def C_eq(self) -> float:
        return self.motor.C_m + self.drive.C_s / self.drive.N_gear**2

    @property
    def torque_constant(self) -> float:
        """``1.5 p lambda_m`` [N m / A] (exact when i_d = 0 or L_d = L_q)."""
        return 1.5 * self.motor.p * self.motor.lambda_m

    @classmethod
    def from_dict(cls, d: dict) -> "EmlaParams":
        return cls(PmsmParams(**d.get("motor", {})), DriveTrainParams(**d.get("drive", {})))

    def to_dict(self) -> dict:
        return {"motor": asdict(self.motor), "drive": asdict(self.drive)}

    def scaled(self, factor: float, names=("J_m", "C_m", "tau_C", "R_s", "L_d", "L_q", "M_act")) -> "EmlaParams":
        m = {k: getattr(self.motor, k) * factor for k in names if hasattr(self.motor, k)}
        d = {k: getattr(self.drive, k) * factor for k in names if hasattr(self.drive, k)}
        return EmlaParams(replace(self.motor, **m), replace(self.drive, **d))


@dataclass(frozen=True)
class EmlaState:
    i_d: float = 0.0
    i_q: float = 0.0
    theta_m: float = 0.0
    theta_m_dot: float = 0.0
    x_n: float = 0.0
    x: float = 0.0
    x_dot: float = 0.0

    @property
    def theta_s_dot(self) -> float:
        raise AttributeError("use screw_speed(state, params); the gear ratio lives in the parameters")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in STATE_FIELDS])

    @classmethod
    def from_array(cls, y) -> "EmlaState":
        return cls(*(float(v) for v in y))


def screw_speed(s: EmlaState, P: EmlaParams) -> float:
    return s.theta_m_dot / P.drive.N_gear


def nut_speed(s: EmlaState, P: EmlaParams) -> float:
    return P.lead_ratio * s.theta_m_dot


# --------------------------------------------------------------------------- electrical


def flux_linkages(i_d: float, i_q: float, M: PmsmParams) -> tuple[float, float]:
    return M.L_d * i_d + M.lambda_m, M.L_q * i_q


def electrical_rates(s: EmlaState, v_d: float, v_q: float, P: EmlaParams | PmsmParams) -> tuple[float, float]:
    M = P.motor if isinstance(P, EmlaParams) else P
    lam_d, lam_q = flux_linkages(s.i_d, s.i_q, M)
    we = M.p * s.theta_m_dot
    did = (v_d - M.R_s * s.i_d + we * lam_q) / M.L_d
    diq = (v_q - M.R_s * s.i_q - we * lam_d) / M.L_q
    return did, diq


def em_torque(s: EmlaState, P: EmlaParams | PmsmParams) -> float:
    M = P.motor if isinstance(P, EmlaParams) else P
    lam_d, lam_q = flux_linkages(s.i_d, s.i_q, M)
    return 1.5 * M.p * (lam_d * s.i_q - lam_q * s.i_d)


# --------------------------------------------------------------------------- mechanical


def shaft_length(x: float, L_s: float) -> float:
    return x * (L_s - x) / L_s


def stiffness(x: float, D: DriveTrainParams) -> float:
    if not 0.0 < x < D.L_s:
        raise StrokeLimitError(f"rod position {x:.6g} m outside (0, {D.L_s})")
    compliance = (
        shaft_length(x, D.L_s) / D.K_s
        + 1.0 / (2.0 * D.K_br)
        + 1.0 / D.K_n
        + 1.0 / D.K_r
        + D.rho**2 * x / (4.0 * math.pi**2 * D.K_rot)
    )
    return 1.0 / compliance


def stiffness_slope(x: float, D: DriveTrainParams) -> float:
    """``dK_b/dx``; needed for the energy audit of the position-dependent spring."""
    K = stiffness(x, D)
    dc = (D.L_s - 2.0 * x) / (D.L_s * D.K_s) + D.rho**2 / (4.0 * math.pi**2 * D.K_rot)
    return -K * K * dc


def screw_force(x_n, x_n_dot, x, x_dot, K_b, D: DriveTrainParams) -> float:
    """Force the nut exerts on the rod (positive along +x)."""
    return D.C_b * (x_n_dot - x_dot) + K_b * (x_n - x)


def backdrive_torque(s: EmlaState, K_b: float, D: DriveTrainParams, P: EmlaParams | None = None) -> float:
    """Screw-side torque from nut-rod relative motion; nut speed follows the rotor."""
    lead = D.rho / TWO_PI
    xn_dot = lead * s.theta_m_dot / D.N_gear
    return lead * screw_force(s.x_n, xn_dot, s.x, s.x_dot, K_b, D)


def transmission_factor(tau_bd: float, theta_m_dot: float, D: DriveTrainParams) -> float:
    """Multiplier on ``tau_bd / N`` seen by the rotor: 1/eta when the motor drives
    the load, eta when the load back-drives the motor, blended smoothly in power."""
    power = tau_bd * theta_m_dot / D.N_gear
    k = math.tanh(power / D.power_eps)
    return D.eta_gear ** (-k)


def load_torque(tau_bd: float, theta_m_dot: float, D: DriveTrainParams) -> float:
    return transmission_factor(tau_bd, theta_m_dot, D) * tau_bd / D.N_gear


def friction_torque(theta_m_dot: float, P: EmlaParams) -> float:
    M = P.motor
    return P.C_eq * theta_m_dot + M.tau_C * math.tanh(theta_m_dot / M.omega_eps)


def mechanical_rates(s: EmlaState, tau_e: float, F_ext: float, P: EmlaParams, D: DriveTrainParams | None = None):
    """``(theta_m_ddot, x_ddot)`` of the lumped rotor and the rod."""
    D = P.drive if D is None else D
    K_b = stiffness(s.x, D)
    tau_bd = backdrive_torque(s, K_b, D)
    theta_dd = (tau_e - friction_torque(s.theta_m_dot, P) - load_torque(tau_bd, s.theta_m_dot, D)) / P.J_eq
    F_s = tau_bd * TWO_PI / D.rho
    x_dd = (F_s - D.C_act * s.x_dot - F_ext) / D.M_act
    return theta_dd, x_dd


# --------------------------------------------------------------------------- integration

N_POWER = 8
POWER_FIELDS = (
    "electrical_input",
    "resistive",
    "friction",
    "gear_loss",
    "nut_damping",
    "rod_damping",
    "stiffness_variation",
    "output_work",
)


def rhs(y: np.ndarray, v_d: float, v_q: float, F_ext: float, P: EmlaParams, with_power: bool = False):
    """Time derivative of the 7-state vector (optionally followed by 8 power channels)."""
    # flat scalar arithmetic: this is the innermost loop of every simulation
    M, D = P.motor, P.drive
    i_d, i_q, _, w, x_n, x, xd = y[:7].tolist()
    lam_d, lam_q = M.L_d * i_d + M.lambda_m, M.L_q * i_q
    we = M.p * w
    did = (v_d - M.R_s * i_d + we * lam_q) / M.L_d
    diq = (v_q - M.R_s * i_q - we * lam_d) / M.L_q
    tau_e = 1.5 * M.p * (lam_d * i_q - lam_q * i_d)
    K_b = stiffness(x, D)
    N = D.N_gear
    xn_dot = D.rho / (TWO_PI * N) * w
    F_s = D.C_b * (xn_dot - xd) + K_b * (x_n - x)
    tau_bd = F_s * D.rho / TWO_PI
    tau_load = D.eta_gear ** (-math.tanh(tau_bd * w / N / D.power_eps)) * tau_bd / N
    C_eq = M.C_m + D.C_s / (N * N)
    tau_f = C_eq * w + M.tau_C * math.tanh(w / M.omega_eps)
    w_dot = (tau_e - tau_f - tau_load) / (M.J_m + D.J_s / (N * N))
    x_dd = (F_s - D.C_act * xd - F_ext) / D.M_act
    dy = [did, diq, w, w_dot, xn_dot, xd, x_dd]
    if not with_power:
        return np.array(dy)
    delta = x_n - x
    dc = (D.L_s - 2.0 * x) / (D.L_s * D.K_s) + D.rho**2 / (4.0 * math.pi**2 * D.K_rot)
    power = [
        1.5 * (v_d * i_d + v_q * i_q),
        1.5 * M.R_s * (i_d * i_d + i_q * i_q),
        tau_f * w,
        tau_load * w - tau_bd * w / N,
        D.C_b * (xn_dot - xd) ** 2,
        D.C_act * xd * xd,
        0.5 * K_b * K_b * dc * xd * delta * delta,
        F_ext * xd,
    ]
    return np.array(dy + power)


def stored_energy(s: EmlaState, P: EmlaParams) -> dict:
    M, D = P.motor, P.drive
    return {
        "magnetic": 0.75 * (M.L_d * s.i_d**2 + M.L_q * s.i_q**2),
        "rotor_kinetic": 0.5 * P.J_eq * s.theta_m_dot**2,
        "rod_kinetic": 0.5 * D.M_act * s.x_dot**2,
        "spring": 0.5 * stiffness(s.x, D) * (s.x_n - s.x) ** 2,
    }


def _check(y: np.ndarray, D: DriveTrainParams) -> None:
    if not np.all(np.isfinite(y)):
        raise NonFiniteStateError("EMLA state became non-finite")
    if not 0.0 < y[5] < D.L_s:
        raise StrokeLimitError(f"rod position {y[5]:.6g} m outside (0, {D.L_s})")


def rk4(f, y: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass
class EnergyAudit:
    """Accumulated energies [J] of each power channel."""

    totals: np.ndarray = None

    def __post_init__(self):
        if self.totals is None:
            self.totals = np.zeros(N_POWER)

    def as_dict(self) -> dict:
        return dict(zip(POWER_FIELDS, self.totals))


def step(s: EmlaState, v_d: float, v_q: float, F_ext: float, dt: float, P: EmlaParams, audit: EnergyAudit | None = None) -> EmlaState:
    """One fixed RK4 step with zero-order-hold inputs."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    y = s.as_array()
    if audit is None:
        y_new = rk4(lambda z: rhs(z, v_d, v_q, F_ext, P), y, dt)
    else:
        z = rk4(lambda z: rhs(z, v_d, v_q, F_ext, P, True), np.concatenate([y, np.zeros(N_POWER)]), dt)
        y_new = z[:7]
        audit.totals += z[7:]
    _check(y_new, P.drive)
    return EmlaState.from_array(y_new)


def energy_residual(s0: EmlaState, s1: EmlaState, audit: EnergyAudit, P: EmlaParams) -> tuple[float, float]:
    """``(residual, scale)``: input - dissipation - stored change - output work."""
    e = audit.as_dict()
    stored = sum(stored_energy(s1, P).values()) - sum(stored_energy(s0, P).values())
    dissipated = sum(e[k] for k in POWER_FIELDS[1:7])
    residual = e["electrical_input"] - dissipated - stored - e["output_work"]
    scale = max(abs(e["electrical_input"]), dissipated, abs(stored), abs(e["output_work"]), 1e-12)
    return residual, scale


def static_equilibrium(x: float, F_ext: float, P: EmlaParams, theta_m: float = 0.0) -> tuple[EmlaState, float, float]:
    """Resting state holding ``F_ext`` at rod position ``x``; returns the state and
    the constant ``(v_d, v_q)`` that keep it there."""
    D = P.drive
    K_b = stiffness(x, D)
    x_n = x + F_ext / K_b
    tau_bd = F_ext * D.rho / TWO_PI
    tau_e = tau_bd / D.N_gear  # transmission factor is 1 at zero speed
    i_q = tau_e / P.torque_constant
    s = EmlaState(0.0, i_q, theta_m, 0.0, x_n, x, 0.0)
    return s, 0.0, P.motor.R_s * i_q


# --------------------------------------------------------------------------- efficiency


@dataclass(frozen=True)
class LossModel:
    """Motor loss components; each is non-negative for every operating point.

    ``P_sw = k_sw |i|``, ``P_core = k_h |w_e| + k_e w_e^2``,
    ``P_mech = c_1 |w| + c_2 w^2`` with ``|i|`` the current magnitude and
    ``w_e = p w`` the electrical speed.  Copper loss uses the dq power scaling.
    """

    R_s: float = 0.2
    k_sw: float = 0.0
    k_h: float = 0.0
    k_e: float = 0.0
    c_1: float = 0.0
    c_2: float = 0.0
    p: int = 4

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be non-negative")

    @classmethod
    def for_motor(cls, M: PmsmParams, **coeffs) -> "LossModel":
        return cls(R_s=M.R_s, p=M.p, **coeffs)

    def components(self, i_d: float, i_q: float, theta_m_dot: float) -> dict:
        i_mag = math.hypot(i_d, i_q)
        we = abs(self.p * theta_m_dot)
        w = abs(theta_m_dot)
        return {
            "switching": self.k_sw * i_mag,
            "copper": 1.5 * self.R_s * (i_d * i_d + i_q * i_q),
            "core": self.k_h * we + self.k_e * we * we,
            "mechanical": self.c_1 * w + self.c_2 * w * w,
        }

    def total(self, i_d: float, i_q: float, theta_m_dot: float) -> float:
        return sum(self.components(i_d, i_q, theta_m_dot).values())


def efficiency(s: EmlaState, tau_e: float, F_ext: float, losses: LossModel, tol: float = 1e-9) -> float | None:
    """Output power over input power in the motoring quadrant, else ``None``."""
    em_power = s.theta_m_dot * tau_e
    if em_power <= 0.0 or F_ext * s.x_dot <= 0.0:
        return None
    denom = em_power + losses.total(s.i_d, s.i_q, s.theta_m_dot)
    if abs(denom) < tol:
        return None
    return (s.x_dot * F_ext) / denom
