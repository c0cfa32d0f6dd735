"""One EMLA rigidly coupled to a translating load under the full actuator law.

The rod and load move as ``x = lead * theta`` with no elastic stage. The
controller is evaluated inside the ODE right-hand side, so the applied
voltages equal the commanded ones at every instant and ``d i_qr / dt`` is
exact. The force model uses the required rotor acceleration; the gap between
modelled and delivered force is then the rotor inertia times the acceleration
error. Counting that inertia with the load, the accompanying function of the
load velocity error, the force error and the d-current error is a strict
Lyapunov function, which makes this loop the reference case for the stability
machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .controller import ActuatorGains, actuator_nu, betas, gain_condition_check
from .emla import EmlaParams

STATE_FIELDS = ("i_d", "i_q", "theta", "theta_dot", "i_dr")
SERIES = ("t", "x", "e_v", "e_F", "e_d", "beta1", "beta2", "K1", "nu", "nu_load", "nu_act")


def _frictionless_screw() -> EmlaParams:
    P = EmlaParams()
    return replace(P, drive=replace(P.drive, C_s=0.0, eta_gear=1.0))


@dataclass(frozen=True)
class SingleAxisConfig:
    params: EmlaParams = _frictionless_screw()
    gains: ActuatorGains = ActuatorGains(K_i=1e-3, K_f=1e-3, K_v=500.0, lambda_i=20.0, K2=1e-3)
    load_mass: float = 2000.0  # [kg]
    load_force: float = 2e4  # constant opposing force [N]
    velocity_gain: float = 5e5  # K_A of the load [N s/m]
    position_gain: float = 20.0  # required-velocity gain [1/s]
    amplitude: float = 0.01  # desired sinusoid amplitude [m]
    frequency: float = 1.0  # [Hz]
    drift_speed: float = 0.1  # added constant speed keeping the rotor off the friction reversal [m/s]
    initial_offset: float = 2e-3  # start this far behind the desired position [m]
    initial_i_d: float = 0.0  # [A]
    dt: float = 1e-5
    duration: float = 0.3

    @property
    def effective_mass(self) -> float:
        """Load mass plus the rotor inertia reflected to the rod."""
        return self.load_mass + self.params.J_eq / self.params.lead_ratio**2


def _desired(t: float, cfg: SingleAxisConfig):
    """Desired position and its first three derivatives."""
    w = 2.0 * math.pi * cfg.frequency
    A, v0 = cfg.amplitude, cfg.drift_speed
    s, c = math.sin(w * t), math.cos(w * t)
    return v0 * t + A * s, v0 + A * w * c, -A * w * w * s, -A * w**3 * c


def closed_loop(t: float, y, cfg: SingleAxisConfig) -> tuple[np.ndarray, dict]:
    """State derivative and controller signals at ``(t, y)``."""
    P, g = cfg.params, cfg.gains
    M = P.motor
    lead, J, k = P.lead_ratio, P.J_eq, 1.5 * M.p
    i_d, i_q, theta, w, i_dr = (float(v) for v in y)
    x, x_dot = lead * theta, lead * w
    lam_d, lam_q = M.L_d * i_d + M.lambda_m, M.L_q * i_q
    we = M.p * w
    # plant acceleration depends on the state only
    tau_e = k * (lam_d * i_q - lam_q * i_d)
    th = math.tanh(w / M.omega_eps)
    friction = P.C_eq * w + M.tau_C * th
    theta_dd = (tau_e - friction - lead * cfg.load_force) / (J + cfg.load_mass * lead**2)
    x_dd = lead * theta_dd
    # required motion and force
    x_d, v_d, a_d, j_d = _desired(t, cfg)
    lam = cfg.position_gain
    x_dot_r = v_d + lam * (x_d - x)
    x_ddot_r = a_d + lam * (v_d - x_dot)
    x_dddot_r = j_d + lam * (a_d - x_dd)
    e_v = x_dot_r - x_dot
    F_r = cfg.load_mass * x_ddot_r + cfg.load_force + cfg.velocity_gain * e_v
    dF_r = cfg.load_mass * x_dddot_r + cfg.velocity_gain * (x_ddot_r - x_dd)
    # required currents; the force model takes the required rotor acceleration
    N = F_r * lead + J * x_ddot_r / lead + friction
    dN = dF_r * lead + J * x_dddot_r / lead + (P.C_eq + M.tau_C * (1.0 - th * th) / M.omega_eps) * theta_dd
    i_qr = (N / k + lam_q * i_dr) / lam_d
    F_hyb = (tau_e - J * x_ddot_r / lead - friction) / lead
    e_F, e_d = F_r - F_hyb, i_dr - i_d
    di_dr = g.lambda_i * (0.0 - i_d)
    # current rates with the applied voltages equal to the commanded ones;
    # d i_qr / dt depends linearly on d i_q / dt through lambda_q
    di_d = di_dr + g.K_i * e_d / M.L_d
    c_q = (g.K_f * e_F + g.K_v * e_v) / M.L_q
    A = ((dN / k + lam_q * di_dr) * lam_d - (N / k + lam_q * i_dr) * M.L_d * di_d) / lam_d**2
    B = M.L_q * i_dr / lam_d
    di_qr = (A + B * c_q) / (1.0 - B)
    di_q = di_qr + c_q
    v_dr = M.R_s * i_d + M.L_d * di_dr - we * lam_q + g.K_i * e_d
    v_qr = M.R_s * i_q + M.L_q * di_qr + we * lam_d + g.K_f * e_F + g.K_v * e_v
    rates = np.array([di_d, di_q, w, theta_dd, di_dr])
    signals = {"x": x, "e_v": e_v, "e_F": e_F, "e_d": e_d, "i_qr": i_qr, "v_dr": v_dr, "v_qr": v_qr}
    return rates, signals


def motor_current_rates(y, v_d: float, v_q: float, params: EmlaParams) -> tuple[float, float]:
    """dq current rates of the motor under applied voltages."""
    M = params.motor
    i_d, i_q, _, w = (float(v) for v in y[:4])
    we = M.p * w
    return (
        (v_d - M.R_s * i_d + we * M.L_q * i_q) / M.L_d,
        (v_q - M.R_s * i_q - we * (M.L_d * i_d + M.lambda_m)) / M.L_q,
    )


def _rk4_step(t: float, y: np.ndarray, dt: float, cfg: SingleAxisConfig) -> np.ndarray:
    f = lambda tt, yy: closed_loop(tt, yy, cfg)[0]
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def run_single_axis(cfg: SingleAxisConfig = SingleAxisConfig()) -> dict:
    """Integrate with fixed RK4 steps. Returns arrays keyed by ``SERIES`` and
    ``gains_pass``, true when the gain conditions held at every step."""
    P, g = cfg.params, cfg.gains
    n = int(round(cfg.duration / cfg.dt)) + 1
    x0 = _desired(0.0, cfg)[0] - cfg.initial_offset
    y = np.array([cfg.initial_i_d, 0.0, x0 / P.lead_ratio, 0.0, 0.0])
    out = {k: np.zeros(n) for k in SERIES}
    gains_pass = True
    for k in range(n):
        t = k * cfg.dt
        _, sig = closed_loop(t, y, cfg)
        b1, b2 = betas(P, 0.0, y[0], y[1])
        K1 = g.k1(b1, P.motor.L_q)
        gains_pass &= gain_condition_check(g, b1, b2, P.motor.L_d, P.motor.L_q).passed
        nu_load = 0.5 * cfg.effective_mass * sig["e_v"] ** 2
        nu_act = actuator_nu(sig["e_F"], sig["e_d"], K1, g.K2)
        row = (t, sig["x"], sig["e_v"], sig["e_F"], sig["e_d"], b1, b2, K1, nu_load + nu_act, nu_load, nu_act)
        for key, val in zip(SERIES, row):
            out[key][k] = val
        if k < n - 1:
            y = _rk4_step(t, y, cfg.dt, cfg)
    out["gains_pass"] = gains_pass
    return out


def force_error_rate(run: dict, cfg: SingleAxisConfig = SingleAxisConfig()) -> np.ndarray:
    """Closed-form force-error derivative with applied voltages equal to the
    commanded ones: ``(beta1/L_q)(-K_f e_F - K_v e_v) + (beta2 K_i / L_d) e_d``."""
    M, g = cfg.params.motor, cfg.gains
    return (run["beta1"] / M.L_q) * (-g.K_f * run["e_F"] - g.K_v * run["e_v"]) + (
        run["beta2"] * g.K_i / M.L_d
    ) * run["e_d"]
