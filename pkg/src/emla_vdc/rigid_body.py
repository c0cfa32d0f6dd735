"""Rigid-body net-force dynamics, the inertial-parameter regressor and the
log-determinant adaptation machinery.

Parameter vector ordering (10 entries)::

    theta = [m, hx, hy, hz, Ixx, Ixy, Ixz, Iyy, Iyz, Izz]

with ``h = m * c`` the first moment and ``I`` the rotational inertia about the
body frame origin (not the centre of mass).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import solve_triangular

from .spatial import force_cross, skew

SYM_TOL = 1e-12
DEFAULT_GAMMA = 100.0


class DomainError(ValueError):
    """Input outside the set of symmetric positive-definite matrices."""


class AdaptationStepError(RuntimeError):
    """A NAL step would leave the positive-definite cone."""

    def __init__(self, message: str, suggested_dt: float):
        super().__init__(f"{message}; retry with dt <= {suggested_dt:.3e}")
        self.suggested_dt = suggested_dt


def inertia_matrix(Ivec) -> np.ndarray:
    xx, xy, xz, yy, yz, zz = Ivec
    return np.array([[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]], dtype=float)


def inertia_vector(I) -> np.ndarray:
    I = np.asarray(I, dtype=float)
    return np.array([I[0, 0], I[0, 1], I[0, 2], I[1, 1], I[1, 2], I[2, 2]])


@dataclass(frozen=True)
class InertialParameters:
    mass: float
    first_moment: np.ndarray  # h = m c  [kg m]
    inertia: np.ndarray  # 3x3 about frame origin [kg m^2]

    def __post_init__(self):
        object.__setattr__(self, "first_moment", np.asarray(self.first_moment, float).reshape(3))
        object.__setattr__(self, "inertia", np.asarray(self.inertia, float).reshape(3, 3))

    @classmethod
    def from_vector(cls, theta) -> "InertialParameters":
        theta = np.asarray(theta, dtype=float)
        return cls(float(theta[0]), theta[1:4], inertia_matrix(theta[4:10]))

    @classmethod
    def from_com(cls, mass: float, com, inertia_com) -> "InertialParameters":
        """Build from mass, centre of mass and inertia about the centre of mass."""
        c = np.asarray(com, dtype=float)
        Ic = np.asarray(inertia_com, dtype=float)
        I_origin = Ic + mass * (c @ c * np.eye(3) - np.outer(c, c))
        return cls(mass, mass * c, I_origin)

    def vector(self) -> np.ndarray:
        return np.concatenate([[self.mass], self.first_moment, inertia_vector(self.inertia)])

    def is_physically_consistent(self) -> bool:
        return self.mass > 0 and _is_pd(theta_to_pseudo(self))

    def scaled(self, factor: float) -> "InertialParameters":
        return InertialParameters(self.mass * factor, self.first_moment * factor, self.inertia * factor)


def _pd_factor(L: np.ndarray) -> np.ndarray | None:
    """Lower Cholesky factor, or None when ``L`` is not positive definite."""
    try:
        return np.linalg.cholesky(L)
    except np.linalg.LinAlgError:
        return None


def _is_pd(L: np.ndarray) -> bool:
    return _pd_factor(L) is not None


def theta_to_pseudo(theta) -> np.ndarray:
    """Pseudo-inertia ``[[0.5 tr(I) 1 - I, h], [h^T, m]]``."""
    if not isinstance(theta, InertialParameters):
        theta = InertialParameters.from_vector(theta)
    I = theta.inertia
    L = np.empty((4, 4))
    L[:3, :3] = 0.5 * np.trace(I) * np.eye(3) - I
    L[:3, 3] = theta.first_moment
    L[3, :3] = theta.first_moment
    L[3, 3] = theta.mass
    return L


def pseudo_to_theta(L) -> InertialParameters:
    L = np.asarray(L, dtype=float)
    if np.max(np.abs(L - L.T)) > SYM_TOL * max(1.0, np.max(np.abs(L))):
        raise DomainError("pseudo-inertia must be symmetric")
    Sigma = L[:3, :3]
    I = np.trace(Sigma) * np.eye(3) - Sigma
    return InertialParameters(float(L[3, 3]), L[:3, 3].copy(), I)


def pseudo_to_vector(L: np.ndarray) -> np.ndarray:
    """``pseudo_to_theta(L).vector()`` for a pseudo-inertia known to be symmetric."""
    tr = L[0, 0] + L[1, 1] + L[2, 2]
    return np.array(
        [L[3, 3], L[0, 3], L[1, 3], L[2, 3], tr - L[0, 0], -L[0, 1], -L[0, 2], tr - L[1, 1], -L[1, 2], tr - L[2, 2]]
    )


def random_inertial_parameters(rng: np.random.Generator, mass_range=(0.5, 50.0), size=1.0) -> InertialParameters:
    """Sample a physically consistent body: point cloud second moments are PD."""
    m = rng.uniform(*mass_range)
    c = rng.uniform(-size, size, 3)
    A = rng.normal(size=(3, 3)) * size
    Sigma_c = m * (A @ A.T / 3.0 + 1e-3 * size**2 * np.eye(3))
    Ic = np.trace(Sigma_c) * np.eye(3) - Sigma_c
    return InertialParameters.from_com(m, c, Ic)


# --------------------------------------------------------------------------- dynamics


@dataclass(frozen=True)
class RigidBodyModel:
    """Body-frame Newton-Euler model ``M dV + C(V) V + G = F*``."""

    params: InertialParameters
    gravity: np.ndarray = np.zeros(3)  # gravitational acceleration expressed in the body frame

    def mass_matrix(self) -> np.ndarray:
        p = self.params
        M = np.zeros((6, 6))
        M[:3, :3] = p.mass * np.eye(3)
        M[:3, 3:] = -skew(p.first_moment)
        M[3:, :3] = skew(p.first_moment)
        M[3:, 3:] = p.inertia
        return M

    def coriolis_matrix(self, V) -> np.ndarray:
        return force_cross(V) @ self.mass_matrix()

    def gravity_vector(self) -> np.ndarray:
        p = self.params
        g = np.asarray(self.gravity, dtype=float)
        return -np.concatenate([p.mass * g, np.cross(p.first_moment, g)])


def net_force(model: RigidBodyModel, V, dV) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    dV = np.asarray(dV, dtype=float)
    return model.mass_matrix() @ dV + model.coriolis_matrix(V) @ V + model.gravity_vector()


def _lin_inertia(w: np.ndarray) -> np.ndarray:
    """``_lin_inertia(w) @ inertia_vector(I) == I @ w``."""
    x, y, z = w
    return np.array(
        [[x, y, z, 0.0, 0.0, 0.0], [0.0, x, 0.0, y, z, 0.0], [0.0, 0.0, x, 0.0, y, z]]
    )


def regressor(dV, V, gravity=None) -> np.ndarray:
    """6x10 matrix ``Y`` with ``Y @ theta == M dV + C(V) V + G``.

    ``gravity`` is the gravitational acceleration expressed in the body frame.
    Written out entry by entry; it sits in the inner control loop.
    """
    vx, vy, vz, x, y, z = np.asarray(V, dtype=float).tolist()
    dvx, dvy, dvz, dx, dy, dz = np.asarray(dV, dtype=float).tolist()
    gx, gy, gz = (0.0, 0.0, 0.0) if gravity is None else np.asarray(gravity, dtype=float).tolist()
    # a = dv + w x v - g
    ax = dvx + y * vz - z * vy - gx
    ay = dvy + z * vx - x * vz - gy
    az = dvz + x * vy - y * vx - gz
    # skew(dw) + skew(w)^2 = skew(dw) + w w^T - |w|^2 1
    n2 = x * x + y * y + z * z
    return np.array(
        [
            [ax, x * x - n2, x * y - dz, x * z + dy, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [ay, x * y + dz, y * y - n2, y * z - dx, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [az, x * z - dy, y * z + dx, z * z - n2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            # -skew(a) and _lin_inertia(dw) + skew(w) @ _lin_inertia(w)
            [0.0, 0.0, az, -ay, dx, dy - z * x, dz + y * x, -z * y, y * y - z * z, y * z],
            [0.0, -az, 0.0, ax, z * x, dx + z * y, z * z - x * x, dy, dz - x * y, -x * z],
            [0.0, ay, -ax, 0.0, -y * x, x * x - y * y, dx - y * z, x * y, dy + x * z, dz],
        ]
    )


def vpf(Vr, V, Fr, F) -> float:
    """Virtual power flow ``(Vr - V) . (Fr - F)``."""
    return float(np.dot(np.asarray(Vr, float) - V, np.asarray(Fr, float) - F))


def required_net_force(Y, theta_hat, K, Vr, V) -> np.ndarray:
    if isinstance(theta_hat, InertialParameters):
        theta_hat = theta_hat.vector()
    return np.asarray(Y) @ theta_hat + np.asarray(K) @ (np.asarray(Vr, float) - V)


# --------------------------------------------------------------------------- adaptation


def _cholesky(L: np.ndarray, name: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(L)
    except np.linalg.LinAlgError:
        raise DomainError(f"{name} is not positive definite") from None


def bregman_divergence(L, L_hat) -> float:
    """Log-determinant divergence ``log(|L^|/|L|) + tr(L^^-1 L) - 4``."""
    return divergence_from_factors(
        _cholesky(np.asarray(L, dtype=float), "L"), _cholesky(np.asarray(L_hat, dtype=float), "L_hat")
    )


def divergence_from_factors(C, C_hat) -> float:
    """``bregman_divergence`` from the lower Cholesky factors of ``L`` and ``L_hat``."""
    # with L = C C^T: log-determinants from the diagonals, tr(L^^-1 L) = ||C^^-1 C||_F^2
    log_ratio = 2.0 * float(np.sum(np.log(np.diag(C_hat))) - np.sum(np.log(np.diag(C))))
    d = log_ratio + float(np.sum(solve_triangular(C_hat, C, lower=True, check_finite=False) ** 2)) - 4.0
    return max(d, 0.0)


def s_matrix(Y, ev) -> np.ndarray:
    """Adjoint of the pseudo-inertia map applied to ``w = Y^T ev``.

    The result is the unique symmetric ``S`` with
    ``trace(S @ theta_to_pseudo(d)) == w @ d`` for every parameter vector ``d``.
    """
    w = np.asarray(Y).T @ np.asarray(ev, dtype=float)
    W = inertia_matrix(w[4:10])
    W[0, 1] = W[1, 0] = 0.5 * w[5]
    W[0, 2] = W[2, 0] = 0.5 * w[6]
    W[1, 2] = W[2, 1] = 0.5 * w[8]
    S = np.zeros((4, 4))
    S[:3, :3] = np.trace(W) * np.eye(3) - W
    S[:3, 3] = 0.5 * w[1:4]
    S[3, :3] = 0.5 * w[1:4]
    S[3, 3] = w[0]
    return S


@dataclass(frozen=True)
class AdaptationState:
    L_hat: np.ndarray
    gamma: float = DEFAULT_GAMMA

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("adaptation gain must be positive")
        L = np.asarray(self.L_hat, dtype=float)
        object.__setattr__(self, "L_hat", L)
        self.__dict__["factor"] = _cholesky(L, "L_hat")

    @classmethod
    def _checked(cls, L: np.ndarray, gamma: float, factor: np.ndarray) -> "AdaptationState":
        """Build from an estimate already known to be PD, reusing its factor."""
        st = object.__new__(cls)
        object.__setattr__(st, "L_hat", L)
        object.__setattr__(st, "gamma", gamma)
        st.__dict__["factor"] = factor
        return st

    @cached_property
    def theta_vector(self) -> np.ndarray:
        return pseudo_to_vector(self.L_hat)

    @cached_property
    def factor(self) -> np.ndarray:
        """Lower Cholesky factor of ``L_hat``."""
        return _cholesky(self.L_hat, "L_hat")

    @cached_property
    def theta_hat(self) -> InertialParameters:
        return pseudo_to_theta(self.L_hat)


def nal_step(state: AdaptationState, S, dt: float, substeps: int = 1) -> AdaptationState:
    """Explicit Euler on ``dL/dt = (1/gamma) L S L`` with symmetrisation."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    S = np.asarray(S, dtype=float)
    if np.max(np.abs(S - S.T)) > SYM_TOL * max(1.0, np.max(np.abs(S))):
        raise DomainError("S must be symmetric")
    L, C = state.L_hat, state.factor
    h = dt / substeps
    for _ in range(substeps):
        L_new = L + (h / state.gamma) * (L @ S @ L)
        L_new = 0.5 * (L_new + L_new.T)
        C = _pd_factor(L_new)
        if C is None:
            raise AdaptationStepError("adaptation step left the PD cone", _max_stable_dt(L, S, state.gamma))
        L = L_new
    return AdaptationState._checked(L, state.gamma, C)


def _max_stable_dt(L: np.ndarray, S: np.ndarray, gamma: float) -> float:
    # L + h/g L S L = L^{1/2}(1 + h/g L^{1/2} S L^{1/2}) L^{1/2}
    C = np.linalg.cholesky(L)
    lam_min = float(np.min(np.linalg.eigvalsh(C.T @ S @ C)))
    if lam_min >= 0:
        return np.inf
    return 0.5 * gamma / -lam_min
