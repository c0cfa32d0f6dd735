"""Feedforward surrogate of the actuator's steady behaviour, its
Levenberg-Marquardt training loop and the alpha-blended hybrid model.

The network maps ``(tau_e, theta_m_dot)`` to ``(F_ext, x_dot)``.  Inputs and
targets are min-max normalised to [-1, 1]; hidden layers use ``tanh`` and
the output layer is linear.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .emla import TWO_PI, EmlaParams, LossModel

ACTIVATIONS = {"tanh": np.tanh, "linear": lambda z: z}
MODEL_FORMAT = "emla-mlp"
MODEL_VERSION = 1


class TrainingError(RuntimeError):
    pass


class ModelFileError(ValueError):
    pass


# --------------------------------------------------------------------------- network


@dataclass(frozen=True)
class NormalizationSpec:
    in_min: np.ndarray
    in_max: np.ndarray
    out_min: np.ndarray
    out_max: np.ndarray

    def __post_init__(self):
        for name in ("in_min", "in_max", "out_min", "out_max"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if np.any(self.in_max <= self.in_min) or np.any(self.out_max <= self.out_min):
            raise ValueError("every feature needs max > min")

    @classmethod
    def fit(cls, X, Y) -> "NormalizationSpec":
        X, Y = np.asarray(X, float), np.asarray(Y, float)
        return cls(X.min(axis=0), X.max(axis=0), Y.min(axis=0), Y.max(axis=0))

    @classmethod
    def identity(cls, n_in: int = 2, n_out: int = 2) -> "NormalizationSpec":
        return cls(-np.ones(n_in), np.ones(n_in), -np.ones(n_out), np.ones(n_out))

    @staticmethod
    def _to_unit(x, lo, hi):
        return 2.0 * (x - lo) / (hi - lo) - 1.0

    @staticmethod
    def _from_unit(u, lo, hi):
        return lo + 0.5 * (u + 1.0) * (hi - lo)

    def normalize_inputs(self, X):
        return self._to_unit(np.asarray(X, float), self.in_min, self.in_max)

    def normalize_targets(self, Y):
        return self._to_unit(np.asarray(Y, float), self.out_min, self.out_max)

    def denormalize_targets(self, U):
        return self._from_unit(np.asarray(U, float), self.out_min, self.out_max)

    def denormalize_inputs(self, U):
        return self._from_unit(np.asarray(U, float), self.in_min, self.in_max)


@dataclass(frozen=True)
class Layer:
    W: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)
    activation: str = "tanh"

    def __post_init__(self):
        object.__setattr__(self, "W", np.atleast_2d(np.asarray(self.W, float)))
        object.__setattr__(self, "b", np.asarray(self.b, float).reshape(-1))
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.W.shape[0] != self.b.shape[0]:
            raise ValueError("bias length must match the weight rows")


@dataclass(frozen=True)
class MlpModel:
    layers: tuple

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if not layers:
            raise ValueError("model needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if b.W.shape[1] != a.W.shape[0]:
                raise ValueError("consecutive layer dimensions are incompatible")
        if layers[-1].activation != "linear":
            raise ValueError("final layer must be linear")

    @classmethod
    def initialise(cls, sizes, rng: np.random.Generator) -> "MlpModel":
        """Nguyen-Widrow-like scaled Gaussian initialisation."""
        layers = []
        for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            last = i == len(sizes) - 2
            W = rng.normal(scale=1.0 / math.sqrt(n_in), size=(n_out, n_in))
            b = rng.normal(scale=0.1, size=n_out)
            layers.append(Layer(W, b, "linear" if last else "tanh"))
        return cls(tuple(layers))

    @property
    def sizes(self) -> list:
        return [self.layers[0].W.shape[1]] + [l.W.shape[0] for l in self.layers]

    @property
    def n_params(self) -> int:
        return sum(l.W.size + l.b.size for l in self.layers)

    def flat(self) -> np.ndarray:
        return np.concatenate([np.concatenate([l.W.ravel(), l.b]) for l in self.layers])

    def with_flat(self, theta) -> "MlpModel":
        theta = np.asarray(theta, float)
        out, k = [], 0
        for l in self.layers:
            nW, nb = l.W.size, l.b.size
            out.append(Layer(theta[k : k + nW].reshape(l.W.shape), theta[k + nW : k + nW + nb], l.activation))
            k += nW + nb
        return MlpModel(tuple(out))

    def __call__(self, U: np.ndarray) -> np.ndarray:
        """Evaluate on normalised inputs ``U`` of shape (n, n_in)."""
        A = np.atleast_2d(U)
        for l in self.layers:
            A = ACTIVATIONS[l.activation](A @ l.W.T + l.b)
        return A


def forward(m: MlpModel, n: NormalizationSpec, tau_e, theta_m_dot):
    """``(F_hat, x_dot_hat)`` for scalar or array inputs."""
    tau_e = np.asarray(tau_e, float)
    w = np.asarray(theta_m_dot, float)
    X = np.stack([np.ravel(tau_e), np.ravel(w)], axis=1)
    Y = n.denormalize_targets(m(n.normalize_inputs(X)))
    shape = np.broadcast(tau_e, w).shape
    F, xd = Y[:, 0].reshape(shape), Y[:, 1].reshape(shape)
    if not shape:
        return float(F), float(xd)
    return F, xd


def mse(y, y_hat) -> float:
    y, y_hat = np.asarray(y, float), np.asarray(y_hat, float)
    if y.size == 0:
        raise ValueError("mse of an empty sample")
    if y.shape != y_hat.shape:
        raise ValueError("shape mismatch")
    return float(np.mean((y - y_hat) ** 2))


def _jacobian(m: MlpModel, U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Network output (n, k) and d output / d params as (n*k, P), sample-major."""
    acts = [U]
    pre = []
    A = U
    for l in m.layers:
        Z = A @ l.W.T + l.b
        pre.append(Z)
        A = ACTIVATIONS[l.activation](Z)
        acts.append(A)
    n, k = A.shape
    blocks = [None] * len(m.layers)
    # D[s, o, j]: derivative of output o w.r.t. pre-activation j of the current layer
    D = np.broadcast_to(np.eye(k), (n, k, k)).copy()
    for i in range(len(m.layers) - 1, -1, -1):
        l = m.layers[i]
        if l.activation == "tanh":
            D = D * (1.0 - acts[i + 1] ** 2)[:, None, :]
        dW = np.einsum("soj,si->soji", D, acts[i]).reshape(n, k, -1)
        blocks[i] = np.concatenate([dW, D], axis=2)
        if i > 0:
            D = D @ l.W
    Jac = np.concatenate(blocks, axis=2).reshape(n * k, -1)
    return A, Jac


# --------------------------------------------------------------------------- training


@dataclass(frozen=True)
class TrainingConfig:
    hidden: tuple = (64, 48, 32, 16, 8)
    max_epochs: int = 1000
    patience: int = 30
    split: tuple = (0.7, 0.2, 0.1)
    optimizer: str = "lm"  # "lm" or "gd" (momentum gradient descent)
    seed: int = 0
    mu0: float = 1e-3
    mu_max: float = 1e10
    learning_rate: float = 0.01
    momentum: float = 0.9
    goal: float = 0.0

    def __post_init__(self):
        if abs(sum(self.split) - 1.0) > 1e-9 or any(r < 0 for r in self.split):
            raise ValueError("split ratios must be non-negative and sum to 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.optimizer not in ("lm", "gd"):
            raise ValueError("optimizer must be 'lm' or 'gd'")


@dataclass
class TrainingReport:
    train_mse: list = field(default_factory=list)
    val_mse: list = field(default_factory=list)
    test_mse: float = float("nan")
    initial_val_mse: float = float("nan")
    best_epoch: int = 0
    stop_reason: str = ""
    correlation: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "train_mse": self.train_mse,
            "val_mse": self.val_mse,
            "test_mse": self.test_mse,
            "initial_val_mse": self.initial_val_mse,
            "best_epoch": self.best_epoch,
            "stop_reason": self.stop_reason,
            "correlation": self.correlation,
        }


@dataclass
class Dataset:
    tau_e: np.ndarray
    omega_m: np.ndarray
    F_ext: np.ndarray
    x_dot: np.ndarray

    COLUMNS = ("tau_e", "omega_m", "F_ext", "x_dot")

    def __post_init__(self):
        for c in self.COLUMNS:
            setattr(self, c, np.asarray(getattr(self, c), float).ravel())
        n = {len(getattr(self, c)) for c in self.COLUMNS}
        if len(n) != 1:
            raise ValueError("dataset columns differ in length")

    def __len__(self):
        return len(self.tau_e)

    @property
    def inputs(self) -> np.ndarray:
        return np.stack([self.tau_e, self.omega_m], axis=1)

    @property
    def targets(self) -> np.ndarray:
        return np.stack([self.F_ext, self.x_dot], axis=1)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for row in zip(*(getattr(self, c) for c in self.COLUMNS)):
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            if tuple(header) != cls.COLUMNS:
                raise ValueError(f"dataset header must be {cls.COLUMNS}, got {header}")
            rows = np.array([[float(v) for v in row] for row in r])
        if rows.size == 0:
            raise ValueError("dataset is empty")
        return cls(*rows.T)


def split_indices(n: int, ratios, rng: np.random.Generator):
    perm = rng.permutation(n)
    n_train = int(round(ratios[0] * n))
    n_val = int(round(ratios[1] * n))
    return perm[:n_train], perm[n_train : n_train + n_val], perm[n_train + n_val :]


def _residual(model, U, T):
    return (model(U) - T).ravel()


def _correlation(a, b) -> float:
    if np.std(a) == 0 or np.std(b) == 0:
        return float("nan")
    return float(np.corrcoef(a, b)[0, 1])


def train(data: Dataset, cfg: TrainingConfig = TrainingConfig()):
    """Fit a network; returns ``(model, normalization, report)``.

    The returned model is the one with the lowest validation MSE seen.
    Accepted Levenberg-Marquardt steps never increase the training MSE.
    """
    if len(data) == 0:
        raise TrainingError("empty dataset")
    X, Y = data.inputs, data.targets
    if np.ptp(X[:, 0]) == 0 or np.ptp(X[:, 1]) == 0:
        raise TrainingError("dataset must vary in both inputs")
    rng = np.random.default_rng(cfg.seed)
    norm = NormalizationSpec.fit(X, Y)
    U, T = norm.normalize_inputs(X), norm.normalize_targets(Y)
    i_tr, i_va, i_te = split_indices(len(data), cfg.split, rng)
    if len(i_va) == 0:
        i_va = i_tr
    model = MlpModel.initialise([2, *cfg.hidden, 2], rng)
    report = TrainingReport()

    def loss(m, idx):
        return mse(m(U[idx]), T[idx])

    best, best_val = model, loss(model, i_va)
    report.initial_val_mse = best_val
    fails = 0
    mu = cfg.mu0
    velocity = np.zeros(model.n_params)
    report.stop_reason = "max_epochs"
    for epoch in range(cfg.max_epochs):
        theta = model.flat()
        current = loss(model, i_tr)
        if cfg.optimizer == "lm":
            out, Jac = _jacobian(model, U[i_tr])
            e = (out - T[i_tr]).ravel()
            JtJ = Jac.T @ Jac
            g = Jac.T @ e
            accepted = False
            while mu <= cfg.mu_max:
                try:
                    step = np.linalg.solve(JtJ + mu * np.eye(len(theta)), -g)
                except np.linalg.LinAlgError:
                    mu *= 10.0
                    continue
                trial = model.with_flat(theta + step)
                new = loss(trial, i_tr)
                if np.isfinite(new) and new < current:
                    model, accepted = trial, True
                    mu = max(mu * 0.1, 1e-20)
                    break
                mu *= 10.0
            if not accepted:
                report.stop_reason = "mu_max"
                report.train_mse.append(current)
                report.val_mse.append(loss(model, i_va))
                break
        else:
            out, Jac = _jacobian(model, U[i_tr])
            e = (out - T[i_tr]).ravel()
            grad = 2.0 * Jac.T @ e / e.size
            velocity = cfg.momentum * velocity - cfg.learning_rate * grad
            model = model.with_flat(theta + velocity)
        tr, va = loss(model, i_tr), loss(model, i_va)
        if not (np.isfinite(tr) and np.isfinite(va)):
            raise TrainingError(f"non-finite loss at epoch {epoch} (train={tr}, val={va})")
        if cfg.optimizer == "lm" and tr > current:
            raise TrainingError("accepted LM step increased the training MSE")
        report.train_mse.append(tr)
        report.val_mse.append(va)
        if va < best_val:
            best, best_val, fails = model, va, 0
            report.best_epoch = epoch + 1
        else:
            fails += 1
            if fails >= cfg.patience:
                report.stop_reason = "patience"
                break
        if tr <= cfg.goal:
            report.stop_reason = "goal"
            break
    test_idx = i_te if len(i_te) else i_va
    report.test_mse = loss(best, test_idx)
    pred = best(U)
    for name, idx in (("train", i_tr), ("val", i_va), ("test", test_idx)):
        report.correlation[name] = [_correlation(pred[idx, j], T[idx, j]) for j in range(2)]
    return best, norm, report


# --------------------------------------------------------------------------- physics channel


def physics_force(theta_m_dot, tau_e, P: EmlaParams, theta_m_ddot=0.0, reflected_inertia: float | None = None):
    """Analytic rod force from rotor torque balance, without gear losses.

    ``(2 pi N / rho) [tau_e - J theta_dd - C_m theta_d - tau_C tanh(theta_d / omega_eps)]``.
    """
    M = P.motor
    J = reflected_inertia if reflected_inertia is not None else controller_inertia(P)
    friction = M.C_m * np.asarray(theta_m_dot) + M.tau_C * np.tanh(np.asarray(theta_m_dot) / M.omega_eps)
    return (np.asarray(tau_e) - J * np.asarray(theta_m_ddot) - friction) / P.lead_ratio


def physics_speed(theta_m_dot, P: EmlaParams):
    return P.lead_ratio * np.asarray(theta_m_dot)


def controller_inertia(P: EmlaParams, mode: str = "lead", eta_f: float = 0.0) -> float:
    """Rotor-side inertia used in the force/current model.

    ``"lead"`` reflects the rod mass through the screw lead (dimensionally
    consistent); ``"literal"`` uses ``J_m + M_act / (N_gear + eta_f)``.
    """
    if mode == "lead":
        return P.J_eq + P.drive.M_act * P.lead_ratio**2
    if mode == "literal":
        return P.motor.J_m + P.drive.M_act / (P.drive.N_gear + eta_f)
    raise ValueError("mode must be 'lead' or 'literal'")


def efficiency_estimate(tau_e, theta_m_dot, F_hat, x_dot_hat, losses: LossModel, i_d=0.0, i_q=None, k_t=None):
    """Quadrant-aware efficiency; ``None`` where undefined.

    Currents for the loss model default to ``i_d = 0`` and ``i_q = tau_e / k_t``.
    """
    if not (tau_e > 0 and theta_m_dot != 0):
        return None
    if i_q is None:
        i_q = tau_e / k_t if k_t else 0.0
    p_loss = losses.total(i_d, i_q, theta_m_dot)
    p_in = theta_m_dot * tau_e
    p_out = x_dot_hat * F_hat
    if theta_m_dot > 0:
        denom = p_in + p_loss
        return None if denom == 0 else p_out / denom
    return None if p_out == 0 else (p_in - p_loss) / p_out


# --------------------------------------------------------------------------- plant data


def steady_operating_point(F_ext, x_dot, P: EmlaParams):
    """Motor torque and speed holding ``F_ext`` at constant rod speed ``x_dot``."""
    from .emla import load_torque

    M, D = P.motor, P.drive
    w = x_dot / P.lead_ratio
    F_s = F_ext + D.C_act * x_dot
    tau_bd = F_s * D.rho / TWO_PI
    tau_e = P.C_eq * w + M.tau_C * math.tanh(w / M.omega_eps) + load_torque(tau_bd, w, D)
    return tau_e, w


@dataclass(frozen=True)
class DisturbanceOracle:
    """Known smooth deviation of the 'measured' actuator from the plant model:
    ``F_meas = F (1 - c_F F/F_ref - c_v (v/v_ref)^2)`` and
    ``x_dot_meas = x_dot (1 - c_x F/F_ref)``."""

    c_F: float = 0.03
    c_v: float = 0.02
    c_x: float = 0.01
    F_ref: float = 70e3
    v_ref: float = 0.07

    @classmethod
    def none(cls) -> "DisturbanceOracle":
        return cls(0.0, 0.0, 0.0)

    def apply(self, F, v):
        F, v = np.asarray(F, float), np.asarray(v, float)
        Fm = F * (1.0 - self.c_F * F / self.F_ref - self.c_v * (v / self.v_ref) ** 2)
        vm = v * (1.0 - self.c_x * F / self.F_ref)
        return Fm, vm


@dataclass(frozen=True)
class GridSpec:
    F_min: float = 0.0
    F_max: float = 70e3
    v_min: float = 0.0
    v_max: float = 0.07
    n_force: int = 36
    n_speed: int = 36

    def axes(self):
        return np.linspace(self.F_min, self.F_max, self.n_force), np.linspace(self.v_min, self.v_max, self.n_speed)


def generate_dataset(
    P: EmlaParams,
    grid: GridSpec = GridSpec(),
    disturbance: DisturbanceOracle = DisturbanceOracle(),
    noise_std: float = 0.0,
    seed: int = 0,
    log=None,
) -> Dataset:
    """Sweep the (load, speed) envelope and record steady motor/rod pairs.

    Points whose steady state cannot be evaluated are skipped and logged.
    """
    rng = np.random.default_rng(seed)
    Fs, vs = grid.axes()
    rows = []
    for F in Fs:
        for v in vs:
            try:
                tau_e, w = steady_operating_point(F, v, P)
            except (ValueError, OverflowError) as exc:
                if log:
                    log(f"skipped F={F:.1f} v={v:.4f}: {exc}")
                continue
            if not (math.isfinite(tau_e) and math.isfinite(w)):
                if log:
                    log(f"skipped F={F:.1f} v={v:.4f}: non-finite steady state")
                continue
            Fm, vm = disturbance.apply(F, v)
            rows.append((tau_e, w, float(Fm), float(vm)))
    arr = np.array(rows)
    if noise_std > 0:
        scale = np.maximum(np.ptp(arr[:, 2:], axis=0), 1e-12)
        arr[:, 2:] += rng.normal(scale=noise_std, size=arr[:, 2:].shape) * scale
    return Dataset(*arr.T)


# --------------------------------------------------------------------------- hybrid model


@dataclass(frozen=True)
class HybridModel:
    params: EmlaParams
    model: MlpModel | None
    norm: NormalizationSpec | None
    alpha: float = 0.5
    losses: LossModel | None = None
    inertia_mode: str = "lead"
    eta_f: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(min(1.0, max(0.0, self.alpha))))
        if self.losses is None:
            object.__setattr__(self, "losses", LossModel.for_motor(self.params.motor))
        if self.alpha > 0 and self.model is None:
            raise ValueError("alpha > 0 needs a trained surrogate")

    @property
    def inertia(self) -> float:
        return controller_inertia(self.params, self.inertia_mode, self.eta_f)

    def surrogate(self, tau_e, theta_m_dot):
        if self.model is None:
            return physics_force(theta_m_dot, tau_e, self.params, 0.0, self.inertia), physics_speed(theta_m_dot, self.params)
        return forward(self.model, self.norm, tau_e, theta_m_dot)


def _blend(phys, sur, alpha):
    # endpoints return the operand itself; the affine form can round differently
    if alpha == 1.0:
        return sur
    return phys + alpha * (sur - phys)


def hybrid_predict(h: HybridModel, theta_m_dot: float, tau_e: float, theta_m_ddot: float = 0.0):
    """``(F_hyb, x_dot_hyb, eta_hyb)``; ``eta_hyb`` is ``None`` when either
    efficiency operand is undefined."""
    P = h.params
    F_p = float(physics_force(theta_m_dot, tau_e, P, theta_m_ddot, h.inertia))
    x_p = float(physics_speed(theta_m_dot, P))
    if h.alpha == 0.0:
        F_s, x_s = F_p, x_p
    else:
        F_s, x_s = h.surrogate(tau_e, theta_m_dot)
    k_t = P.torque_constant
    eta_p = efficiency_estimate(tau_e, theta_m_dot, F_p, x_p, h.losses, k_t=k_t)
    eta_s = efficiency_estimate(tau_e, theta_m_dot, F_s, x_s, h.losses, k_t=k_t)
    eta = None if eta_p is None or eta_s is None else _blend(eta_p, eta_s, h.alpha)
    return _blend(F_p, F_s, h.alpha), _blend(x_p, x_s, h.alpha), eta


def efficiency_map(h: HybridModel, forces, speeds) -> np.ndarray:
    """Hybrid efficiency over a (force, speed) grid; NaN marks undefined cells.

    Each grid point is mapped to the plant's steady motor torque and speed.
    """
    forces, speeds = np.asarray(forces, float), np.asarray(speeds, float)
    if np.any(np.diff(forces) <= 0) or np.any(np.diff(speeds) <= 0):
        raise ValueError("grids must be strictly increasing")
    out = np.full((len(forces), len(speeds)), np.nan)
    for i, F in enumerate(forces):
        for j, v in enumerate(speeds):
            tau_e, w = steady_operating_point(F, v, h.params)
            eta = hybrid_predict(h, w, tau_e)[2]
            if eta is not None:
                out[i, j] = eta
    return out


def write_efficiency_map(path, forces, speeds, eta) -> None:
    """CSV: first row ``F_ext\\x_dot`` then speeds; each next row a force and its row."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["F_ext\\x_dot"] + [repr(float(v)) for v in speeds])
        for F, row in zip(forces, eta):
            w.writerow([repr(float(F))] + ["nan" if np.isnan(e) else repr(float(e)) for e in row])


# --------------------------------------------------------------------------- serialisation


def _payload(model: MlpModel, norm: NormalizationSpec) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "layers": [
            {"shape": list(l.W.shape), "activation": l.activation, "W": l.W.ravel().tolist(), "b": l.b.tolist()}
            for l in model.layers
        ],
        "normalization": {k: getattr(norm, k).tolist() for k in ("in_min", "in_max", "out_min", "out_max")},
    }


def _checksum(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def save_model(path, model: MlpModel, norm: NormalizationSpec, extra: dict | None = None) -> None:
    payload = _payload(model, norm)
    doc = {**payload, "checksum": _checksum(payload)}
    if extra:
        doc["metadata"] = extra
    Path(path).write_text(json.dumps(doc, indent=1))


def load_model(path) -> tuple[MlpModel, NormalizationSpec]:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFileError(f"cannot read model file {path}: {exc}") from exc
    if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
        raise ModelFileError("unsupported model format or version")
    payload = {k: doc[k] for k in ("format", "version", "layers", "normalization")}
    if _checksum(payload) != doc.get("checksum"):
        raise ModelFileError("model checksum mismatch")
    layers = tuple(
        Layer(np.array(l["W"]).reshape(l["shape"]), np.array(l["b"]), l["activation"]) for l in doc["layers"]
    )
    return MlpModel(layers), NormalizationSpec(**doc["normalization"])
