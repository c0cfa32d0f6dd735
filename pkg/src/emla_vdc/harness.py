"""Scenario runner: builds the plant and controller from a config, co-simulates
them at the control tick, computes metrics and writes traces.

Outputs are versioned: ``trace.csv`` (one column per signal, first line is a
``# schema:`` comment), ``metrics.json`` (deterministic numbers only) and
``timing.json`` (wall-clock statistics, kept apart so reruns stay identical).
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .config import ConfigError, gravity
from .controller import (
    CONDITIONS,
    ControllerSettings,
    GainSet,
    TaskReference,
    VdcController,
    gain_condition_check,
)
from .emla import EmlaParams
from .hdrm import ManipulatorInertia
from .linkage import ManipulatorGeometry, SingularityError, solve_pose
from .plant import HdrmPlant, PlantInvariantError, energy_balance
from .rigid_body import AdaptationStepError, DomainError, RigidBodyModel, divergence_from_factors, theta_to_pseudo
from .surrogate import (
    Dataset,
    DisturbanceOracle,
    GridSpec,
    HybridModel,
    ModelFileError,
    TrainingConfig,
    generate_dataset,
    load_model,
    train,
)
from .trajectory import Trajectory, TrajectorySpec, build_trajectory

TRACE_SCHEMA = "emla-vdc-trace/1"
METRICS_SCHEMA = "emla-vdc-metrics/1"
SWEEP_SCALES = (0.4, 0.2, 0.0, -0.2, -0.4)
# Actuator parameters the uncertainty scale applies to.  Electrical ones stay
# exact: the gain conditions keep the d-axis feedback too weak to reject a
# large error in the speed-voltage decoupling terms.
SCALED_EMLA_PARAMS = ("J_m", "C_m", "tau_C", "M_act")
VARIANT_ORDER = ("adaptive", "modular", "pd")
OUTPUT_ENV = "EMLA_VDC_OUT"


class ScenarioError(ConfigError):
    """Scenario configuration that cannot be run."""


# --------------------------------------------------------------------------- configuration


@dataclass(frozen=True)
class ScenarioConfig:
    model: dict  # merged config: geometry, inertia, payload, gravity, home, emla, controller
    trajectory: TrajectorySpec
    name: str = "scenario"
    variant: str = "adaptive"
    scale: float = 0.0
    seed: int = 0
    dt: float = 1e-3
    duration: float | None = None
    settle_time: float = 0.0
    inner_steps: int = 10
    alpha: float = 0.5
    adaptation_off_at: float | None = None
    sensor_noise: tuple = (0.0, 0.0, 0.0)  # std of zeta, zeta_dot, currents

    def __post_init__(self):
        if self.variant not in VARIANT_ORDER:
            raise ScenarioError(f"variant must be one of {VARIANT_ORDER}, got {self.variant!r}")
        if not self.dt > 0:
            raise ScenarioError("dt must be positive")
        if self.duration is not None and not self.duration > 0:
            raise ScenarioError("duration must be positive")
        if not 0.0 <= self.alpha < 1.0:
            raise ScenarioError("alpha must lie in [0, 1)")
        if self.scale <= -1.0:
            raise ScenarioError("scale must be above -1")
        if self.inner_steps < 1:
            raise ScenarioError("inner_steps must be at least 1")
        for key in ("geometry", "inertia", "gravity", "home", "controller"):
            if key not in self.model:
                raise ScenarioError(f"config section {key!r} is missing")

    @classmethod
    def from_config(cls, cfg: dict) -> "ScenarioConfig":
        sc = dict(cfg.get("scenario") or {})
        ctl = cfg.get("controller") or {}
        noise = sc.pop("sensor_noise", None) or {}
        try:
            traj = TrajectorySpec.from_dict(sc.pop("trajectory", {"kind": "hold"}))
            known = {f for f in cls.__dataclass_fields__} - {"model", "trajectory", "dt", "alpha", "sensor_noise"}
            unknown = set(sc) - known
            if unknown:
                raise ScenarioError(f"unknown scenario keys: {sorted(unknown)}")
            model = {k: v for k, v in cfg.items() if k != "scenario"}
            return cls(
                model=model,
                trajectory=traj,
                dt=float(ctl.get("dt", 1e-3)),
                alpha=float(ctl.get("alpha", 0.5)),
                sensor_noise=(float(noise.get("zeta", 0.0)), float(noise.get("zeta_dot", 0.0)), float(noise.get("current", 0.0))),
                **sc,
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ScenarioError(str(exc)) from exc

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)

    def summary(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k not in ("model", "trajectory")}
        d["sensor_noise"] = list(self.sensor_noise)
        d["trajectory"] = self.trajectory.to_dict()
        return d


def emla_params(model: dict) -> list:
    spec = model.get("emla") or {}
    specs = spec if isinstance(spec, list) else [spec] * 3
    if len(specs) != 3:
        raise ScenarioError("emla must be one mapping or a list of three")
    try:
        return [EmlaParams.from_dict(s or {}) for s in specs]
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"invalid EMLA parameters: {exc}") from exc


def true_inertia(model: dict) -> ManipulatorInertia:
    inertia = ManipulatorInertia.from_dict(model["inertia"])
    pl = model.get("payload")
    if pl and pl.get("mass", 0) > 0:
        inertia = inertia.with_payload(pl["body"], float(pl["mass"]), pl["com"])
    return inertia


def load_surrogate(ref: str):
    """Model file given as a path or as the name of a packaged data file."""
    path = Path(ref)
    if not path.is_file():
        packaged = resources.files("emla_vdc").joinpath("data", ref)
        if not packaged.is_file():
            raise ScenarioError(f"surrogate model {ref!r} not found")
        with resources.as_file(packaged) as p:
            return load_model(p)
    return load_model(path)


def loop_surrogate_dataset(P: EmlaParams, n: int = 25) -> Dataset:
    """Steady operating points over pushing/pulling loads and both directions,
    the envelope the arm actuators visit."""
    return generate_dataset(P, GridSpec(-40e3, 80e3, -0.25, 0.25, n, n), DisturbanceOracle.none())


def train_loop_surrogate(P: EmlaParams, seed: int = 0, hidden=(16, 16), max_epochs: int = 200):
    data = loop_surrogate_dataset(P)
    return train(data, TrainingConfig(hidden=tuple(hidden), max_epochs=max_epochs, patience=20, seed=seed))


# --------------------------------------------------------------------------- set-up


@dataclass
class Setup:
    plant: HdrmPlant
    controller: VdcController
    trajectory: Trajectory
    R_tool: np.ndarray
    truth: ManipulatorInertia
    truth_factors: dict  # Cholesky factors of the true pseudo-inertias
    mass_matrices: dict
    gains: GainSet
    controller_params: list


def build(cfg: ScenarioConfig) -> Setup:
    m = cfg.model
    try:
        geom = ManipulatorGeometry.from_dict(m["geometry"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"invalid geometry: {exc}") from exc
    truth = true_inertia(m)
    g = gravity(m)
    plant_params = emla_params(m)
    plant = HdrmPlant(geom, truth, plant_params, g, inner_steps=cfg.inner_steps)
    plant.initialise_static(m["home"])
    pose0 = solve_pose(plant.zeta, geom)
    tool = pose0.world["T4"]

    factor = 1.0 + cfg.scale
    estimate = truth.scaled(factor)
    ctl_params = [P.scaled(factor, SCALED_EMLA_PARAMS) for P in plant_params]
    c = m["controller"]
    model = norm = None
    if cfg.alpha > 0:
        try:
            model, norm = load_surrogate(c.get("surrogate", "surrogate_default.json"))
        except ModelFileError as exc:
            raise ScenarioError(str(exc)) from exc
    hybrids = [HybridModel(P, model, norm, alpha=cfg.alpha) for P in ctl_params]
    try:
        gains = GainSet.from_dict(c.get("gains", {}), estimate)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"invalid gains: {exc}") from exc
    settings = ControllerSettings(
        dt=cfg.dt,
        variant=cfg.variant,
        alpha=cfg.alpha,
        theta_ddot_source=c.get("theta_ddot_source", "required"),
        actuator_speed=c.get("actuator_speed", "motor"),
        accel_cutoff_hz=float(c.get("accel_cutoff_hz", 1000.0)),
        required_accel_cutoff_hz=float(c.get("required_accel_cutoff_hz", 100.0)),
        current_ref_cutoff_hz=c.get("current_ref_cutoff_hz", 50.0),
    )
    ctl = VdcController(geom, estimate, hybrids, gains, g, settings)
    traj = build_trajectory(cfg.trajectory, tool.offset)
    return Setup(
        plant,
        ctl,
        traj,
        tool.rotation.copy(),
        truth,
        {k: np.linalg.cholesky(theta_to_pseudo(p)) for k, p in truth.bodies.items()},
        {k: RigidBodyModel(p).mass_matrix() for k, p in truth.bodies.items()},
        gains,
        ctl_params,
    )


# --------------------------------------------------------------------------- trace


def _cols(prefix: str, n: int, start: int = 1) -> list:
    return [f"{prefix}_{i}" for i in range(start, start + n)]


TRACE_COLUMNS = (
    ["t"]
    + [f"p_d_{a}" for a in "xyz"]
    + [f"p_{a}" for a in "xyz"]
    + [f"e_{a}" for a in ("x", "y", "z", "rx", "ry", "rz")]
    + _cols("zeta", 6)
    + _cols("zeta_dot", 6)
    + _cols("zeta_dot_r", 6)
    + _cols("i_d", 3)
    + _cols("i_q", 3)
    + _cols("i_dr", 3)
    + _cols("i_qr", 3)
    + _cols("v_d", 3)
    + _cols("v_q", 3)
    + _cols("x_dot", 3)
    + _cols("x_dot_r", 3)
    + _cols("f", 3)
    + _cols("f_r", 3)
    + _cols("F_hyb", 3)
    + _cols("e_F", 3)
    + _cols("e_d", 3)
    + _cols("beta1", 3)
    + _cols("beta2", 3)
    + _cols("tau_w", 3)
    + ["nu_1", "nu_a", "bregman"]
    + _cols("E_in", 3)
    + _cols("audit", 3)
)
_IDX = {name: i for i, name in enumerate(TRACE_COLUMNS)}


def _span(prefix: str, n: int) -> slice:
    i = _IDX[f"{prefix}_1"] if f"{prefix}_1" in _IDX else _IDX[f"{prefix}_x"]
    return slice(i, i + n)


@dataclass
class Trace:
    data: np.ndarray  # rows x len(TRACE_COLUMNS)

    def __len__(self) -> int:
        return self.data.shape[0]

    def col(self, name: str) -> np.ndarray:
        return self.data[:, _IDX[name]]

    def block(self, prefix: str, n: int) -> np.ndarray:
        return self.data[:, _span(prefix, n)]

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# schema: {TRACE_SCHEMA}\n")
            fh.write(",".join(TRACE_COLUMNS) + "\n")
            np.savetxt(fh, self.data, fmt="%.17g", delimiter=",")

    @classmethod
    def from_csv(cls, path) -> "Trace":
        with open(path) as fh:
            schema = fh.readline().strip()
            header = fh.readline().strip().split(",")
        if schema != f"# schema: {TRACE_SCHEMA}":
            raise ValueError(f"unsupported trace schema line: {schema!r}")
        if header != TRACE_COLUMNS:
            raise ValueError("trace columns do not match the schema")
        data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
        return cls(data.reshape(-1, len(TRACE_COLUMNS)))


# --------------------------------------------------------------------------- metrics


def rmse(reference, actual) -> float:
    """Root mean squared Euclidean error between aligned samples."""
    ref = np.asarray(reference, float)
    act = np.asarray(actual, float)
    if ref.shape != act.shape:
        raise ValueError(f"length mismatch: {ref.shape} vs {act.shape}")
    if ref.shape[0] < 1:
        raise ValueError("need at least one sample")
    d = (ref - act).reshape(ref.shape[0], -1)
    return float(np.sqrt(np.mean(np.sum(d * d, axis=1))))


@dataclass
class MetricsReport:
    status: str  # "ok" or "aborted"
    reason: str
    ticks: int
    sim_time: float
    rmse_axes: dict
    rmse: float
    max_error: float
    joint_rate_rms: list
    gain_margins: dict
    gain_conditions_passed: bool
    nu: dict
    energy_audit: list
    scenario: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"schema": METRICS_SCHEMA, **asdict(self)}


def gain_margin_summary(trace: Trace, gains: GainSet, params: list) -> tuple[dict, bool]:
    """Worst margin of every condition over the run, per actuator."""
    b1, b2 = trace.block("beta1", 3), trace.block("beta2", 3)
    worst = {c: [] for c in CONDITIONS}
    passed = True
    for j, P in enumerate(params):
        M = P.motor
        checks = [gain_condition_check(gains.actuators[j], b1[k, j], b2[k, j], M.L_d, M.L_q) for k in range(len(trace))]
        passed &= all(c.passed for c in checks)
        margins = np.array([c.margins for c in checks])
        worst[CONDITIONS[0]].append(float(margins[:, 0].min()))
        worst[CONDITIONS[1]].append(float(margins[:, 1].min()))
        worst[CONDITIONS[2]].append(float(np.abs(margins[:, 2]).max()))
    return worst, bool(passed)


def compute_metrics(trace: Trace, cfg: ScenarioConfig, gains: GainSet, params: list, status="ok", reason="") -> MetricsReport:
    t = trace.col("t")
    keep = t >= cfg.settle_time - 1e-12
    if not np.any(keep):
        keep = np.ones_like(t, dtype=bool)
    pd, p = trace.block("p_d", 3)[keep], trace.block("p", 3)[keep]
    err = np.linalg.norm(pd - p, axis=1)
    axes = {a: rmse(pd[:, i], p[:, i]) for i, a in enumerate("xyz")}
    dz = trace.block("zeta_dot_r", 6)[keep] - trace.block("zeta_dot", 6)[keep]
    nu = trace.col("nu_1") + trace.col("nu_a")
    dnu = np.diff(nu)
    margins, passed = gain_margin_summary(trace, gains, params)
    return MetricsReport(
        status=status,
        reason=reason,
        ticks=len(trace),
        sim_time=float(t[-1]) if len(t) else 0.0,
        rmse_axes=axes,
        rmse=rmse(pd, p),
        max_error=float(err.max()),
        joint_rate_rms=[float(x) for x in np.sqrt(np.mean(dz * dz, axis=0))],
        gain_margins=margins,
        gain_conditions_passed=passed,
        nu={
            "initial": float(nu[0]),
            "final": float(nu[-1]),
            "max": float(nu.max()),
            "increasing_fraction": float(np.mean(dnu > 0)) if dnu.size else 0.0,
        },
        energy_audit=[float(x) for x in trace.block("audit", 3)[-1]],
        scenario=cfg.summary(),
    )


# --------------------------------------------------------------------------- running


@dataclass
class ScenarioResult:
    trace: Trace
    metrics: MetricsReport
    timing: dict
    theta_hat: dict

    @property
    def aborted(self) -> bool:
        return self.metrics.status != "ok"


def _accompanying(setup: Setup, rec: dict, adaptive: bool) -> tuple[float, float, float]:
    M = setup.mass_matrices
    nu1 = sum(0.5 * float(e @ M[k] @ e) for k, e in rec["V_err"].items() if k in M)
    D = 0.0
    if adaptive:
        D = sum(divergence_from_factors(setup.truth_factors[k], st.factor) for k, st in setup.controller.adapt.items())
    nu_a = 0.0
    for j, h in enumerate(setup.controller.models):
        g = setup.gains.actuators[j]
        b1 = rec["beta"][j, 0]
        K1 = g.k1(b1, h.params.motor.L_q) if b1 != 0 else 0.0
        nu_a += 0.5 * K1 * rec["e_F"][j] ** 2 + 0.5 * g.K2 * rec["e_d"][j] ** 2
    return nu1 + setup.gains.gamma * D, nu_a, D


def run_scenario(cfg: ScenarioConfig, out_dir=None, progress=None) -> ScenarioResult:
    """Co-simulate plant and controller; deterministic for a given config.

    A plant invariant violation (or a singular or non-PD controller step)
    stops the run; the trace up to and including the failing tick is kept
    and the metrics carry ``status = "aborted"``.
    """
    setup = build(cfg)
    plant, ctl, traj = setup.plant, setup.controller, setup.trajectory
    T = traj.duration if cfg.duration is None else float(cfg.duration)
    n = int(math.floor(T / cfg.dt + 1e-9)) + 1
    data = np.zeros((n, len(TRACE_COLUMNS)))
    rng = np.random.default_rng(cfg.seed)
    noise = cfg.sensor_noise
    adaptive = cfg.variant == "adaptive"
    stored0 = None
    status, reason = "ok", ""
    walls = np.zeros(n)
    rows = 0
    t_start = time.perf_counter()
    for k in range(n):
        w0 = time.perf_counter()
        t = k * cfg.dt
        p_d, pdot_d, _ = traj(min(t, traj.duration))
        if cfg.adaptation_off_at is not None and t >= cfg.adaptation_off_at - 1e-12:
            ctl.adaptation_enabled = False
        pose, W = plant.prepare()
        if stored0 is None:
            stored0 = plant.stored_energy()
        m = plant.measurement()
        if any(noise):
            m.zeta = m.zeta + rng.normal(scale=noise[0], size=6)
            m.zeta_dot = m.zeta_dot + rng.normal(scale=noise[1], size=6)
            m.i_d = m.i_d + rng.normal(scale=noise[2], size=3)
            m.i_q = m.i_q + rng.normal(scale=noise[2], size=3)
        row = data[k]
        try:
            v_d, v_q, tau_w, rec = ctl.tick(m, TaskReference(p_d, pdot_d, setup.R_tool), pose, chain=W)
            nu1, nu_a, D = _accompanying(setup, rec, adaptive and ctl.adaptation_enabled)
        except (SingularityError, AdaptationStepError, DomainError, ValueError) as exc:
            status, reason = "aborted", f"controller failure at t={t:.4f}: {exc}"
            break
        tool = pose.world["T4"]
        row[0] = t
        row[_span("p_d", 3)] = p_d
        row[_span("p", 3)] = tool.offset
        row[_span("e", 6)] = rec["task_error"]
        row[_span("zeta", 6)] = plant.zeta
        row[_span("zeta_dot", 6)] = plant.zeta_dot
        row[_span("zeta_dot_r", 6)] = rec["theta_dot_r"]
        row[_span("i_d", 3)] = plant.emla[:, 0]
        row[_span("i_q", 3)] = plant.emla[:, 1]
        row[_span("i_dr", 3)] = rec["i_dr"]
        row[_span("i_qr", 3)] = rec["i_qr"]
        row[_span("v_d", 3)] = v_d
        row[_span("v_q", 3)] = v_q
        row[_span("x_dot", 3)] = rec["x_dot"]
        row[_span("x_dot_r", 3)] = rec["x_dot_r"]
        row[_span("f", 3)] = plant.actuator_forces()
        row[_span("f_r", 3)] = rec["f_r"]
        row[_span("F_hyb", 3)] = rec["F_hyb"]
        row[_span("e_F", 3)] = rec["e_F"]
        row[_span("e_d", 3)] = rec["e_d"]
        row[_span("beta1", 3)] = rec["beta"][:, 0]
        row[_span("beta2", 3)] = rec["beta"][:, 1]
        row[_span("tau_w", 3)] = tau_w
        row[_IDX["nu_1"]], row[_IDX["nu_a"]], row[_IDX["bregman"]] = nu1, nu_a, D
        row[_span("E_in", 3)] = plant.energy[:, 0]
        row[_span("audit", 3)] = energy_balance(plant, stored0)
        rows = k + 1
        if k == n - 1:
            walls[k] = time.perf_counter() - w0
            break
        try:
            plant.advance(v_d, v_q, tau_w, cfg.dt)
        except PlantInvariantError as exc:
            status, reason = "aborted", str(exc)
            walls[k] = time.perf_counter() - w0
            break
        walls[k] = time.perf_counter() - w0
        if progress is not None and k % 500 == 0:
            progress(t, T)
    trace = Trace(data[:rows].copy())
    if rows == 0:
        raise ScenarioError(reason or "scenario produced no samples")
    metrics = compute_metrics(trace, cfg, setup.gains, setup.controller_params, status, reason)
    w = walls[:rows]
    timing = {
        "wall_s": time.perf_counter() - t_start,
        "tick_mean_ms": float(w.mean() * 1e3),
        "tick_max_ms": float(w.max() * 1e3),
    }
    result = ScenarioResult(trace, metrics, timing, ctl.theta_hat())
    if out_dir is not None:
        write_outputs(result, out_dir)
    return result


def write_outputs(result: ScenarioResult, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result.trace.to_csv(out / "trace.csv")
    (out / "metrics.json").write_text(json.dumps(result.metrics.to_dict(), indent=2))
    (out / "timing.json").write_text(json.dumps(result.timing, indent=2))
    return out


def metrics_from_files(out_dir, cfg: ScenarioConfig) -> MetricsReport:
    """Recompute the metrics of a finished run from its exported trace."""
    out = Path(out_dir)
    stored = json.loads((out / "metrics.json").read_text())
    setup_gains = GainSet.from_dict(cfg.model["controller"].get("gains", {}), true_inertia(cfg.model).scaled(1.0 + cfg.scale))
    params = [P.scaled(1.0 + cfg.scale, SCALED_EMLA_PARAMS) for P in emla_params(cfg.model)]
    return compute_metrics(Trace.from_csv(out / "trace.csv"), cfg, setup_gains, params, stored["status"], stored["reason"])


def output_dir(explicit=None, name: str = "run") -> Path:
    """``explicit``, else ``$EMLA_VDC_OUT/<name>``, else ``runs/<name>``."""
    if explicit is not None:
        return Path(explicit)
    base = os.environ.get(OUTPUT_ENV)
    return Path(base) / name if base else Path("runs") / name


# --------------------------------------------------------------------------- batches


def _run_quiet(cfg: ScenarioConfig) -> ScenarioResult:
    return run_scenario(cfg)


def run_many(cfgs: list, workers: int = 1) -> list:
    """Independent scenarios, optionally in separate processes."""
    if workers <= 1 or len(cfgs) <= 1:
        return [run_scenario(c) for c in cfgs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_quiet, cfgs))


@dataclass
class SweepRow:
    scale: float
    metrics: MetricsReport

    @property
    def label(self) -> str:
        if self.scale == 0:
            return "0% (Nominal)"
        return f"{self.scale * 100:+.0f}%"


def uncertainty_sweep(cfg: ScenarioConfig, scales=SWEEP_SCALES, workers: int = 1) -> list:
    """One run per relative error of the controller's body and actuator
    parameters; the plant is unchanged."""
    results = run_many([cfg.with_(scale=float(s)) for s in scales], workers)
    return [SweepRow(float(s), r.metrics) for s, r in zip(scales, results)]


def format_sweep_table(rows: list) -> str:
    lines = [f"{'Uncertainty':<14} {'RMSE [m]':>10}  status"]
    for r in rows:
        lines.append(f"{r.label:<14} {r.metrics.rmse:>10.6f}  {r.metrics.status}")
    return "\n".join(lines)


def compare_controllers(cfg: ScenarioConfig, variants=VARIANT_ORDER, workers: int = 1) -> dict:
    """Run each controller variant on the same trajectory and seed; the result
    maps variant to metrics, ordered from lowest to highest RMSE."""
    results = run_many([cfg.with_(variant=v) for v in variants], workers)
    ranked = sorted(zip(variants, results), key=lambda vr: vr[1].metrics.rmse)
    return {v: r.metrics for v, r in ranked}


def format_comparison(report: dict) -> str:
    lines = [f"{'rank':<5} {'controller':<10} {'RMSE [m]':>10}  status"]
    for i, (v, m) in enumerate(report.items(), 1):
        lines.append(f"{i:<5} {v:<10} {m.rmse:>10.6f}  {m.status}")
    return "\n".join(lines)
