"""Reference trajectories: closed polylines with quintic velocity blends.

Each segment is traversed at constant velocity. Around every corner the
velocity switches to the next segment's value along a quintic smoothstep of
width ``blend_time`` centred on the corner time, so the velocity is C2 and the
displacement of each segment is preserved exactly. The path starts and ends at
rest, so the total duration is ``blend_time + sum(segment durations)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

KINDS = ("cubic-path", "planar-triangle", "waypoints", "hold")

# Closed 12-edge walk over the cube corners with no immediate reversals.
# Corner index bits select the (axis 0, axis 1, axis 2) offsets.
CUBE_WALK = (0, 1, 3, 2, 0, 1, 5, 4, 6, 7, 5, 4, 0)


class TrajectoryError(ValueError):
    """Invalid trajectory specification or evaluation time."""


@dataclass(frozen=True)
class TrajectorySpec:
    kind: str = "cubic-path"
    edge_length: float = 0.2
    segment_duration: float | tuple[float, ...] = 0.5
    blend_time: float = 0.2
    axes: tuple[tuple[float, float, float], ...] = ((-1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
    waypoints: tuple[tuple[float, float, float], ...] = ()
    laps: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise TrajectoryError(f"unknown trajectory kind {self.kind!r}; expected one of {KINDS}")
        if self.blend_time <= 0:
            raise TrajectoryError("blend_time must be positive")
        if self.edge_length < 0:
            raise TrajectoryError("edge_length must be non-negative")
        if self.laps < 1:
            raise TrajectoryError("laps must be at least 1")
        axes = np.asarray(self.axes, dtype=float)
        if axes.shape != (3, 3) or np.any(np.linalg.norm(axes, axis=1) < 1e-12):
            raise TrajectoryError("axes must be three non-zero 3-vectors")

    @classmethod
    def from_dict(cls, d: dict) -> "TrajectorySpec":
        d = dict(d or {})
        for key in ("axes", "waypoints"):
            if key in d:
                d[key] = tuple(tuple(float(c) for c in row) for row in d[key])
        if isinstance(d.get("segment_duration"), list):
            d["segment_duration"] = tuple(float(x) for x in d["segment_duration"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise TrajectoryError(f"unknown trajectory keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        seg = self.segment_duration
        return {
            "kind": self.kind,
            "edge_length": self.edge_length,
            "segment_duration": list(seg) if isinstance(seg, tuple) else seg,
            "blend_time": self.blend_time,
            "axes": [list(a) for a in self.axes],
            "waypoints": [list(w) for w in self.waypoints],
            "laps": self.laps,
        }

    def offsets(self) -> np.ndarray:
        """Waypoint offsets from the start point, shape (n_points, 3)."""
        u = np.asarray(self.axes, dtype=float)
        u = u / np.linalg.norm(u, axis=1, keepdims=True)
        a = self.edge_length
        if self.kind == "cubic-path":
            corner = lambda k: a * ((k & 1) * u[0] + ((k >> 1) & 1) * u[1] + ((k >> 2) & 1) * u[2])
            loop = [corner(k) for k in CUBE_WALK]
        elif self.kind == "planar-triangle":
            apex = a * (0.5 * u[0] + np.sqrt(3.0) / 2.0 * u[1])
            loop = [np.zeros(3), a * u[0], apex, np.zeros(3)]
        elif self.kind == "hold":
            loop = [np.zeros(3), np.zeros(3)]
        else:
            if len(self.waypoints) < 2:
                raise TrajectoryError("custom trajectories need at least two waypoints")
            loop = [np.asarray(w, dtype=float) for w in self.waypoints]
        pts = [loop[0]]
        for _ in range(self.laps):
            pts.extend(loop[1:])
        return np.array(pts)


def _smoothstep(tau):
    tau = np.clip(tau, 0.0, 1.0)
    return tau**3 * (10.0 - 15.0 * tau + 6.0 * tau**2)


def _smoothstep_rate(tau):
    inside = (tau > 0.0) & (tau < 1.0)
    return np.where(inside, 30.0 * tau**2 * (1.0 - tau) ** 2, 0.0)


def _smoothstep_integral(tau):
    t = np.clip(tau, 0.0, 1.0)
    inner = t**4 * (2.5 - 3.0 * t + t**2)
    return inner + np.maximum(tau - 1.0, 0.0)


@dataclass(frozen=True)
class Trajectory:
    """A blended polyline anchored at ``start``."""

    points: np.ndarray
    durations: np.ndarray
    blend_time: float
    corner_times: np.ndarray = field(init=False)
    velocity_steps: np.ndarray = field(init=False)

    def __post_init__(self):
        n_seg = len(self.points) - 1
        if self.durations.shape != (n_seg,):
            raise TrajectoryError(f"expected {n_seg} segment durations, got {self.durations.shape}")
        if np.any(self.durations <= 0):
            raise TrajectoryError("segment durations must be positive")
        if np.any(self.durations < self.blend_time):
            raise TrajectoryError("segment durations must be at least the blend time")
        seg_v = np.diff(self.points, axis=0) / self.durations[:, None]
        padded = np.vstack([np.zeros(3), seg_v, np.zeros(3)])
        corners = 0.5 * self.blend_time + np.concatenate([[0.0], np.cumsum(self.durations)])
        object.__setattr__(self, "corner_times", corners)
        object.__setattr__(self, "velocity_steps", np.diff(padded, axis=0))

    @property
    def duration(self) -> float:
        return float(self.blend_time + self.durations.sum())

    @property
    def path_length(self) -> float:
        """Length of the underlying polyline (corner cutting not subtracted)."""
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())

    def __call__(self, t):
        """Position, velocity and acceleration at time(s) ``t``."""
        t_arr = np.asarray(t, dtype=float)
        T = self.duration
        tol = 1e-12 * max(T, 1.0)
        if np.any(t_arr < -tol) or np.any(t_arr > T + tol):
            raise TrajectoryError(f"time outside [0, {T:.6g}] s")
        b = self.blend_time
        tau = (t_arr[..., None] - self.corner_times) / b + 0.5
        dv = self.velocity_steps
        p = self.points[0] + b * _smoothstep_integral(tau) @ dv
        v = _smoothstep(tau) @ dv
        a = _smoothstep_rate(tau) @ dv / b
        return p, v, a


def build_trajectory(spec: TrajectorySpec, start=(0.0, 0.0, 0.0)) -> Trajectory:
    offsets = spec.offsets()
    n_seg = len(offsets) - 1
    seg = spec.segment_duration
    if isinstance(seg, tuple):
        if spec.laps > 1 and len(seg) * spec.laps == n_seg:
            seg = seg * spec.laps
        durations = np.asarray(seg, dtype=float)
    else:
        durations = np.full(n_seg, float(seg))
    return Trajectory(np.asarray(start, dtype=float) + offsets, durations, float(spec.blend_time))


def gen_trajectory(spec: TrajectorySpec, t, start=(0.0, 0.0, 0.0)):
    """Desired position, velocity and acceleration of the tool at time ``t``."""
    return build_trajectory(spec, start)(t)
