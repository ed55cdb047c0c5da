"""Planar point-mass kinematics and the stochastic target maneuver model.

Vehicles fly at constant speed and can only accelerate laterally, so every
integration step is an exact circular arc (or a straight segment when the
lateral command vanishes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

# Below this lateral acceleration the arc degenerates to a straight line.
STRAIGHT_EPS = 1e-12


@dataclass(frozen=True, slots=True)
class Vec2:
    x: float
    y: float

    def __add__(self, other: Vec2) -> Vec2:
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: Vec2) -> Vec2:
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, k: float) -> Vec2:
        return Vec2(self.x * k, self.y * k)

    __rmul__ = __mul__

    def __neg__(self) -> Vec2:
        return Vec2(-self.x, -self.y)

    def dot(self, other: Vec2) -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other: Vec2) -> float:
        """Scalar z-component of the planar cross product."""
        return self.x * other.y - self.y * other.x

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def rotated(self, phi: float) -> Vec2:
        c, s = math.cos(phi), math.sin(phi)
        return Vec2(c * self.x - s * self.y, s * self.x + c * self.y)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)

    @classmethod
    def from_seq(cls, seq: Sequence[float]) -> Vec2:
        x, y = seq
        return cls(float(x), float(y))


@dataclass(frozen=True, slots=True)
class VehicleState:
    position: Vec2
    velocity: Vec2
    active: bool = True

    @property
    def speed(self) -> float:
        return self.velocity.norm()

    def deactivated(self) -> VehicleState:
        return replace(self, active=False)


@dataclass(frozen=True)
class ManeuverModelParams:
    """Piecewise-constant lateral acceleration model for the targets.

    Segment lengths are drawn from ``U[segment_duration_min, segment_duration_max]``
    and the lateral acceleration of each segment from ``U[-a_lat_max_target, a_lat_max_target]``.
    """

    a_lat_max_target: float = 30.0
    segment_duration_min: float = 2.0
    segment_duration_max: float = 10.0
    rng_seed: int = 0

    def __post_init__(self):
        if not self.a_lat_max_target >= 0:
            raise ValueError(f"a_lat_max_target must be >= 0, got {self.a_lat_max_target}")
        if not 0 < self.segment_duration_min <= self.segment_duration_max:
            raise ValueError(
                "need 0 < segment_duration_min <= segment_duration_max, got "
                f"{self.segment_duration_min}, {self.segment_duration_max}"
            )

    def draw(self, u_duration, u_accel):
        """Map unit uniforms to (duration, lateral accel); works on scalars and arrays."""
        lo, hi = self.segment_duration_min, self.segment_duration_max
        a = self.a_lat_max_target
        return lo + (hi - lo) * u_duration, a * (2.0 * u_accel - 1.0)


class ManeuverStream:
    """Stateful command source for one target.

    Each segment consumes two unit uniforms from ``rng`` (duration first, then
    amplitude). Query times must be non-decreasing.
    """

    def __init__(self, params: ManeuverModelParams, rng: np.random.Generator):
        self.params = params
        self.rng = rng
        self._seg_end: float | None = None
        self._accel = 0.0
        self._last_t = -math.inf

    def command(self, t: float) -> float:
        if t < self._last_t:
            raise ValueError(f"maneuver stream queried backwards in time ({t} < {self._last_t})")
        self._last_t = t
        if self._seg_end is None:
            self._seg_end = t
        while t >= self._seg_end:
            u = self.rng.random(2)
            duration, accel = self.params.draw(u[0], u[1])
            self._seg_end += float(duration)
            self._accel = float(accel)
        return self._accel

    def commands(self, times) -> np.ndarray:
        """Vectorized :meth:`command` over non-decreasing ``times``; same rng use."""
        times = np.asarray(times, dtype=float)
        if times.size == 0:
            return np.empty(0)
        if np.any(np.diff(times) < 0) or times[0] < self._last_t:
            raise ValueError("maneuver stream queried backwards in time")
        if self._seg_end is None:
            self._seg_end = float(times[0])
        bounds = [self._seg_end]
        values = [self._accel]
        while times[-1] >= self._seg_end:
            u = self.rng.random(2)
            duration, accel = self.params.draw(u[0], u[1])
            self._seg_end += float(duration)
            self._accel = float(accel)
            bounds.append(self._seg_end)
            values.append(self._accel)
        self._last_t = float(times[-1])
        idx = np.searchsorted(np.array(bounds[:-1]), times, side="right")
        return np.array(values)[idx]


def sample_target_command(stream: ManeuverStream, t: float) -> float:
    """Lateral acceleration (m/s^2) commanded by the target's maneuver model at time ``t``."""
    return stream.command(t)


def lateral_component(velocity: Vec2, a_cmd: Vec2) -> float:
    """Signed acceleration along the left-hand normal of ``velocity``."""
    speed = velocity.norm()
    if speed == 0.0:
        raise ValueError("zero-speed vehicle has no body frame")
    return velocity.cross(a_cmd) / speed


def advance(pos: np.ndarray, vel: np.ndarray, a_lat: np.ndarray, tau) -> tuple[np.ndarray, np.ndarray]:
    """Exact constant-speed arc update, vectorized over the leading axis.

    ``pos`` and ``vel`` have shape (..., 2); ``a_lat`` and ``tau`` broadcast
    against the leading shape. Positive ``a_lat`` turns counter-clockwise.
    """
    vx, vy = vel[..., 0], vel[..., 1]
    speed = np.hypot(vx, vy)
    a_lat = np.asarray(a_lat, dtype=float)
    tau = np.asarray(tau, dtype=float)
    straight = np.abs(a_lat) < STRAIGHT_EPS
    omega = np.where(straight, 1.0, a_lat / speed)
    half = 0.5 * omega * tau
    sh, ch = np.sin(half), np.cos(half)
    s, c = 2.0 * sh * ch, 1.0 - 2.0 * sh * sh
    along = np.where(straight, tau, s / omega)
    across = np.where(straight, 0.0, 2.0 * sh * sh / omega)
    c = np.where(straight, 1.0, c)
    s = np.where(straight, 0.0, s)
    new_pos = np.stack([pos[..., 0] + along * vx - across * vy, pos[..., 1] + across * vx + along * vy], axis=-1)
    new_vel = np.stack([c * vx - s * vy, s * vx + c * vy], axis=-1)
    return new_pos, new_vel


def step_lateral(state: VehicleState, a_lat: float, dt: float) -> VehicleState:
    if not state.active:
        raise ValueError("cannot integrate an inactive vehicle")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if state.speed == 0.0:
        raise ValueError("zero-speed vehicle has no body frame")
    p, v = advance(state.position.as_array(), state.velocity.as_array(), a_lat, dt)
    return VehicleState(Vec2(float(p[0]), float(p[1])), Vec2(float(v[0]), float(v[1])), True)


def step_vehicle(state: VehicleState, a_cmd: Vec2, dt: float) -> VehicleState:
    """Advance ``state`` by ``dt`` under the lateral part of ``a_cmd``.

    The component of ``a_cmd`` along the velocity is dropped, so speed is
    preserved up to rounding.
    """
    return step_lateral(state, lateral_component(state.velocity, a_cmd), dt)


def rollout_states(
    initial: VehicleState,
    stream: ManeuverStream,
    times: Sequence[float],
    *,
    now: float = 0.0,
    f_sim: float = 40.0,
) -> list[VehicleState]:
    """Integrate a maneuvering target step by step; return its state at each of ``times``.

    Recorded times snap to the nearest simulation step after ``now``.
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be non-empty and strictly increasing")
    if times[0] < now:
        raise ValueError("cannot record before the rollout start time")
    steps = np.rint((times - now) * f_sim).astype(int)
    dt = 1.0 / f_sim
    state = initial
    out = []
    k = 0
    for target_step in steps:
        while k < target_step:
            state = step_lateral(state, stream.command(now + k * dt), dt)
            k += 1
        out.append(state)
    return out


def rollout_target(
    initial: VehicleState,
    stream: ManeuverStream,
    times: Sequence[float],
    *,
    now: float = 0.0,
    f_sim: float = 40.0,
):
    from .prediction import Trajectory

    states = rollout_states(initial, stream, times, now=now, f_sim=f_sim)
    positions = np.array([[s.position.x, s.position.y] for s in states])
    return Trajectory(np.asarray(times, dtype=float), positions)
