"""Target trajectory prediction: straight-line extrapolation and sampled rollouts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from . import _kernels
from .kinematics import ManeuverModelParams, VehicleState


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Positions (n, 2) sampled at strictly increasing ``times`` (n,)."""

    times: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        positions = np.asarray(self.positions, dtype=float)
        if times.ndim != 1 or positions.shape != (times.size, 2):
            raise ValueError(f"shape mismatch: times {times.shape}, positions {positions.shape}")
        if np.any(np.diff(times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(positions))):
            raise ValueError("trajectory contains non-finite values")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "positions", positions)

    def __len__(self) -> int:
        return self.times.size

    def same_grid(self, other: Trajectory) -> bool:
        return self.times.shape == other.times.shape and bool(np.all(self.times == other.times))


@dataclass(frozen=True, eq=False)
class SampleBundle:
    """Sampled target futures sharing one time grid.

    ``positions`` has shape (n_samples, n_t, 2); ``target_ids[s]`` names the
    physical target sample ``s`` was drawn for.
    """

    horizon_times: np.ndarray
    positions: np.ndarray
    target_ids: np.ndarray

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def trajectories(self) -> list[Trajectory]:
        return [Trajectory(self.horizon_times, p) for p in self.positions]


def horizon(now: float, t_max: float, n_t: int) -> np.ndarray:
    """``n_t`` evenly spaced times over ``(now, t_max]``."""
    if now >= t_max:
        raise ValueError(f"engagement over: now={now} >= t_max={t_max}")
    if n_t < 1:
        raise ValueError("n_t must be >= 1")
    k = np.arange(1, n_t + 1)
    times = now + k * ((t_max - now) / n_t)
    times[-1] = t_max
    return times


def predict_straight(state: VehicleState, times: Sequence[float], now: float) -> Trajectory:
    """Constant-velocity extrapolation from the state at ``now``."""
    times = np.asarray(times, dtype=float)
    p = state.position.as_array()
    v = state.velocity.as_array()
    return Trajectory(times, p + np.outer(times - now, v))


def predict_interceptor(state: VehicleState, times: Sequence[float], now: float) -> Trajectory:
    """Interceptor future assuming no further acceleration."""
    return predict_straight(state, times, now)


class TrajectorySampler(Protocol):
    """Anything that can draw ``n_s`` future trajectories per target on a fixed grid."""

    def sample(
        self,
        targets: Sequence[VehicleState],
        n_s: int,
        times: np.ndarray,
        rng: np.random.Generator,
        now: float,
    ) -> SampleBundle: ...


class RolloutSampler:
    """Draws futures by rolling the maneuver model forward from the current state.

    Each sample behaves like a fresh maneuver stream started at ``now`` and
    integrated at ``f_sim``; arcs between segment switches and recorded times
    are evaluated in closed form. Samples draw from ``rng`` in target-major,
    sample-minor order.
    """

    def __init__(self, params: ManeuverModelParams, f_sim: float = 40.0):
        self.params = params
        self.f_sim = f_sim

    def sample(self, targets, n_s, times, rng, now):
        active = [(j, t) for j, t in enumerate(targets) if t.active]
        if not active:
            raise ValueError("sample bundle needs at least one active target")
        if n_s < 1:
            raise ValueError("n_s must be >= 1")
        times = np.asarray(times, dtype=float)
        if times[0] <= now - 0.5 / self.f_sim:
            raise ValueError("horizon starts before the current time")
        p0 = np.array([[t.position.x, t.position.y] for _, t in active])
        v0 = np.array([[t.velocity.x, t.velocity.y] for _, t in active])
        if np.any(np.hypot(v0[:, 0], v0[:, 1]) == 0.0):
            raise ValueError("zero-speed target has no body frame")
        steps = np.rint((times - now) * self.f_sim).astype(np.int64)
        out = np.empty((len(active) * n_s, times.size, 2))
        p = self.params
        _kernels.sample_rollouts(
            rng, p0, v0, n_s, steps, 1.0 / self.f_sim,
            p.segment_duration_min, p.segment_duration_max, p.a_lat_max_target, out,
        )
        target_ids = np.repeat(np.array([j for j, _ in active]), n_s)
        return SampleBundle(times, out, target_ids)


def sample_bundle(
    targets: Sequence[VehicleState],
    params: ManeuverModelParams,
    n_s: int,
    times: Sequence[float],
    rng: np.random.Generator,
    *,
    now: float = 0.0,
    f_sim: float = 40.0,
) -> SampleBundle:
    """``n_s`` sampled futures for every active target, target-major order."""
    return RolloutSampler(params, f_sim).sample(targets, n_s, np.asarray(times, dtype=float), rng, now)
