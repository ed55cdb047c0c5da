"""Midcourse zero-effort-miss guidance, endgame proportional navigation, phase logic."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .kinematics import Vec2, VehicleState
from .prediction import Trajectory


@dataclass(frozen=True)
class Midcourse:
    pass


@dataclass(frozen=True)
class Endgame:
    target_id: int


GuidancePhase = Midcourse | Endgame

MIDCOURSE = Midcourse()


def clip_norm(a: Vec2, a_max: float) -> Vec2:
    """Scale ``a`` down to norm ``a_max`` if it exceeds it, keeping its direction."""
    n = a.norm()
    if n <= a_max:
        return a
    out = a * (a_max / n)
    # settle slightly inside the bound: other norm implementations (the compiled
    # step loop logs its own) may round one ulp higher than this one
    lim = a_max * (1.0 - 1e-15)
    while out.norm() > lim:
        out = out * (1.0 - 1e-15)
    return out


def compute_tgo(interceptor_pred: Trajectory, target_pred: Trajectory, now: float = 0.0) -> tuple[float, Vec2]:
    """Grid point of closest predicted approach.

    Returns ``(t_go, r)`` where ``t_go`` is measured from ``now`` and ``r`` is
    interceptor minus target position at that grid point. Ties go to the
    earliest grid point.
    """
    if len(interceptor_pred) == 0:
        raise ValueError("empty prediction grid")
    if not interceptor_pred.same_grid(target_pred):
        raise ValueError("interceptor and target predictions are on different time grids")
    rel = interceptor_pred.positions - target_pred.positions
    k = int(np.argmin(np.hypot(rel[:, 0], rel[:, 1])))
    return float(interceptor_pred.times[k] - now), Vec2(float(rel[k, 0]), float(rel[k, 1]))


def zem_accel(r_at_tgo: Vec2, t_go: float, nav_gain: float, a_max: float) -> Vec2:
    """Zero-effort-miss command ``-N r / t_go^2``, saturated at ``a_max``.

    ``r`` is interceptor minus target, so the minus sign steers the predicted
    miss toward zero.
    """
    if t_go <= 0:
        raise ValueError(f"t_go must be positive, got {t_go}")
    a = r_at_tgo * (-nav_gain / (t_go * t_go))
    return clip_norm(a, a_max)


def los_rate(interceptor: VehicleState, target: VehicleState) -> tuple[float, float, float]:
    """(LOS angle, LOS rate, closing velocity) from interceptor to target."""
    r = target.position - interceptor.position
    rdot = target.velocity - interceptor.velocity
    r2 = r.dot(r)
    if r2 == 0.0:
        raise ValueError("zero separation: line of sight undefined")
    lam = math.atan2(r.y, r.x)
    lam_dot = r.cross(rdot) / r2
    v_c = -r.dot(rdot) / math.sqrt(r2)
    return lam, lam_dot, v_c


def pn_accel(interceptor: VehicleState, target: VehicleState, nav_gain: float, a_max: float) -> Vec2:
    """True proportional navigation: ``N V_c lambda_dot`` normal to the line of sight."""
    _, lam_dot, v_c = los_rate(interceptor, target)
    mag = nav_gain * v_c * lam_dot
    r = target.position - interceptor.position
    d = r.norm()
    # unit normal to the line of sight, i.e. (-sin lambda, cos lambda)
    a = Vec2(-r.y / d * mag, r.x / d * mag)
    return clip_norm(a, a_max)


def nearest_active(interceptor: VehicleState, targets: Sequence[VehicleState]) -> tuple[int, float] | None:
    best = None
    for j, t in enumerate(targets):
        if not t.active:
            continue
        d = (t.position - interceptor.position).norm()
        if best is None or d < best[1]:
            best = (j, d)
    return best


def maybe_switch_phase(
    phase: GuidancePhase,
    interceptor: VehicleState,
    targets: Sequence[VehicleState],
    d_endgame: float,
) -> GuidancePhase:
    """Enter (or re-lock) endgame once the closest active target is within ``d_endgame``."""
    near = nearest_active(interceptor, targets)
    if near is None:
        return phase
    j, d = near
    if isinstance(phase, Midcourse):
        return Endgame(j) if d <= d_endgame else phase
    if not targets[phase.target_id].active:
        return Endgame(j)
    return phase
