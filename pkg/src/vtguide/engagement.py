"""Closed-loop many-vs-many engagement simulation."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .clustering import VirtualTargetSet, remove_vt, update_vts
from .config import EngagementConfig, PredictionMethod
from . import _kernels
from .guidance import MIDCOURSE, Endgame, Midcourse, compute_tgo, maybe_switch_phase, zem_accel
from .kinematics import ManeuverStream, Vec2, VehicleState
from .prediction import RolloutSampler, TrajectorySampler, horizon, predict_interceptor, predict_straight

TRAJ_HEADER = ["time", "id", "kind", "x", "y", "vx", "vy", "phase"]


@dataclass(frozen=True)
class HitRecord:
    time: float
    interceptor: int
    target: int
    miss: float


@dataclass(frozen=True)
class Event:
    time: float
    kind: str  # "hit" | "endgame" | "relock"
    interceptor: int
    target: int
    distance: float


@dataclass
class RunResult:
    hits: int
    hit_records: list[HitRecord]
    closest_approach: list[float]
    terminated_at: float
    seed: int
    config: dict
    max_command_norm: float = 0.0
    max_speed_drift: float = 0.0
    events: list[Event] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def rng_streams(
    seed: int, m: int, maneuver_seed: int | None = None
) -> tuple[list[np.random.Generator], np.random.Generator, np.random.Generator]:
    """Independent substreams for target maneuvers, the sampler and clustering seeding.

    Target streams depend only on ``(maneuver_seed, j)`` (``maneuver_seed``
    defaults to ``seed``), so switching the prediction method, or the number
    of interceptors when the caller fixes ``maneuver_seed``, leaves target
    behaviour unchanged.
    """
    ms = seed if maneuver_seed is None else maneuver_seed
    targets = [np.random.default_rng(np.random.SeedSequence(ms, spawn_key=(0, j))) for j in range(m)]
    sampler = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
    cluster = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2,)))
    return targets, sampler, cluster


def cpa(r0: np.ndarray, r1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closest approach of relative positions moving linearly from ``r0`` to ``r1``.

    Works on (..., 2) arrays; returns (distance, fraction of the step).
    """
    dr = r1 - r0
    dd = np.sum(dr * dr, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(dd > 0.0, -np.sum(r0 * dr, axis=-1) / dd, 0.0)
    s = np.clip(s, 0.0, 1.0)
    closest = r0 + s[..., None] * dr
    return np.hypot(closest[..., 0], closest[..., 1]), s


def _pair_hits(cpa_dist: np.ndarray, frac: np.ndarray, mask: np.ndarray, d_hit: float, t0: float, dt: float):
    """Greedy one-to-one matching of candidate pairs: smallest miss, then lowest interceptor id."""
    cand = np.argwhere(mask & (cpa_dist <= d_hit))
    if cand.size == 0:
        return []
    order = sorted(((float(cpa_dist[i, j]), int(i), int(j)) for i, j in cand))
    used_i, used_j, hits = set(), set(), []
    for miss, i, j in order:
        if i in used_i or j in used_j:
            continue
        used_i.add(i)
        used_j.add(j)
        hits.append(HitRecord(t0 + float(frac[i, j]) * dt, i, j, miss))
    return hits


def detect_hits(
    prev_interceptors: Sequence[VehicleState],
    prev_targets: Sequence[VehicleState],
    new_interceptors: Sequence[VehicleState],
    new_targets: Sequence[VehicleState],
    d_hit: float,
    t0: float = 0.0,
    dt: float = 0.025,
) -> list[HitRecord]:
    """Hits within one step, by closest approach under linear motion between the samples.

    A pair is eligible if both vehicles were active at the start of the step.
    Each vehicle takes part in at most one hit.
    """
    def pos(states):
        return np.array([[s.position.x, s.position.y] for s in states], dtype=float).reshape(-1, 2)

    pi0, pt0, pi1, pt1 = map(pos, (prev_interceptors, prev_targets, new_interceptors, new_targets))
    dist, frac = cpa(pi0[:, None, :] - pt0[None, :, :], pi1[:, None, :] - pt1[None, :, :])
    mask = np.array([s.active for s in prev_interceptors], dtype=bool)[:, None] & np.array(
        [s.active for s in prev_targets], dtype=bool
    )[None, :]
    return _pair_hits(dist, frac, mask, d_hit, t0, dt)


class Engagement:
    """Mutable world state for one run; ``run()`` steps it to completion."""

    def __init__(
        self,
        config: EngagementConfig,
        seed: int,
        sampler: TrajectorySampler | None = None,
        record: bool = False,
        maneuver_seed: int | None = None,
    ):
        self.cfg = cfg = config.validate()
        self.seed = int(seed)
        self.m, self.n = m, n = cfg.m_targets, cfg.n_interceptors
        self.dt = 1.0 / cfg.f_sim
        # rows 0..m-1 are targets, m..m+n-1 interceptors
        self.pos = np.array([[cfg.target_init_pos.x, cfg.target_init_pos.y]] * m
                            + [[cfg.interceptor_init_pos.x, cfg.interceptor_init_pos.y]] * n, dtype=float).reshape(-1, 2)
        self.vel = np.array([[cfg.target_init_vel.x, cfg.target_init_vel.y]] * m
                            + [[cfg.interceptor_init_vel.x, cfg.interceptor_init_vel.y]] * n, dtype=float).reshape(-1, 2)
        self.active = np.ones(m + n, dtype=bool)
        self.speed0 = np.hypot(self.vel[:, 0], self.vel[:, 1])
        self.phases: list[Midcourse | Endgame] = [MIDCOURSE] * n
        self.held = np.zeros((n, 2))
        target_rngs, self.sampler_rng, self.cluster_rng = rng_streams(self.seed, m, maneuver_seed)
        self.streams = [ManeuverStream(cfg.maneuver, r) for r in target_rngs]
        self.sampler = sampler or RolloutSampler(cfg.maneuver, cfg.f_sim)
        self.vt_set: VirtualTargetSet | None = None
        self.vt_history: list[tuple[float, VirtualTargetSet]] = []
        self.events: list[Event] = []
        self.hit_records: list[HitRecord] = []
        self.closest = np.full(n, math.inf)
        self.max_cmd = 0.0
        self.max_drift = 0.0
        self.t = 0.0
        self.record = record
        self.rows: list[tuple] = []
        self.notes: list[str] = []
        if cfg.prediction_method is PredictionMethod.VIRTUAL_TARGET and 0 < n < m:
            self.notes.append(f"virtual-target method with fewer interceptors ({n}) than targets ({m})")

    # -- views -------------------------------------------------------------
    def target_state(self, j: int) -> VehicleState:
        return VehicleState(Vec2(*self.pos[j]), Vec2(*self.vel[j]), bool(self.active[j]))

    def interceptor_state(self, i: int) -> VehicleState:
        r = self.m + i
        return VehicleState(Vec2(*self.pos[r]), Vec2(*self.vel[r]), bool(self.active[r]))

    def target_states(self) -> list[VehicleState]:
        return [self.target_state(j) for j in range(self.m)]

    @property
    def targets_active(self) -> np.ndarray:
        return self.active[: self.m]

    @property
    def interceptors_active(self) -> np.ndarray:
        return self.active[self.m :]

    # -- guidance ticks ----------------------------------------------------
    def _zem_tick(self) -> None:
        cfg = self.cfg
        mid = [i for i in range(self.n) if self.interceptors_active[i] and isinstance(self.phases[i], Midcourse)]
        if not mid or not self.targets_active.any():
            return
        now = self.t
        times = horizon(now, cfg.t_max, cfg.n_t)
        targets = self.target_states()
        if cfg.prediction_method is PredictionMethod.VIRTUAL_TARGET:
            bundle = self.sampler.sample(targets, cfg.n_s, times, self.sampler_rng, now)
            owners = [i for i in range(self.n) if self.interceptors_active[i]]
            self.vt_set = update_vts(
                bundle, owners, self.vt_set, self.cluster_rng, max_iter=cfg.kmeans_max_iter, tol=cfg.kmeans_tol
            )
            if self.record:
                self.vt_history.append((now, self.vt_set))
        for i in mid:
            ipred = predict_interceptor(self.interceptor_state(i), times, now)
            if cfg.prediction_method is PredictionMethod.VIRTUAL_TARGET:
                tpred = self.vt_set.vt_for(i)
            else:
                tpred = predict_straight(targets[self._baseline_target(i)], times, now)
            t_go, r = compute_tgo(ipred, tpred, now)
            a = zem_accel(r, t_go, cfg.nav_gain, cfg.a_max)
            self.held[i] = a.x, a.y

    def _baseline_target(self, i: int) -> int:
        j = i % self.m
        if self.targets_active[j]:
            return j
        # assigned target already destroyed: fall back to the nearest survivor
        alive = np.flatnonzero(self.targets_active)
        d = np.hypot(*(self.pos[alive] - self.pos[self.m + i]).T)
        return int(alive[np.argmin(d)])

    # -- bookkeeping -------------------------------------------------------
    def _hits_and_phases(self, prev_pos: np.ndarray, t0: float) -> None:
        m, n, cfg = self.m, self.n, self.cfg
        ti = self.targets_active.copy()
        ii = self.interceptors_active.copy()
        if not (ti.any() and ii.any()):
            return
        r0 = prev_pos[m:, None, :] - prev_pos[None, :m, :]
        r1 = self.pos[m:, None, :] - self.pos[None, :m, :]
        dist, frac = cpa(r0, r1)
        mask = ii[:, None] & ti[None, :]
        masked = np.where(mask, dist, math.inf)
        np.minimum(self.closest, masked.min(axis=1), out=self.closest)

        for h in _pair_hits(dist, frac, mask, cfg.d_hit, t0, self.dt):
            if h.time > self.t:  # t0 + dt can round past the step's end time
                h = replace(h, time=self.t)
            self.hit_records.append(h)
            self.events.append(Event(h.time, "hit", h.interceptor, h.target, h.miss))
            self.active[h.target] = False
            self.active[m + h.interceptor] = False
            if self.vt_set is not None and h.interceptor in self.vt_set.owners:
                self.vt_set = remove_vt(self.vt_set, self.vt_set.index_of(h.interceptor))

        if not self.targets_active.any():
            return
        d_end = np.hypot(r1[..., 0], r1[..., 1])
        d_end = np.where(self.targets_active[None, :], d_end, math.inf)
        targets = None
        for i in range(n):
            if not self.interceptors_active[i]:
                continue
            ph = self.phases[i]
            if isinstance(ph, Midcourse) and d_end[i].min() > cfg.d_endgame:
                continue
            if isinstance(ph, Endgame) and self.targets_active[ph.target_id]:
                continue
            if targets is None:
                targets = self.target_states()
            new = maybe_switch_phase(ph, self.interceptor_state(i), targets, cfg.d_endgame)
            if new != ph:
                kind = "endgame" if isinstance(ph, Midcourse) else "relock"
                self.phases[i] = new
                self.events.append(Event(self.t, kind, i, new.target_id, float(d_end[i, new.target_id])))

    def _record_rows(self) -> None:
        for r in np.flatnonzero(self.active):
            if r < self.m:
                kind, vid, phase = "target", int(r), ""
            else:
                vid = int(r - self.m)
                kind = "interceptor"
                ph = self.phases[vid]
                phase = "midcourse" if isinstance(ph, Midcourse) else f"endgame:{ph.target_id}"
            x, y = self.pos[r]
            vx, vy = self.vel[r]
            self.rows.append((self.t, vid, kind, x, y, vx, vy, phase))

    def run(self) -> RunResult:
        cfg = self.cfg
        total = cfg.steps_total
        zem_every = cfg.zem_every
        m, n = self.m, self.n
        # target maneuvers do not react to anything, so tabulate them up front
        t_cmd = np.zeros((total, max(m, 1)))
        step_times = np.arange(total) / cfg.f_sim
        for j, stream in enumerate(self.streams):
            t_cmd[:, j] = stream.commands(step_times)
        lock = np.full(n, -1, dtype=np.int64)
        prev = np.empty_like(self.pos)
        stats = np.zeros(2)
        if self.record:
            self._record_rows()
        k = 0
        while k < total and self.active.any():
            self.t = k / cfg.f_sim
            if k % zem_every == 0:
                self._zem_tick()
            nsteps = 1 if self.record else min(total - k, zem_every - k % zem_every)
            for i, ph in enumerate(self.phases):
                lock[i] = ph.target_id if isinstance(ph, Endgame) else -1
            done, event = _kernels.run_block(
                self.pos, self.vel, self.active, self.speed0, m, n,
                t_cmd, k, nsteps,
                self.held, lock, cfg.pn_every, cfg.nav_gain, cfg.a_max, self.dt,
                cfg.d_endgame, cfg.d_hit,
                prev, self.closest, stats,
            )
            k += done
            self.t = k / cfg.f_sim
            if event:
                self._hits_and_phases(prev, (k - 1) / cfg.f_sim)
            if self.record:
                self._record_rows()
        self.max_cmd, self.max_drift = float(stats[0]), float(stats[1])
        return RunResult(
            hits=len(self.hit_records),
            hit_records=list(self.hit_records),
            closest_approach=[float(c) for c in self.closest],
            terminated_at=self.t,
            seed=self.seed,
            config=cfg.to_dict(),
            max_command_norm=self.max_cmd,
            max_speed_drift=self.max_drift,
            events=list(self.events),
            notes=list(self.notes),
        )

    def write_trajectory(self, path: str | Path) -> None:
        path = Path(path)
        try:
            with path.open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(TRAJ_HEADER)
                for t, vid, kind, x, y, vx, vy, phase in self.rows:
                    w.writerow([f"{t:.3f}", vid, kind, repr(float(x)), repr(float(y)), repr(float(vx)), repr(float(vy)), phase])
        except OSError as exc:
            raise OSError(f"cannot write trajectory dump to {path}: {exc}") from exc


def run_engagement(
    config: EngagementConfig,
    seed: int,
    *,
    traj_out: str | Path | None = None,
    sampler: TrajectorySampler | None = None,
    maneuver_seed: int | None = None,
) -> RunResult:
    """Simulate one engagement to ``t_max`` (or until no vehicle is left active)."""
    eng = Engagement(config, seed, sampler=sampler, record=traj_out is not None, maneuver_seed=maneuver_seed)
    result = eng.run()
    if traj_out is not None:
        eng.write_trajectory(traj_out)
    return result
