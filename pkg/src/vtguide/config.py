"""Engagement configuration with the scenario defaults (2-D, one launch point per side)."""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .kinematics import ManeuverModelParams, Vec2


class PredictionMethod(str, enum.Enum):
    STRAIGHT_LINE = "straight"
    VIRTUAL_TARGET = "vt"

    @classmethod
    def parse(cls, value) -> PredictionMethod:
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {
            "straight": cls.STRAIGHT_LINE,
            "straight_line": cls.STRAIGHT_LINE,
            "straightline": cls.STRAIGHT_LINE,
            "baseline": cls.STRAIGHT_LINE,
            "vt": cls.VIRTUAL_TARGET,
            "virtual_target": cls.VIRTUAL_TARGET,
            "virtualtarget": cls.VIRTUAL_TARGET,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown prediction method {value!r}") from None


def _is_multiple(big: float, small: float) -> bool:
    ratio = big / small
    return abs(ratio - round(ratio)) < 1e-9 and round(ratio) >= 1


@dataclass(frozen=True)
class EngagementConfig:
    nav_gain: float = 3.0
    a_max: float = 500.0
    f_sim: float = 40.0
    f_pn: float = 40.0
    f_zem: float = 0.5
    n_t: int = 20
    n_s: int = 1000
    m_targets: int = 1
    n_interceptors: int = 1
    target_init_pos: Vec2 = Vec2(0.0, 60_000.0)
    target_init_vel: Vec2 = Vec2(0.0, -200.0)
    interceptor_init_pos: Vec2 = Vec2(0.0, 0.0)
    interceptor_init_vel: Vec2 = Vec2(0.0, 500.0)
    d_endgame: float = 6_000.0
    d_hit: float = 10.0
    t_max: float = 100.0
    maneuver: ManeuverModelParams = field(default_factory=ManeuverModelParams)
    prediction_method: PredictionMethod = PredictionMethod.VIRTUAL_TARGET
    kmeans_tol: float = 1.0
    kmeans_max_iter: int = 50

    def validate(self) -> EngagementConfig:
        for name in ("f_sim", "f_pn", "f_zem", "t_max", "a_max"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v}")
        if not _is_multiple(self.f_sim, self.f_pn):
            raise ValueError(f"f_sim={self.f_sim} is not an integer multiple of f_pn={self.f_pn}")
        if not _is_multiple(self.f_sim, self.f_zem):
            raise ValueError(f"f_sim={self.f_sim} is not an integer multiple of f_zem={self.f_zem}")
        if not _is_multiple(self.t_max * self.f_sim, 1.0):
            raise ValueError("t_max must be a whole number of simulation steps")
        if not self.d_hit < self.d_endgame:
            raise ValueError(f"need d_hit < d_endgame, got {self.d_hit} >= {self.d_endgame}")
        if self.n_t < 2:
            raise ValueError(f"n_t must be >= 2, got {self.n_t}")
        if self.n_s < 1:
            raise ValueError(f"n_s must be >= 1, got {self.n_s}")
        if self.m_targets < 0 or self.n_interceptors < 0:
            raise ValueError("vehicle counts must be non-negative")
        if self.nav_gain <= 0:
            raise ValueError("nav_gain must be positive")
        if self.target_init_vel.norm() == 0 or self.interceptor_init_vel.norm() == 0:
            raise ValueError("vehicles need nonzero initial speed")
        return self

    @property
    def steps_total(self) -> int:
        return int(round(self.t_max * self.f_sim))

    @property
    def zem_every(self) -> int:
        return int(round(self.f_sim / self.f_zem))

    @property
    def pn_every(self) -> int:
        return int(round(self.f_sim / self.f_pn))

    def replace(self, **changes) -> EngagementConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, Vec2):
                v = [v.x, v.y]
            elif isinstance(v, ManeuverModelParams):
                v = dataclasses.asdict(v)
            elif isinstance(v, PredictionMethod):
                v = v.value
            out[f.name] = v
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> EngagementConfig:
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)}
        # accept the unit-suffixed spellings used in config files
        for alias, name in (("d_endgame_m", "d_endgame"), ("d_hit_m", "d_hit"), ("t_max_s", "t_max")):
            if alias in data:
                data[name] = data.pop(alias)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs: dict[str, Any] = {}
        for name, v in data.items():
            if name.endswith(("_pos", "_vel")):
                v = Vec2.from_seq(v)
            elif name == "maneuver":
                v = ManeuverModelParams(**v)
            elif name == "prediction_method":
                v = PredictionMethod.parse(v)
            elif name in ("n_t", "n_s", "m_targets", "n_interceptors", "kmeans_max_iter"):
                v = int(v)
            else:
                v = float(v)
            kwargs[name] = v
        return cls(**kwargs)


def load_config(path: str | Path) -> EngagementConfig:
    """Read a YAML (or JSON) mapping of config keys; missing keys keep their defaults."""
    path = Path(path)
    text = path.read_text()
    data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a mapping at top level")
    return EngagementConfig.from_dict(data)
