"""Many-vs-many interceptor guidance with virtual-target midcourse prediction."""

from .config import EngagementConfig, PredictionMethod, load_config
from .engagement import RunResult, run_engagement
from .harness import AggregateResult, SweepSpec, run_sweep, wilson_ci
from .kinematics import ManeuverModelParams, Vec2, VehicleState

__all__ = [
    "AggregateResult",
    "EngagementConfig",
    "ManeuverModelParams",
    "PredictionMethod",
    "RunResult",
    "SweepSpec",
    "Vec2",
    "VehicleState",
    "load_config",
    "run_engagement",
    "run_sweep",
    "wilson_ci",
]
