"""Monte Carlo sweeps over (targets, interceptors, method) with paired seeding and reporting."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
from scipy import stats

from .config import EngagementConfig, PredictionMethod
from .engagement import run_engagement

CSV_HEADER = ["m", "n", "method", "runs", "hits", "possible", "fraction", "ci_lo", "ci_hi", "mean_hit_time_s"]
JOBS_ENV = "VTGUIDE_JOBS"


def wilson_ci(hits: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError(f"Wilson interval needs trials > 0, got {trials}")
    if not 0 <= hits <= trials:
        raise ValueError(f"hits must lie in [0, {trials}], got {hits}")
    p = hits / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    lo, hi = centre - half, centre + half
    # pin the exact boundaries that rounding would otherwise miss
    if hits == 0:
        lo = 0.0
    if hits == trials:
        hi = 1.0
    return max(0.0, lo), min(1.0, hi)


def run_seed(base_seed: int, m: int, n: int, r: int) -> int:
    """Seed for run ``r`` of cell (m, n); shared by both methods."""
    return int(np.random.SeedSequence([base_seed, 1, m, n, r]).generate_state(1, np.uint64)[0])


def maneuver_seed(base_seed: int, m: int, r: int) -> int:
    """Seed for the target maneuvers of run ``r``; shared across methods and interceptor counts."""
    return int(np.random.SeedSequence([base_seed, 2, m, r]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SweepSpec:
    m_values: Sequence[int]
    n_values: Sequence[int]
    methods: Sequence[PredictionMethod]
    n_mc: int
    base_seed: int = 0
    base_config: EngagementConfig = field(default_factory=EngagementConfig)

    def __post_init__(self):
        object.__setattr__(self, "m_values", tuple(int(v) for v in self.m_values))
        object.__setattr__(self, "n_values", tuple(int(v) for v in self.n_values))
        object.__setattr__(self, "methods", tuple(PredictionMethod.parse(v) for v in self.methods))

    def validate(self) -> SweepSpec:
        if self.n_mc < 1:
            raise ValueError(f"n_mc must be >= 1, got {self.n_mc}")
        if not (self.m_values and self.n_values and self.methods):
            raise ValueError("sweep needs at least one m, one n and one method")
        if any(v < 1 for v in self.m_values + self.n_values):
            raise ValueError("target and interceptor counts must be >= 1")
        if not 0 <= self.base_seed < 2**64:
            raise ValueError(f"base_seed must be a 64-bit unsigned integer, got {self.base_seed}")
        self.base_config.validate()
        return self

    def cells(self) -> list[tuple[int, int, PredictionMethod]]:
        return [(m, n, meth) for m in self.m_values for n in self.n_values for meth in self.methods]

    def cell_config(self, m: int, n: int, method: PredictionMethod) -> EngagementConfig:
        return self.base_config.replace(m_targets=m, n_interceptors=n, prediction_method=method)


@dataclass(frozen=True)
class RunOutcome:
    hits: int
    hit_times: tuple[float, ...]
    miss_distances: tuple[float, ...]
    max_command_norm: float
    max_speed_drift: float
    error: str | None = None


@dataclass
class CellResult:
    m: int
    n: int
    method: str
    runs: int
    hits: int
    possible: int
    fraction: float | None
    ci_lo: float | None
    ci_hi: float | None
    mean_hit_time_s: float | None
    mean_miss_distance_m: float | None
    per_run_hits: list[int]
    max_command_norm: float
    max_speed_drift: float
    error: str | None = None

    @property
    def key(self) -> tuple[int, int, str]:
        return self.m, self.n, self.method


@dataclass
class AggregateResult:
    base_seed: int
    n_mc: int
    config: dict[str, Any]
    cells: list[CellResult]

    def cell(self, m: int, n: int, method) -> CellResult:
        meth = PredictionMethod.parse(method).value
        for c in self.cells:
            if c.key == (m, n, meth):
                return c
        raise KeyError(f"no cell m={m} n={n} method={meth}")

    @property
    def failed(self) -> list[CellResult]:
        return [c for c in self.cells if c.error is not None]

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> AggregateResult:
        return cls(
            base_seed=int(data["base_seed"]),
            n_mc=int(data["n_mc"]),
            config=dict(data["config"]),
            cells=[CellResult(**c) for c in data["cells"]],
        )


def _run_one(task: tuple[EngagementConfig, int, int]) -> RunOutcome:
    cfg, seed, mseed = task
    try:
        res = run_engagement(cfg, seed, maneuver_seed=mseed)
    except Exception as exc:  # reported per cell, never fatal for the sweep
        return RunOutcome(0, (), (), 0.0, 0.0, f"{type(exc).__name__}: {exc}")
    hit_ids = {h.interceptor for h in res.hit_records}
    misses = tuple(
        d for i, d in enumerate(res.closest_approach) if i not in hit_ids and math.isfinite(d)
    )
    return RunOutcome(
        res.hits,
        tuple(h.time for h in res.hit_records),
        misses,
        res.max_command_norm,
        res.max_speed_drift,
    )


def _reduce(m: int, n: int, method: PredictionMethod, outcomes: list[RunOutcome]) -> CellResult:
    meth = method.value
    for r, o in enumerate(outcomes):
        if o.error is not None:
            return CellResult(m, n, meth, 0, 0, 0, None, None, None, None, None, [], 0.0, 0.0,
                              error=f"run {r}: {o.error}")
    runs = len(outcomes)
    hits = sum(o.hits for o in outcomes)
    possible = m * runs
    lo, hi = wilson_ci(hits, possible)
    hit_times = [t for o in outcomes for t in o.hit_times]
    misses = [d for o in outcomes for d in o.miss_distances]
    return CellResult(
        m=m,
        n=n,
        method=meth,
        runs=runs,
        hits=hits,
        possible=possible,
        fraction=hits / possible,
        ci_lo=lo,
        ci_hi=hi,
        mean_hit_time_s=float(np.mean(hit_times)) if hit_times else None,
        mean_miss_distance_m=float(np.mean(misses)) if misses else None,
        per_run_hits=[o.hits for o in outcomes],
        max_command_norm=max(o.max_command_norm for o in outcomes),
        max_speed_drift=max(o.max_speed_drift for o in outcomes),
    )


def default_parallelism() -> int:
    env = os.environ.get(JOBS_ENV)
    return max(1, int(env)) if env else 1


def run_sweep(
    spec: SweepSpec,
    parallelism: int | None = None,
    progress: Callable[[int, int], None] | None = None,
) -> AggregateResult:
    """Run every (m, n, method) cell ``n_mc`` times and reduce in a fixed order.

    Results do not depend on ``parallelism``: each run's random streams come
    from its seeds alone, and outcomes are collected by (cell, run index).
    """
    spec.validate()
    jobs = default_parallelism() if parallelism is None else max(1, int(parallelism))
    cells = spec.cells()
    tasks = [
        (spec.cell_config(m, n, meth), run_seed(spec.base_seed, m, n, r), maneuver_seed(spec.base_seed, m, r))
        for m, n, meth in cells
        for r in range(spec.n_mc)
    ]
    outcomes: list[RunOutcome] = []
    if jobs == 1:
        for k, t in enumerate(tasks):
            outcomes.append(_run_one(t))
            if progress:
                progress(k + 1, len(tasks))
    else:
        chunk = max(1, len(tasks) // (jobs * 8))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for k, o in enumerate(pool.map(_run_one, tasks, chunksize=chunk)):
                outcomes.append(o)
                if progress:
                    progress(k + 1, len(tasks))
    results = [
        _reduce(m, n, meth, outcomes[c * spec.n_mc : (c + 1) * spec.n_mc]) for c, (m, n, meth) in enumerate(cells)
    ]
    return AggregateResult(
        base_seed=spec.base_seed,
        n_mc=spec.n_mc,
        config=spec.base_config.to_dict(),
        cells=results,
    )


def _fmt(v: float | None, digits: int = 6) -> str:
    return "" if v is None else f"{v:.{digits}f}"


def csv_text(agg: AggregateResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for c in agg.cells:
        w.writerow([c.m, c.n, c.method, c.runs, c.hits, c.possible,
                    _fmt(c.fraction), _fmt(c.ci_lo), _fmt(c.ci_hi), _fmt(c.mean_hit_time_s)])
    return buf.getvalue()


def json_text(agg: AggregateResult) -> str:
    return json.dumps(agg.to_dict(), indent=2, allow_nan=False) + "\n"


def _write(path: str | Path, text: str) -> None:
    path = Path(path)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc.strerror or exc}") from exc


def emit_reports(agg: AggregateResult, csv_path: str | Path | None = None, json_path: str | Path | None = None) -> None:
    if csv_path is not None:
        _write(csv_path, csv_text(agg))
    if json_path is not None:
        _write(json_path, json_text(agg))


def load_report(path: str | Path) -> AggregateResult:
    return AggregateResult.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class PairedComparison:
    """Per-run comparison of two cells run on the same target maneuvers."""

    wins_a: int
    wins_b: int
    ties: int
    mean_diff: float  # mean of (a - b) hits per run
    p_value: float

    def significant(self, alpha: float = 0.05) -> bool:
        return self.p_value < alpha


def paired_test(a_hits: Sequence[int], b_hits: Sequence[int]) -> PairedComparison:
    """Two-sided sign test on per-run hit counts (McNemar's test when counts are 0/1)."""
    a = np.asarray(a_hits)
    b = np.asarray(b_hits)
    if a.shape != b.shape or a.ndim != 1 or a.size == 0:
        raise ValueError("paired test needs two equal-length, non-empty per-run hit lists")
    wins_a = int(np.sum(a > b))
    wins_b = int(np.sum(b > a))
    discordant = wins_a + wins_b
    p = 1.0 if discordant == 0 else float(stats.binomtest(wins_a, discordant, 0.5).pvalue)
    return PairedComparison(wins_a, wins_b, int(a.size - discordant), float(np.mean(a - b)), p)


def cis_disjoint(hi_cell: CellResult, lo_cell: CellResult) -> bool:
    """True when ``hi_cell``'s interval lies strictly above ``lo_cell``'s."""
    return hi_cell.ci_lo is not None and lo_cell.ci_hi is not None and hi_cell.ci_lo > lo_cell.ci_hi
