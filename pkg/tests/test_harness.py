import json
import math

import pytest
from hypothesis import given, strategies as st

from vtguide.config import EngagementConfig, PredictionMethod
from vtguide.engagement import Engagement
from vtguide.harness import (
    CSV_HEADER,
    AggregateResult,
    SweepSpec,
    cis_disjoint,
    csv_text,
    emit_reports,
    json_text,
    load_report,
    maneuver_seed,
    paired_test,
    run_seed,
    run_sweep,
    wilson_ci,
)
from vtguide.kinematics import ManeuverModelParams

BOTH = [PredictionMethod.STRAIGHT_LINE, PredictionMethod.VIRTUAL_TARGET]
SMALL = EngagementConfig(n_s=40, t_max=60.0, target_init_pos=EngagementConfig().target_init_pos * 0.5)


def test_wilson_examples():
    assert wilson_ci(0, 100)[0] == 0.0
    lo, hi = wilson_ci(50, 100)
    assert lo == pytest.approx(0.4038, abs=1e-3) and hi == pytest.approx(0.5962, abs=1e-3)
    assert wilson_ci(100, 100)[1] == 1.0


def test_wilson_errors():
    with pytest.raises(ValueError):
        wilson_ci(0, 0)
    with pytest.raises(ValueError):
        wilson_ci(5, 4)


@given(st.integers(1, 10_000), st.data())
def test_wilson_contains_estimate(trials, data):
    hits = data.draw(st.integers(0, trials))
    lo, hi = wilson_ci(hits, trials)
    assert 0 <= lo <= hits / trials <= hi <= 1


def test_seeds_paired_across_methods_and_distinct_across_cells():
    assert run_seed(1, 2, 3, 4) != run_seed(1, 2, 4, 4) != run_seed(1, 3, 3, 4)
    assert maneuver_seed(1, 2, 4) != maneuver_seed(1, 2, 5)
    assert run_seed(1, 2, 3, 4) == run_seed(1, 2, 3, 4)


def test_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec([1], [1], BOTH, 0).validate()
    with pytest.raises(ValueError):
        SweepSpec([0], [1], BOTH, 1).validate()
    with pytest.raises(ValueError):
        SweepSpec([1], [1], BOTH, 1, base_seed=-1).validate()
    assert SweepSpec([1, 2], [3], ["vt"], 1).cells() == [(1, 3, PredictionMethod.VIRTUAL_TARGET),
                                                          (2, 3, PredictionMethod.VIRTUAL_TARGET)]


def test_head_on_sweep_all_hits():
    cfg = EngagementConfig(maneuver=ManeuverModelParams(a_lat_max_target=0))
    agg = run_sweep(SweepSpec([1], [1], BOTH, 10, base_seed=3, base_config=cfg))
    for c in agg.cells:
        assert (c.hits, c.possible, c.fraction) == (10, 10, 1.0)
        assert abs(c.mean_hit_time_s - 60000 / 700) <= 0.5
        assert c.mean_miss_distance_m is None


@pytest.fixture(scope="module")
def small_agg():
    return run_sweep(SweepSpec([1, 2], [2], BOTH, 6, base_seed=11, base_config=SMALL), parallelism=1)


def test_parallel_identical(small_agg):
    par = run_sweep(SweepSpec([1, 2], [2], BOTH, 6, base_seed=11, base_config=SMALL), parallelism=3)
    assert par == small_agg
    assert json_text(par) == json_text(small_agg)


def test_aggregate_consistency(small_agg):
    for c in small_agg.cells:
        assert c.hits == sum(c.per_run_hits) <= c.m * c.runs
        assert c.possible == c.m * c.runs and len(c.per_run_hits) == 6
        assert c.fraction == c.hits / c.possible
        assert c.ci_lo <= c.fraction <= c.ci_hi
        assert c.max_command_norm <= 500 and c.max_speed_drift < 1e-9


def test_reports(small_agg, tmp_path):
    emit_reports(small_agg, tmp_path / "a.csv", tmp_path / "a.json")
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert lines[0] == "m,n,method,runs,hits,possible,fraction,ci_lo,ci_hi,mean_hit_time_s"
    assert len(lines) == 1 + len(small_agg.cells)
    for line, c in zip(lines[1:], small_agg.cells):
        f = line.split(",")
        assert f[6] == f"{c.hits / c.possible:.6f}"
    back = load_report(tmp_path / "a.json")
    assert back == small_agg
    doc = json.loads((tmp_path / "a.json").read_text())
    assert doc["base_seed"] == 11 and EngagementConfig.from_dict(doc["config"]) == SMALL


def test_one_cell_csv_two_lines():
    agg = run_sweep(SweepSpec([1], [1], ["straight"], 2, base_config=SMALL))
    assert len(csv_text(agg).splitlines()) == 2


def test_unwritable_path_named(small_agg, tmp_path):
    bad = tmp_path / "nope" / "out.csv"
    with pytest.raises(OSError, match="nope"):
        emit_reports(small_agg, bad)


def test_failing_cell_isolated(monkeypatch):
    import vtguide.harness as h

    real = h.run_engagement

    def flaky(cfg, seed, **kw):
        if cfg.n_interceptors == 2:
            raise RuntimeError("boom")
        return real(cfg, seed, **kw)

    monkeypatch.setattr(h, "run_engagement", flaky)
    agg = run_sweep(SweepSpec([1], [1, 2], ["straight"], 2, base_config=SMALL))
    bad, good = agg.cell(1, 2, "straight"), agg.cell(1, 1, "straight")
    assert bad.error and "boom" in bad.error and bad.fraction is None
    assert good.error is None and good.runs == 2
    assert agg.failed == [bad]
    assert ",," in csv_text(agg)
    assert AggregateResult.from_dict(json.loads(json_text(agg))) == agg


def test_targets_paired_across_methods_and_n():
    def target_path(n, method):
        cfg = SMALL.replace(m_targets=2, n_interceptors=n, prediction_method=method)
        eng = Engagement(cfg, run_seed(5, 2, n, 0), record=True, maneuver_seed=maneuver_seed(5, 2, 0))
        eng.run()
        return [(t, v, x, y) for t, v, kind, x, y, *_ in eng.rows if kind == "target" and t < 10]

    ref = target_path(2, PredictionMethod.STRAIGHT_LINE)
    assert target_path(2, PredictionMethod.VIRTUAL_TARGET) == ref
    assert target_path(4, PredictionMethod.VIRTUAL_TARGET) == ref


def test_paired_test_counts():
    pc = paired_test([1, 1, 0, 2, 1], [0, 1, 0, 1, 1])
    assert (pc.wins_a, pc.wins_b, pc.ties) == (2, 0, 3)
    assert pc.mean_diff == pytest.approx(0.4)
    assert pc.p_value == pytest.approx(0.5)
    assert paired_test([0, 0], [0, 0]).p_value == 1.0
    big = paired_test([1] * 12 + [0] * 88, [0] * 100)
    assert big.p_value == pytest.approx(2 * 0.5**12) and big.significant()
    with pytest.raises(ValueError):
        paired_test([1], [1, 2])


def test_cis_disjoint(small_agg):
    c = small_agg.cells[0]
    assert not cis_disjoint(c, c)
