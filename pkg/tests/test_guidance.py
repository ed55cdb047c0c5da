import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from vtguide import _kernels
from vtguide.guidance import (
    MIDCOURSE,
    Endgame,
    Midcourse,
    clip_norm,
    compute_tgo,
    los_rate,
    maybe_switch_phase,
    pn_accel,
    zem_accel,
)
from vtguide.kinematics import Vec2, VehicleState
from vtguide.prediction import Trajectory, horizon, predict_interceptor, predict_straight

coord = st.floats(-1e5, 1e5, allow_nan=False)
vel = st.floats(-800, 800, allow_nan=False)


def scan_tgo(ip, tp, now):
    """Independent plain-loop grid scan: first index of minimum separation."""
    best_k, best_d = None, None
    for k in range(len(ip.times)):
        dx = ip.positions[k][0] - tp.positions[k][0]
        dy = ip.positions[k][1] - tp.positions[k][1]
        d = math.sqrt(dx * dx + dy * dy)
        if best_d is None or d < best_d:
            best_k, best_d = k, d
    return ip.times[best_k] - now, (ip.positions[best_k][0] - tp.positions[best_k][0],
                                    ip.positions[best_k][1] - tp.positions[best_k][1])


# -- compute_tgo --------------------------------------------------------------


def test_tgo_head_on():
    times = horizon(0, 100, 20)
    ip = predict_interceptor(VehicleState(Vec2(0, 0), Vec2(0, 500)), times, 0)
    tp = predict_straight(VehicleState(Vec2(0, 60000), Vec2(0, -200)), times, 0)
    t_go, r = compute_tgo(ip, tp, 0)
    assert t_go == 85
    assert r == Vec2(0, -500)


def test_tgo_tie_goes_to_first_point():
    tr = Trajectory(horizon(0, 100, 20), np.ones((20, 2)))
    assert compute_tgo(tr, tr, 0) == (5.0, Vec2(0, 0))


def test_tgo_receding_target():
    times = horizon(0, 100, 20)
    ip = predict_interceptor(VehicleState(Vec2(0, 0), Vec2(0, 100)), times, 0)
    tp = predict_straight(VehicleState(Vec2(0, 1000), Vec2(0, 200)), times, 0)
    assert compute_tgo(ip, tp, 0)[0] == 5.0


def test_tgo_grid_mismatch_and_empty():
    a = Trajectory([1.0, 2.0], np.zeros((2, 2)))
    b = Trajectory([1.0, 3.0], np.zeros((2, 2)))
    with pytest.raises(ValueError):
        compute_tgo(a, b)
    e = Trajectory(np.empty(0), np.empty((0, 2)))
    with pytest.raises(ValueError):
        compute_tgo(e, e)


def test_tgo_matches_scan_on_random_pairs():
    rng = np.random.default_rng(314)
    for _ in range(100):
        now = float(rng.uniform(0, 90))
        times = horizon(now, 100, 20)
        a = Trajectory(times, np.cumsum(rng.normal(size=(20, 2)) * 500, axis=0))
        b = Trajectory(times, np.cumsum(rng.normal(size=(20, 2)) * 500, axis=0))
        t_go, r = compute_tgo(a, b, now)
        t_ref, r_ref = scan_tgo(a, b, now)
        assert t_go == t_ref and (r.x, r.y) == r_ref


# -- zem_accel ----------------------------------------------------------------


def test_zem_small_miss():
    a = zem_accel(Vec2(100, 0), 10, 3, 500)
    assert a == Vec2(-3.0, -0.0)
    assert a.norm() == 3.0


def test_zem_zero_miss():
    assert zem_accel(Vec2(0, 0), 10, 3, 500) == Vec2(0, 0)


def test_zem_saturates():
    a = zem_accel(Vec2(2e6, 0), 10, 3, 500)
    assert a.norm() <= 500
    assert a.norm() == pytest.approx(500, rel=1e-12)
    assert a.x < 0 and a.y == 0


@pytest.mark.parametrize("t_go", [0.0, -1.0])
def test_zem_needs_positive_tgo(t_go):
    with pytest.raises(ValueError):
        zem_accel(Vec2(1, 1), t_go, 3, 500)


@given(coord, coord, st.floats(0.1, 100), st.floats(1e-3, 1e3))
def test_zem_homogeneous(rx, ry, t_go, c):
    a = zem_accel(Vec2(rx, ry), t_go, 3, math.inf)
    b = zem_accel(Vec2(rx * c, ry * c), t_go, 3, math.inf)
    assert b.x == pytest.approx(c * a.x, rel=1e-12, abs=1e-300)
    assert b.y == pytest.approx(c * a.y, rel=1e-12, abs=1e-300)


@given(coord, coord, st.floats(0.1, 100), st.floats(1.0, 1000.0))
def test_zem_direction_survives_saturation(rx, ry, t_go, a_max):
    r = Vec2(rx, ry)
    assume(r.norm() > 1e-6)
    a = zem_accel(r, t_go, 3, a_max)
    free = zem_accel(r, t_go, 3, math.inf)
    assert a.norm() <= a_max
    ua, uf = a * (1 / a.norm()), free * (1 / free.norm())
    assert abs(ua.x - uf.x) < 1e-12 and abs(ua.y - uf.y) < 1e-12


@given(st.floats(-1e12, 1e12), st.floats(-1e12, 1e12), st.floats(1e-3, 1e4))
def test_clip_norm_bound(x, y, a_max):
    out = clip_norm(Vec2(x, y), a_max)
    assert out.norm() <= a_max
    # the compiled hypot may differ from CPython's in the last bit
    kx, ky = _kernels.clip_norm(x, y, a_max)
    assert kx == pytest.approx(out.x, rel=1e-14) and ky == pytest.approx(out.y, rel=1e-14)


def test_clipped_commands_pass_compiled_norm_check():
    # the step loop logs norms with its own hypot; a clipped command must stay within a_max there too
    rng = np.random.default_rng(77)
    for x, y in rng.normal(size=(20_000, 2)) * rng.uniform(1e2, 1e6, size=(20_000, 1)):
        out = clip_norm(Vec2(x, y), 500.0)
        assert _kernels.clip_norm(out.x, out.y, 500.0) == (out.x, out.y)
        assert math.sqrt(out.x * out.x + out.y * out.y) <= 500.0


# -- pn_accel -----------------------------------------------------------------


def test_pn_collision_course_zero():
    i = VehicleState(Vec2(0, 0), Vec2(300, 400))
    t = VehicleState(Vec2(3000, 4000), Vec2(-30, -40))
    assert pn_accel(i, t, 3, 500).norm() < 1e-12


def test_pn_stationary_target_ahead():
    i = VehicleState(Vec2(0, 0), Vec2(0, 500))
    t = VehicleState(Vec2(0, 10000), Vec2(0, 0))
    _, lam_dot, v_c = los_rate(i, t)
    assert lam_dot == 0 and v_c == 500
    assert pn_accel(i, t, 3, 500) == Vec2(0, 0)


def fd_los(i, t, h=1e-4):
    def geom(s):
        rx = (t.position.x + s * t.velocity.x) - (i.position.x + s * i.velocity.x)
        ry = (t.position.y + s * t.velocity.y) - (i.position.y + s * i.velocity.y)
        return math.atan2(ry, rx), math.hypot(rx, ry)

    (l1, d1), (l0, d0) = geom(h), geom(-h)
    dl = math.remainder(l1 - l0, 2 * math.pi)  # across the atan2 branch cut
    return dl / (2 * h), -(d1 - d0) / (2 * h)


def test_pn_crossing_target_finite_difference():
    i = VehicleState(Vec2(0, 0), Vec2(0, 500))
    t = VehicleState(Vec2(0, 6000), Vec2(200, 0))
    lam_dot, v_c = fd_los(i, t)
    a = pn_accel(i, t, 3, 1e9)
    assert a.norm() == pytest.approx(3 * v_c * abs(lam_dot), rel=1e-6)
    # the command turns the interceptor toward the target's motion (+x)
    assert a.x > 0


@given(coord, coord, vel, vel, coord, coord, vel, vel)
def test_pn_matches_finite_difference(ix, iy, ivx, ivy, tx, ty, tvx, tvy):
    i = VehicleState(Vec2(ix, iy), Vec2(ivx, ivy))
    t = VehicleState(Vec2(tx, ty), Vec2(tvx, tvy))
    r = t.position - i.position
    rel_speed = (t.velocity - i.velocity).norm()
    assume(r.norm() > 1000 and rel_speed > 1)
    # step scaled to the geometry; skip near-collinear cases where the difference quotient cancels
    _, lam_dot_exact, v_c_exact = los_rate(i, t)
    assume(abs(lam_dot_exact) * r.norm() / rel_speed > 1e-3 and abs(v_c_exact) / rel_speed > 1e-3)
    lam_dot, v_c = fd_los(i, t, h=1e-4 * r.norm() / rel_speed)
    a = pn_accel(i, t, 3, 1e12)
    expected = 3 * abs(v_c * lam_dot)
    assert a.norm() == pytest.approx(expected, rel=1e-6)
    # perpendicular to the line of sight, pushing the interceptor's velocity the way the LOS turns
    assert abs(a.dot(r)) <= 1e-9 * a.norm() * r.norm()
    if expected > 1e-9:
        assert math.copysign(1, r.cross(a)) == math.copysign(1, lam_dot * v_c)


@given(coord, coord, vel, vel, coord, coord, vel, vel, st.floats(1, 1000))
def test_pn_kernel_matches_reference(ix, iy, ivx, ivy, tx, ty, tvx, tvy, a_max):
    assume(math.hypot(tx - ix, ty - iy) > 1)
    ref = pn_accel(VehicleState(Vec2(ix, iy), Vec2(ivx, ivy)), VehicleState(Vec2(tx, ty), Vec2(tvx, tvy)), 3, a_max)
    ax, ay = _kernels.pn_command(ix, iy, ivx, ivy, tx, ty, tvx, tvy, 3.0, a_max)
    assert ref.norm() <= a_max
    assert ax == pytest.approx(ref.x, rel=1e-12, abs=1e-12)
    assert ay == pytest.approx(ref.y, rel=1e-12, abs=1e-12)


def test_pn_zero_separation_rejected():
    s = VehicleState(Vec2(1, 1), Vec2(0, 1))
    with pytest.raises(ValueError):
        pn_accel(s, s, 3, 500)


# -- phase switching ----------------------------------------------------------


def at(y, active=True):
    return VehicleState(Vec2(0, y), Vec2(0, -200), active)


ME = VehicleState(Vec2(0, 0), Vec2(0, 500))


def test_phase_outside_threshold():
    assert maybe_switch_phase(MIDCOURSE, ME, [at(6001)], 6000) == MIDCOURSE


def test_phase_threshold_inclusive():
    assert maybe_switch_phase(MIDCOURSE, ME, [at(9000), at(6000)], 6000) == Endgame(1)


def test_phase_relock_to_nearest_survivor():
    targets = [at(100, active=False), at(5000), at(3000)]
    assert maybe_switch_phase(Endgame(0), ME, targets, 6000) == Endgame(2)


def test_phase_keeps_live_lock():
    assert maybe_switch_phase(Endgame(1), ME, [at(100), at(5000)], 6000) == Endgame(1)


def test_phase_no_targets_left():
    assert maybe_switch_phase(Endgame(0), ME, [at(100, active=False)], 6000) == Endgame(0)
    assert maybe_switch_phase(MIDCOURSE, ME, [], 6000) == MIDCOURSE


@given(st.lists(st.tuples(st.floats(0, 20000), st.booleans()), min_size=1, max_size=6), st.integers(0, 5))
def test_phase_never_returns_to_midcourse(targets, lock):
    ts = [at(y, a) for y, a in targets]
    phase = Endgame(min(lock, len(ts) - 1))
    assert isinstance(maybe_switch_phase(phase, ME, ts, 6000), Endgame)
    assert not isinstance(maybe_switch_phase(phase, ME, ts, 6000), Midcourse)
