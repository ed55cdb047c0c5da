"""Compiled inner loops for the engagement and the rollout sampler.

These mirror :func:`vtguide.kinematics.advance`, :func:`vtguide.guidance.pn_accel`
and :func:`vtguide.engagement.cpa`; the test suite checks them against those
reference implementations.
"""

from __future__ import annotations

import math

import numba
import numpy as np

STRAIGHT_EPS = 1e-12


@numba.njit(cache=True, inline="always")
def arc(px, py, vx, vy, a_lat, tau):
    if abs(a_lat) < STRAIGHT_EPS:
        return px + tau * vx, py + tau * vy, vx, vy
    speed = math.sqrt(vx * vx + vy * vy)
    omega = a_lat / speed
    half = 0.5 * omega * tau
    sh = math.sin(half)
    ch = math.cos(half)
    s = 2.0 * sh * ch
    c = 1.0 - 2.0 * sh * sh
    along = s / omega
    across = 2.0 * sh * sh / omega
    return (
        px + along * vx - across * vy,
        py + across * vx + along * vy,
        c * vx - s * vy,
        s * vx + c * vy,
    )


@numba.njit(cache=True)
def first_step_at_or_after(t_rel, dt):
    k = int(math.ceil(t_rel / dt))
    if k < 0:
        k = 0
    while k > 0 and (k - 1) * dt >= t_rel:
        k -= 1
    while k * dt < t_rel:
        k += 1
    return k


@numba.njit(cache=True)
def sample_rollouts(rng, p0, v0, n_s, horizon_steps, dt, dur_lo, dur_hi, a_amp, out):
    """Roll every (target, sample) pair forward, drawing maneuver segments lazily.

    Samples consume ``rng`` one after another, two uniforms per segment
    (duration, then amplitude), exactly like a sequence of independent
    maneuver streams sharing the generator.
    """
    m = p0.shape[0]
    n_t = horizon_steps.shape[0]
    for j in range(m):
        speed = math.sqrt(v0[j, 0] ** 2 + v0[j, 1] ** 2)
        for s in range(n_s):
            row = j * n_s + s
            px, py, vx, vy = p0[j, 0], p0[j, 1], v0[j, 0], v0[j, 1]
            step = 0
            seg_end = 0.0
            omega = 0.0
            inv_omega = 0.0
            straight = True
            switch = 0
            last_n = -1
            sn = cs = along = across = 0.0
            for h in range(n_t):
                target = horizon_steps[h]
                while step < target:
                    if step * dt >= seg_end:
                        while step * dt >= seg_end:
                            u1 = rng.random()
                            u2 = rng.random()
                            seg_end += dur_lo + (dur_hi - dur_lo) * u1
                            acc = a_amp * (2.0 * u2 - 1.0)
                        # speed is constant, so the turn rate is fixed for the whole segment
                        straight = abs(acc) < STRAIGHT_EPS
                        if not straight:
                            omega = acc / speed
                            inv_omega = 1.0 / omega
                        switch = first_step_at_or_after(seg_end, dt)
                        last_n = -1
                    stop = switch if switch < target else target
                    tau = (stop - step) * dt
                    if straight:
                        px += tau * vx
                        py += tau * vy
                    else:
                        # equal-length pieces inside one segment share their rotation
                        if stop - step != last_n:
                            last_n = stop - step
                            half = 0.5 * omega * tau
                            sh = math.sin(half)
                            ch = math.cos(half)
                            sn = 2.0 * sh * ch
                            cs = 1.0 - 2.0 * sh * sh
                            along = sn * inv_omega
                            across = 2.0 * sh * sh * inv_omega
                        px, py = px + along * vx - across * vy, py + across * vx + along * vy
                        vx, vy = cs * vx - sn * vy, sn * vx + cs * vy
                    step = stop
                out[row, h, 0] = px
                out[row, h, 1] = py


@numba.njit(cache=True)
def clip_norm(ax, ay, a_max):
    nrm = math.hypot(ax, ay)
    if nrm <= a_max:
        return ax, ay
    k = a_max / nrm
    ax *= k
    ay *= k
    # settle slightly inside the bound so any faithful norm evaluation stays <= a_max
    lim = a_max * (1.0 - 1e-15)
    while math.hypot(ax, ay) > lim:
        ax *= 1.0 - 1e-15
        ay *= 1.0 - 1e-15
    return ax, ay


@numba.njit(cache=True)
def pn_command(pix, piy, vix, viy, ptx, pty, vtx, vty, nav_gain, a_max):
    rx = ptx - pix
    ry = pty - piy
    rdx = vtx - vix
    rdy = vty - viy
    r2 = rx * rx + ry * ry
    lam_dot = (rx * rdy - ry * rdx) / r2
    r = math.sqrt(r2)
    v_c = -(rx * rdx + ry * rdy) / r
    mag = nav_gain * v_c * lam_dot
    return clip_norm(-ry / r * mag, rx / r * mag, a_max)


@numba.njit(cache=True)
def segment_cpa(r0x, r0y, r1x, r1y):
    dx = r1x - r0x
    dy = r1y - r0y
    dd = dx * dx + dy * dy
    s = 0.0
    if dd > 0.0:
        s = -(r0x * dx + r0y * dy) / dd
        if s < 0.0:
            s = 0.0
        elif s > 1.0:
            s = 1.0
    cx = r0x + s * dx
    cy = r0y + s * dy
    return math.sqrt(cx * cx + cy * cy)


@numba.njit(cache=True)
def run_block(
    pos, vel, active, speed0, m, n,
    t_cmd, k0, nsteps,
    held, lock, pn_every, nav_gain, a_max, dt,
    d_endgame, d_hit,
    prev, closest, stats,
):
    """Advance up to ``nsteps`` sim steps, stopping right after any step that
    needs bookkeeping (a pair inside ``d_hit`` or a midcourse interceptor
    inside ``d_endgame``). Returns the number of steps taken and whether it
    stopped early. ``stats`` accumulates [max command norm, max speed drift].
    """
    R = m + n
    for it in range(nsteps):
        k = k0 + it
        if k % pn_every == 0:
            for i in range(n):
                r = m + i
                tj = lock[i]
                if not active[r] or tj < 0 or not active[tj]:
                    continue
                ax, ay = pn_command(pos[r, 0], pos[r, 1], vel[r, 0], vel[r, 1],
                                    pos[tj, 0], pos[tj, 1], vel[tj, 0], vel[tj, 1], nav_gain, a_max)
                held[i, 0] = ax
                held[i, 1] = ay
        for i in range(n):
            if active[m + i]:
                c = math.hypot(held[i, 0], held[i, 1])
                if c > stats[0]:
                    stats[0] = c
        for r in range(R):
            prev[r, 0] = pos[r, 0]
            prev[r, 1] = pos[r, 1]
            if not active[r]:
                continue
            vx = vel[r, 0]
            vy = vel[r, 1]
            if r < m:
                a_lat = t_cmd[k, r]
            else:
                i = r - m
                a_lat = (vx * held[i, 1] - vy * held[i, 0]) / math.sqrt(vx * vx + vy * vy)
            px, py, vx, vy = arc(pos[r, 0], pos[r, 1], vx, vy, a_lat, dt)
            pos[r, 0] = px
            pos[r, 1] = py
            vel[r, 0] = vx
            vel[r, 1] = vy
            drift = abs(math.sqrt(vx * vx + vy * vy) - speed0[r]) / speed0[r]
            if drift > stats[1]:
                stats[1] = drift
        event = False
        for i in range(n):
            r = m + i
            if not active[r]:
                continue
            for j in range(m):
                if not active[j]:
                    continue
                d = segment_cpa(prev[r, 0] - prev[j, 0], prev[r, 1] - prev[j, 1],
                                pos[r, 0] - pos[j, 0], pos[r, 1] - pos[j, 1])
                if d < closest[i]:
                    closest[i] = d
                if d <= d_hit:
                    event = True
                if lock[i] < 0:
                    ex = pos[r, 0] - pos[j, 0]
                    ey = pos[r, 1] - pos[j, 1]
                    if math.sqrt(ex * ex + ey * ey) <= d_endgame:
                        event = True
        if event:
            return it + 1, True
    return nsteps, False


@numba.njit(cache=True, inline="always")
def _dist(x, i, c, j):
    acc = 0.0
    for t in range(x.shape[1]):
        e = x[i, t] - c[j, t]
        acc += e * e
    return math.sqrt(acc)


@numba.njit(cache=True)
def _means(x, labels, k, sums, counts):
    sums[:] = 0.0
    counts[:] = 0
    for i in range(x.shape[0]):
        j = labels[i]
        counts[j] += 1
        for t in range(x.shape[1]):
            sums[j, t] += x[i, t]


@numba.njit(cache=True)
def lloyd(x, c, max_iter, tol, labels, obj):
    """Lloyd iterations on rows of ``x`` (n, 2 n_t) from centres ``c`` (k, 2 n_t).

    Hamerly's bounds skip points whose assignment provably cannot change, so
    the iterates are those of plain Lloyd. Empty clusters take the sample
    farthest from its current centre, drawn from a cluster that can spare one.
    Stops once every centre moves less than ``tol`` at every time step.
    Writes the objective after each update into ``obj`` when it is non-empty.
    Returns (centres, iterations); centres are the means of ``labels``.
    """
    n, d = x.shape
    k = c.shape[0]
    sums = np.empty((k, d))
    counts = np.empty(k, dtype=np.int64)
    upper = np.empty(n)
    lower = np.empty(n)
    shift = np.empty(k)
    half_gap = np.empty(k)

    # first assignment through the expanded form, one matrix product
    cc = np.empty(k)
    for j in range(k):
        acc = 0.0
        for t in range(d):
            acc += c[j, t] * c[j, t]
        cc[j] = acc
    g = x @ np.ascontiguousarray(c.T)
    for i in range(n):
        xx = 0.0
        for t in range(d):
            xx += x[i, t] * x[i, t]
        best, second = 0, -1
        bv, sv = xx - 2.0 * g[i, 0] + cc[0], math.inf
        for j in range(1, k):
            v = xx - 2.0 * g[i, j] + cc[j]
            if v < bv:
                second, sv = best, bv
                best, bv = j, v
            elif v < sv:
                second, sv = j, v
        labels[i] = best
        upper[i] = _dist(x, i, c, best)
        # slack covers rounding in the expanded form
        lower[i] = math.sqrt(max(sv, 0.0)) - 1e-6 if second >= 0 else math.inf
    _means(x, labels, k, sums, counts)

    it = 0
    while True:
        it += 1
        if np.any(counts == 0):
            _repair_empty(x, c, labels, counts)
            _means(x, labels, k, sums, counts)
            upper[:] = math.inf
            lower[:] = 0.0
        new_c = np.empty_like(c)
        move = 0.0
        for j in range(k):
            acc = 0.0
            for t in range(d):
                new_c[j, t] = sums[j, t] / counts[j]
                e = new_c[j, t] - c[j, t]
                acc += e * e
            shift[j] = math.sqrt(acc)
            for t in range(0, d, 2):
                dx = new_c[j, t] - c[j, t]
                dy = new_c[j, t + 1] - c[j, t + 1]
                mv = math.sqrt(dx * dx + dy * dy)
                if mv > move:
                    move = mv
        c = new_c
        if obj.size > 0:
            total = 0.0
            for i in range(n):
                for t in range(d):
                    e = x[i, t] - c[labels[i], t]
                    total += e * e
            obj[it - 1] = total
        if move < tol or it >= max_iter:
            break

        # bounds after the centre update
        far1, far2, arg1 = 0.0, 0.0, -1
        for j in range(k):
            if shift[j] > far1:
                far2 = far1
                far1, arg1 = shift[j], j
            elif shift[j] > far2:
                far2 = shift[j]
        for j in range(k):
            m = math.inf
            for q in range(k):
                if q != j:
                    m = min(m, _dist(c, j, c, q))
            half_gap[j] = 0.5 * m
        for i in range(n):
            a = labels[i]
            upper[i] += shift[a]
            lower[i] -= far2 if a == arg1 else far1
            bound = max(half_gap[a], lower[i])
            if upper[i] <= bound:
                continue
            upper[i] = _dist(x, i, c, a)
            if upper[i] <= bound:
                continue
            best, bv, sv = a, upper[i], math.inf
            for j in range(k):
                if j == a:
                    continue
                v = _dist(x, i, c, j)
                if v < bv or (v == bv and j < best):
                    sv = bv
                    best, bv = j, v
                elif v < sv:
                    sv = v
            lower[i] = sv
            upper[i] = bv
            if best != a:
                labels[i] = best
                counts[a] -= 1
                counts[best] += 1
                for t in range(d):
                    sums[a, t] -= x[i, t]
                    sums[best, t] += x[i, t]

    # exact means of the final labels, free of incremental rounding
    _means(x, labels, k, sums, counts)
    for j in range(k):
        for t in range(d):
            c[j, t] = sums[j, t] / counts[j]
    return c, it


@numba.njit(cache=True)
def _repair_empty(x, c, labels, counts):
    n, d = x.shape
    far = np.empty(n)
    for i in range(n):
        acc = 0.0
        for t in range(d):
            e = x[i, t] - c[labels[i], t]
            acc += e * e
        far[i] = acc
    for j in range(c.shape[0]):
        if counts[j] != 0:
            continue
        best = -1
        bestv = -1.0
        for i in range(n):
            v = far[i] if counts[labels[i]] > 1 else -1.0
            if v > bestv:
                bestv = v
                best = i
        counts[labels[best]] -= 1
        counts[j] += 1
        labels[best] = j
        far[best] = -1.0


@numba.njit(cache=True)
def assign_accumulate(x, g, cc, labels, sums, counts):
    """Nearest-centre labels from the cross products ``g = x @ c.T`` plus per-cluster sums."""
    n, d = x.shape
    k = g.shape[1]
    sums[:] = 0.0
    counts[:] = 0
    for i in range(n):
        best = 0
        bestv = cc[0] - 2.0 * g[i, 0]
        for j in range(1, k):
            v = cc[j] - 2.0 * g[i, j]
            if v < bestv:
                bestv = v
                best = j
        labels[i] = best
        counts[best] += 1
        for t in range(d):
            sums[best, t] += x[i, t]
