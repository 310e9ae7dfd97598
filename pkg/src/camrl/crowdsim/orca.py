"""Optimal reciprocal collision avoidance for a single agent.

Each neighbour contributes one half-plane of admissible velocities (velocity
obstacle truncated at ``time_horizon``, half the avoidance effort assigned to
each side). The new velocity is the point of the intersection closest to the
preferred velocity inside the speed disc; when the half-planes have no common
point, the 3-D fallback minimises the largest violation instead.

Pure-python floats: neighbour counts are small and numpy call overhead would
dominate.
"""
from __future__ import annotations

import math

import numpy as np

EPS = 1e-5

Line = tuple[float, float, float, float]  # point x, point y, direction x, direction y


def _det(ax: float, ay: float, bx: float, by: float) -> float:
    return ax * by - ay * bx


def orca_lines(
    p: tuple[float, float],
    v: tuple[float, float],
    r: float,
    neighbors,
    dt: float,
    time_horizon: float,
) -> list[Line]:
    px, py = p
    vx, vy = v
    inv_tau = 1.0 / time_horizon
    lines: list[Line] = []
    for q in neighbors:
        rpx, rpy = q[0] - px, q[1] - py
        rvx, rvy = vx - q[2], vy - q[3]
        dist_sq = rpx * rpx + rpy * rpy
        cr = r + q[4]
        cr_sq = cr * cr
        if dist_sq > cr_sq:
            wx, wy = rvx - inv_tau * rpx, rvy - inv_tau * rpy
            w_len_sq = wx * wx + wy * wy
            dot1 = wx * rpx + wy * rpy
            if dot1 < 0.0 and dot1 * dot1 > cr_sq * w_len_sq:
                # project on the cut-off circle
                w_len = math.sqrt(w_len_sq)
                ux, uy = wx / w_len, wy / w_len
                dx, dy = uy, -ux
                s = cr * inv_tau - w_len
                ux, uy = s * ux, s * uy
            else:
                # project on a leg
                leg = math.sqrt(dist_sq - cr_sq)
                if _det(rpx, rpy, wx, wy) > 0.0:
                    dx = (rpx * leg - rpy * cr) / dist_sq
                    dy = (rpx * cr + rpy * leg) / dist_sq
                else:
                    dx = -(rpx * leg + rpy * cr) / dist_sq
                    dy = -(-rpx * cr + rpy * leg) / dist_sq
                dot2 = rvx * dx + rvy * dy
                ux, uy = dot2 * dx - rvx, dot2 * dy - rvy
        else:
            # already overlapping: resolve within one time step
            inv_dt = 1.0 / dt
            wx, wy = rvx - inv_dt * rpx, rvy - inv_dt * rpy
            w_len = math.hypot(wx, wy)
            ux, uy = wx / w_len, wy / w_len
            dx, dy = uy, -ux
            s = cr * inv_dt - w_len
            ux, uy = s * ux, s * uy
        lines.append((vx + 0.5 * ux, vy + 0.5 * uy, dx, dy))
    return lines


def _lp1(lines, i, radius, opt, direction_opt):
    px, py, dx, dy = lines[i]
    dot = px * dx + py * dy
    disc = dot * dot + radius * radius - (px * px + py * py)
    if disc < 0.0:
        return None
    sq = math.sqrt(disc)
    t_left, t_right = -dot - sq, -dot + sq
    for j in range(i):
        qx, qy, ex, ey = lines[j]
        denom = _det(dx, dy, ex, ey)
        numer = _det(ex, ey, px - qx, py - qy)
        if abs(denom) <= EPS:
            if numer < 0.0:
                return None
            continue
        t = numer / denom
        if denom >= 0.0:
            t_right = min(t_right, t)
        else:
            t_left = max(t_left, t)
        if t_left > t_right:
            return None
    ox, oy = opt
    if direction_opt:
        t = t_right if ox * dx + oy * dy > 0.0 else t_left
    else:
        t = dx * (ox - px) + dy * (oy - py)
        t = min(max(t, t_left), t_right)
    return px + t * dx, py + t * dy


def _lp2(lines, radius, opt, direction_opt):
    ox, oy = opt
    if direction_opt:
        result = (ox * radius, oy * radius)
    elif ox * ox + oy * oy > radius * radius:
        n = math.hypot(ox, oy)
        result = (ox / n * radius, oy / n * radius)
    else:
        result = (ox, oy)
    for i, (px, py, dx, dy) in enumerate(lines):
        if _det(dx, dy, px - result[0], py - result[1]) > 0.0:
            new = _lp1(lines, i, radius, opt, direction_opt)
            if new is None:
                return i, result
            result = new
    return len(lines), result


def _lp3(lines, begin, radius, result):
    distance = 0.0
    for i in range(begin, len(lines)):
        pix, piy, dix, diy = lines[i]
        if _det(dix, diy, pix - result[0], piy - result[1]) > distance:
            proj = []
            for j in range(i):
                pjx, pjy, djx, djy = lines[j]
                determinant = _det(dix, diy, djx, djy)
                if abs(determinant) <= EPS:
                    if dix * djx + diy * djy > 0.0:
                        continue
                    qx, qy = 0.5 * (pix + pjx), 0.5 * (piy + pjy)
                else:
                    s = _det(djx, djy, pix - pjx, piy - pjy) / determinant
                    qx, qy = pix + s * dix, piy + s * diy
                ex, ey = djx - dix, djy - diy
                n = math.hypot(ex, ey)
                proj.append((qx, qy, ex / n, ey / n))
            fail, new = _lp2(proj, radius, (-diy, dix), True)
            if fail >= len(proj):
                result = new
            distance = _det(dix, diy, pix - result[0], piy - result[1])
    return result


def solve(lines: list[Line], max_speed: float, pref: tuple[float, float]) -> tuple[float, float]:
    fail, result = _lp2(lines, max_speed, pref, False)
    if fail < len(lines):
        result = _lp3(lines, fail, max_speed, result)
    return result


def preferred_velocity(p, goal, v_pref: float) -> tuple[float, float]:
    dx, dy = goal[0] - p[0], goal[1] - p[1]
    d = math.hypot(dx, dy)
    if d == 0.0:
        return 0.0, 0.0
    return v_pref * dx / d, v_pref * dy / d


def orca_policy(
    self_state,
    neighbors,
    dt: float,
    time_horizon: float = 5.0,
    neighbor_dist: float = 10.0,
    max_speed: float | None = None,
    safety_space: float = 0.0,
) -> np.ndarray:
    """Velocity for an agent with full state ``[px, py, vx, vy, r, gx, gy, v_pref]``.

    ``neighbors`` is an iterable of observable rows ``[px, py, vx, vy, r]``.
    """
    if not dt > 0 or not time_horizon > 0:
        raise ValueError("dt and time_horizon must be > 0")
    s = [float(c) for c in self_state]
    px, py, vx, vy, r, gx, gy, v_pref = s
    max_speed = v_pref if max_speed is None else max_speed
    near = []
    lim = neighbor_dist * neighbor_dist
    for q in neighbors:
        q = [float(c) for c in q[:5]]
        d2 = (q[0] - px) ** 2 + (q[1] - py) ** 2
        if d2 < lim:
            near.append((d2, q))
    near.sort(key=lambda item: item[0])
    lines = orca_lines((px, py), (vx, vy), r + safety_space, [q for _, q in near], dt, time_horizon)
    pref = preferred_velocity((px, py), (gx, gy), v_pref)
    return np.array(solve(lines, max_speed, pref))
