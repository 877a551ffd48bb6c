"""Independent oracles the tests check the simulation and observer against.

Everything here is closed-form or brute-force and deliberately avoids the
code paths under test.
"""
from __future__ import annotations

import math

from vrlab.dynamics import step


def folded_position(x0: float, v: float, t: float, lo: float, hi: float) -> float:
    """Position of a point bouncing elastically between lo and hi.

    The free line x0 + v t folded into [lo, hi]: the classic triangle-wave
    unfolding of specular reflection.
    """
    width = hi - lo
    z = math.fmod(x0 - lo + v * t, 2.0 * width)
    if z < 0:
        z += 2.0 * width
    return lo + (z if z <= width else 2.0 * width - z)


def bounce_times(x0: float, v: float, lo: float, hi: float, t_end: float
                 ) -> list[float]:
    """Instants at which the bouncing point touches a wall, in (0, t_end)."""
    if v == 0:
        return []
    times = []
    x, vel, t = x0, v, 0.0
    while True:
        if vel > 0:
            dt = (hi - x) / vel
            x = hi
        else:
            dt = (lo - x) / vel
            x = lo
        t += dt
        if t >= t_end:
            return times
        times.append(t)
        vel = -vel


def elastic_1d(m1: float, u1: float, m2: float, u2: float) -> tuple[float, float]:
    """Post-collision speeds for a 1D elastic collision, from the standard
    conservation equations solved independently."""
    v1 = ((m1 - m2) * u1 + 2 * m2 * u2) / (m1 + m2)
    v2 = ((m2 - m1) * u2 + 2 * m1 * u1) / (m1 + m2)
    return v1, v2


def first_pair_collision_time(world, dt: float, t_end: float) -> float | None:
    """True first disk-disk contact time from a full-state simulation."""
    n = int(round(t_end / dt))
    for _ in range(n):
        world = step(world, dt)
        for event in world.step_events:
            if event.kind == "pair":
                return event.time
    return None


def wall_bounce_schedule(calc, t_end: float) -> list[tuple[float, str]]:
    """Analytic (time, axis) wall-bounce schedule for a force-free boxed disk."""
    d = calc.world.disks[0]
    box = calc.world.box
    out = [(t, "x") for t in bounce_times(d.pos.x, d.vel.x, box.x_lo, box.x_hi, t_end)]
    out += [(t, "y") for t in bounce_times(d.pos.y, d.vel.y, box.y_lo, box.y_hi, t_end)]
    return sorted(out)
