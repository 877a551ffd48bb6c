"""Deterministic 2D mechanics for the calculator catalog.

Point-mass disks in a square box with elastic wall and disk-disk collisions,
zero-rest-length springs, an inverse-square pull, hinged rotors, and a
kinematic gear drive. Integration is fixed-step velocity Verlet
(half-kick, drift, half-kick); wall crossings are folded back across the
wall plane and disk pairs are rewound to the interpolated contact time, so
identical inputs give bit-for-bit identical trajectories.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .vec import Vec2

# Contact penetration allowed after a step, in length units.
OVERLAP_TOLERANCE = 1e-9
# Evaluating an inverse-square force closer to the center than this is an error.
CENTRAL_FORCE_FLOOR = 1e-9


class SimulationError(RuntimeError):
    """Raised when the integrator produces or receives a non-finite state."""


@dataclass(slots=True)
class Disk:
    mass: float
    radius: float
    pos: Vec2
    vel: Vec2
    body_id: str
    # -1 keeps the disk left of the partition wall, +1 right, 0 unconstrained.
    partition_side: int = 0

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError(f"disk mass must be > 0, got {self.mass}")
        if self.radius < 0:
            raise ValueError(f"disk radius must be >= 0, got {self.radius}")


@dataclass(slots=True)
class WallBox:
    side: float
    center: Vec2 = field(default_factory=Vec2)

    def __post_init__(self):
        if self.side <= 0:
            raise ValueError(f"box side must be > 0, got {self.side}")

    @property
    def x_lo(self) -> float:
        return self.center.x - self.side / 2

    @property
    def x_hi(self) -> float:
        return self.center.x + self.side / 2

    @property
    def y_lo(self) -> float:
        return self.center.y - self.side / 2

    @property
    def y_hi(self) -> float:
        return self.center.y + self.side / 2


@dataclass(slots=True)
class Spring:
    stiffness: float
    rest_length: float
    anchor: Vec2
    attached_body: str

    def __post_init__(self):
        if self.stiffness <= 0:
            raise ValueError(f"spring stiffness must be > 0, got {self.stiffness}")


@dataclass(slots=True)
class CentralPull:
    """Inverse-square attraction toward a fixed center acting on one disk."""

    coupling: float
    charge: float
    center: Vec2
    attached_body: str


@dataclass(slots=True)
class Rotor:
    moment_of_inertia: float
    angle: float
    angular_velocity: float
    marker_radius: float
    pivot: Vec2 = field(default_factory=Vec2)
    body_id: str = "rotor"

    def __post_init__(self):
        if self.moment_of_inertia <= 0:
            raise ValueError("rotor moment of inertia must be > 0")
        if self.marker_radius <= 0:
            raise ValueError("rotor marker radius must be > 0")

    def marker_pos(self) -> Vec2:
        return Vec2(
            self.pivot.x + self.marker_radius * math.cos(self.angle),
            self.pivot.y + self.marker_radius * math.sin(self.angle),
        )

    def marker_vel(self) -> Vec2:
        w = self.angular_velocity * self.marker_radius
        return Vec2(-w * math.sin(self.angle), w * math.cos(self.angle))


@dataclass(slots=True)
class GearDrive:
    """Rack carrying a light source, shuttled by alternately engaged wheels.

    Simulated kinematically: the rack position is a triangle wave of time,
    |dx/dt| = speed away from the switch instants, and the wheel angles and
    spring extensions are hidden bookkeeping coordinates.
    """

    speed: float
    half_period: float
    phase: float = 0.0
    track_y: float = 0.0
    hidden_wheel_angles: tuple[float, float] = (0.0, 0.0)
    hidden_spring_extensions: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.speed <= 0:
            raise ValueError("gear speed must be > 0")
        if self.half_period <= 0:
            raise ValueError("gear half period must be > 0")

    def position(self, t: float) -> Vec2:
        amp = self.speed * self.half_period / 2
        tau = math.fmod(t + self.phase, 2 * self.half_period)
        if tau < 0:
            tau += 2 * self.half_period
        if tau < self.half_period:
            x = -amp + self.speed * tau
        else:
            x = amp - self.speed * (tau - self.half_period)
        return Vec2(x, self.track_y)

    def velocity(self, t: float) -> Vec2:
        tau = math.fmod(t + self.phase, 2 * self.half_period)
        if tau < 0:
            tau += 2 * self.half_period
        return Vec2(self.speed if tau < self.half_period else -self.speed, 0.0)


@dataclass(slots=True)
class StepEvent:
    """Impulsive event resolved inside a step, with the interpolated time."""

    time: float
    kind: str  # "wall", "partition", or "pair"
    bodies: tuple[str, ...]
    location: Vec2


@dataclass(slots=True)
class World:
    disks: tuple[Disk, ...] = ()
    rotors: tuple[Rotor, ...] = ()
    springs: tuple[Spring, ...] = ()
    central_pulls: tuple[CentralPull, ...] = ()
    box: WallBox | None = None
    partition_wall: float | None = None
    gear: GearDrive | None = None
    time: float = 0.0
    drag: float = 0.0
    # Events resolved during the most recent step (not cumulative).
    step_events: tuple[StepEvent, ...] = ()


def reflect(vel: Vec2, wall_normal: Vec2) -> Vec2:
    """Specular reflection: flip the normal component, keep the tangential."""
    n2 = wall_normal.norm2()
    if n2 == 0.0:
        raise ValueError("wall normal must be non-zero")
    if abs(n2 - 1.0) > 1e-9:
        raise ValueError(f"wall normal must have unit length, |n|^2={n2}")
    vn = vel.dot(wall_normal)
    return Vec2(vel.x - 2.0 * vn * wall_normal.x, vel.y - 2.0 * vn * wall_normal.y)


def collide_disks(
    m1: float, v1: Vec2, m2: float, v2: Vec2, normal: Vec2
) -> tuple[Vec2, Vec2]:
    """Elastic impulse exchange along the contact normal.

    Conserves momentum and kinetic energy; tangential components are
    untouched.
    """
    if m1 <= 0 or m2 <= 0:
        raise ValueError("masses must be > 0")
    n2 = normal.norm2()
    if n2 == 0.0:
        raise ValueError("contact normal must be non-zero")
    if abs(n2 - 1.0) > 1e-9:
        raise ValueError(f"contact normal must have unit length, |n|^2={n2}")
    rel_n = (v1 - v2).dot(normal)
    j = 2.0 * m1 * m2 / (m1 + m2) * rel_n
    v1p = Vec2(v1.x - (j / m1) * normal.x, v1.y - (j / m1) * normal.y)
    v2p = Vec2(v2.x + (j / m2) * normal.x, v2.y + (j / m2) * normal.y)
    return v1p, v2p


def central_force(k: float, a: float, r_vec: Vec2) -> Vec2:
    """Attractive inverse-square force k*a^2/|r|^2 pointing at the center."""
    r2 = r_vec.norm2()
    r = math.sqrt(r2)
    if r < CENTRAL_FORCE_FLOOR:
        raise ValueError(f"distance {r} below singularity floor {CENTRAL_FORCE_FLOOR}")
    mag = k * a * a / r2
    return Vec2(-mag * r_vec.x / r, -mag * r_vec.y / r)


def total_energy(world: World) -> float:
    """Kinetic plus spring and inverse-square potential energy."""
    e = 0.0
    for d in world.disks:
        e += 0.5 * d.mass * d.vel.norm2()
    for r in world.rotors:
        e += 0.5 * r.moment_of_inertia * r.angular_velocity**2
    for s in world.springs:
        d = _disk_by_id(world, s.attached_body)
        stretch = (d.pos - s.anchor).norm() - s.rest_length
        e += 0.5 * s.stiffness * stretch * stretch
    for c in world.central_pulls:
        d = _disk_by_id(world, c.attached_body)
        r = (d.pos - c.center).norm()
        if r > CENTRAL_FORCE_FLOOR:
            e -= c.coupling * c.charge * c.charge / r
    return e


def _disk_by_id(world: World, body_id: str) -> Disk:
    for d in world.disks:
        if d.body_id == body_id:
            return d
    raise KeyError(f"no disk with body id {body_id!r}")


def _disk_force(world: World, body_id: str, px: float, py: float, vx: float, vy: float,
                fx: float, fy: float) -> tuple[float, float]:
    for s in world.springs:
        if s.attached_body == body_id:
            dx = px - s.anchor.x
            dy = py - s.anchor.y
            if s.rest_length == 0.0:
                fx -= s.stiffness * dx
                fy -= s.stiffness * dy
            else:
                dist = math.sqrt(dx * dx + dy * dy)
                if dist > 0.0:
                    coeff = s.stiffness * (dist - s.rest_length) / dist
                    fx -= coeff * dx
                    fy -= coeff * dy
    for c in world.central_pulls:
        if c.attached_body == body_id:
            dx = px - c.center.x
            dy = py - c.center.y
            r2 = dx * dx + dy * dy
            r = math.sqrt(r2)
            if r < CENTRAL_FORCE_FLOOR:
                raise SimulationError(f"disk {body_id} hit the force singularity")
            coeff = c.coupling * c.charge * c.charge / (r2 * r)
            fx -= coeff * dx
            fy -= coeff * dy
    if world.drag != 0.0:
        fx -= world.drag * vx
        fy -= world.drag * vy
    return fx, fy


def step(world: World, dt: float, applied: dict[str, Vec2] | None = None) -> World:
    """Advance the world by one fixed step of velocity Verlet.

    ``applied`` maps body ids to external forces held constant for the step.
    Wall reflections and disk-disk contacts occurring inside the step are
    resolved at the interpolated crossing time.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    t0 = world.time
    events: list[StepEvent] = []

    n = len(world.disks)
    px = [0.0] * n
    py = [0.0] * n
    vhx = [0.0] * n
    vhy = [0.0] * n
    npx = [0.0] * n
    npy = [0.0] * n

    for i, d in enumerate(world.disks):
        f = applied.get(d.body_id) if applied else None
        fx, fy = (f.x, f.y) if f is not None else (0.0, 0.0)
        fx, fy = _disk_force(world, d.body_id, d.pos.x, d.pos.y, d.vel.x, d.vel.y, fx, fy)
        inv_m = 1.0 / d.mass
        vhx[i] = d.vel.x + 0.5 * dt * fx * inv_m
        vhy[i] = d.vel.y + 0.5 * dt * fy * inv_m
        px[i] = d.pos.x
        py[i] = d.pos.y
        npx[i] = d.pos.x + dt * vhx[i]
        npy[i] = d.pos.y + dt * vhy[i]

    # Disk-disk contacts on the drift path, earliest first. At most a few
    # disks, so the quadratic pair scan is fine.
    if n > 1:
        for i in range(n):
            for j in range(i + 1, n):
                di, dj = world.disks[i], world.disks[j]
                contact = di.radius + dj.radius
                ddx = npx[i] - npx[j]
                ddy = npy[i] - npy[j]
                if ddx * ddx + ddy * ddy >= contact * contact:
                    continue
                rx = px[i] - px[j]
                ry = py[i] - py[j]
                rvx = vhx[i] - vhx[j]
                rvy = vhy[i] - vhy[j]
                a = rvx * rvx + rvy * rvy
                if a == 0.0:
                    continue
                b = 2.0 * (rx * rvx + ry * rvy)
                c = rx * rx + ry * ry - contact * contact
                disc = b * b - 4.0 * a * c
                if disc < 0.0:
                    continue
                tau = (-b - math.sqrt(disc)) / (2.0 * a)
                tau = min(max(tau, 0.0), dt)
                cix = px[i] + vhx[i] * tau
                ciy = py[i] + vhy[i] * tau
                cjx = px[j] + vhx[j] * tau
                cjy = py[j] + vhy[j] * tau
                nx = cix - cjx
                ny = ciy - cjy
                nn = math.sqrt(nx * nx + ny * ny)
                if nn == 0.0:
                    continue
                nx /= nn
                ny /= nn
                rel_n = rvx * nx + rvy * ny
                if rel_n >= 0.0:
                    continue  # already separating
                jimp = 2.0 * di.mass * dj.mass / (di.mass + dj.mass) * rel_n
                vhx[i] -= jimp / di.mass * nx
                vhy[i] -= jimp / di.mass * ny
                vhx[j] += jimp / dj.mass * nx
                vhy[j] += jimp / dj.mass * ny
                rest = dt - tau
                npx[i] = cix + vhx[i] * rest
                npy[i] = ciy + vhy[i] * rest
                npx[j] = cjx + vhx[j] * rest
                npy[j] = cjy + vhy[j] * rest
                mid = Vec2((cix + cjx) / 2, (ciy + cjy) / 2)
                events.append(StepEvent(t0 + tau, "pair", (di.body_id, dj.body_id), mid))

    # Wall folds: partition first, then the enclosing box.
    for i, d in enumerate(world.disks):
        if world.partition_wall is not None and d.partition_side != 0:
            w = world.partition_wall
            if d.partition_side < 0 and npx[i] > w:
                tau = (w - px[i]) / vhx[i] if vhx[i] != 0.0 else dt
                yc = py[i] + vhy[i] * min(max(tau, 0.0), dt)
                npx[i] = 2.0 * w - npx[i]
                vhx[i] = -vhx[i]
                events.append(StepEvent(t0 + min(max(tau, 0.0), dt), "partition",
                                        (d.body_id,), Vec2(w, yc)))
            elif d.partition_side > 0 and npx[i] < w:
                tau = (w - px[i]) / vhx[i] if vhx[i] != 0.0 else dt
                yc = py[i] + vhy[i] * min(max(tau, 0.0), dt)
                npx[i] = 2.0 * w - npx[i]
                vhx[i] = -vhx[i]
                events.append(StepEvent(t0 + min(max(tau, 0.0), dt), "partition",
                                        (d.body_id,), Vec2(w, yc)))
        if world.box is not None:
            box = world.box
            if npx[i] > box.x_hi:
                tau = (box.x_hi - px[i]) / vhx[i] if vhx[i] != 0.0 else dt
                tau = min(max(tau, 0.0), dt)
                events.append(StepEvent(t0 + tau, "wall", (d.body_id,),
                                        Vec2(box.x_hi, py[i] + vhy[i] * tau)))
                npx[i] = 2.0 * box.x_hi - npx[i]
                vhx[i] = -vhx[i]
            elif npx[i] < box.x_lo:
                tau = (box.x_lo - px[i]) / vhx[i] if vhx[i] != 0.0 else dt
                tau = min(max(tau, 0.0), dt)
                events.append(StepEvent(t0 + tau, "wall", (d.body_id,),
                                        Vec2(box.x_lo, py[i] + vhy[i] * tau)))
                npx[i] = 2.0 * box.x_lo - npx[i]
                vhx[i] = -vhx[i]
            if npy[i] > box.y_hi:
                tau = (box.y_hi - py[i]) / vhy[i] if vhy[i] != 0.0 else dt
                tau = min(max(tau, 0.0), dt)
                events.append(StepEvent(t0 + tau, "wall", (d.body_id,),
                                        Vec2(px[i] + vhx[i] * tau, box.y_hi)))
                npy[i] = 2.0 * box.y_hi - npy[i]
                vhy[i] = -vhy[i]
            elif npy[i] < box.y_lo:
                tau = (box.y_lo - py[i]) / vhy[i] if vhy[i] != 0.0 else dt
                tau = min(max(tau, 0.0), dt)
                events.append(StepEvent(t0 + tau, "wall", (d.body_id,),
                                        Vec2(px[i] + vhx[i] * tau, box.y_lo)))
                npy[i] = 2.0 * box.y_lo - npy[i]
                vhy[i] = -vhy[i]

    # Final half-kick at the new positions.
    new_disks = []
    for i, d in enumerate(world.disks):
        f = applied.get(d.body_id) if applied else None
        fx, fy = (f.x, f.y) if f is not None else (0.0, 0.0)
        fx, fy = _disk_force(world, d.body_id, npx[i], npy[i], vhx[i], vhy[i], fx, fy)
        inv_m = 1.0 / d.mass
        nvx = vhx[i] + 0.5 * dt * fx * inv_m
        nvy = vhy[i] + 0.5 * dt * fy * inv_m
        if not (math.isfinite(npx[i]) and math.isfinite(npy[i])
                and math.isfinite(nvx) and math.isfinite(nvy)):
            raise SimulationError(
                f"non-finite state for disk {d.body_id} at t={t0}: "
                f"pos=({npx[i]}, {npy[i]}) vel=({nvx}, {nvy})"
            )
        new_disks.append(Disk(d.mass, d.radius, Vec2(npx[i], npy[i]),
                              Vec2(nvx, nvy), d.body_id, d.partition_side))

    new_rotors = []
    for r in world.rotors:
        f = applied.get(r.body_id) if applied else None
        if f is not None and (f.x != 0.0 or f.y != 0.0):
            torque0 = _marker_torque(r, r.angle, f)
            w_half = r.angular_velocity + 0.5 * dt * torque0 / r.moment_of_inertia
            angle_new = r.angle + dt * w_half
            torque1 = _marker_torque(r, angle_new, f)
            w_new = w_half + 0.5 * dt * torque1 / r.moment_of_inertia
        else:
            w_new = r.angular_velocity
            angle_new = r.angle + dt * w_new
        if not (math.isfinite(angle_new) and math.isfinite(w_new)):
            raise SimulationError(f"non-finite rotor state at t={t0}")
        new_rotors.append(Rotor(r.moment_of_inertia, angle_new, w_new,
                                r.marker_radius, r.pivot, r.body_id))

    new_gear = world.gear
    if new_gear is not None:
        rate = new_gear.speed  # wheel rim speed matches the rack speed
        wa, wb = new_gear.hidden_wheel_angles
        new_gear = GearDrive(new_gear.speed, new_gear.half_period,
                             new_gear.phase, new_gear.track_y,
                             (wa + rate * dt, wb - rate * dt),
                             new_gear.hidden_spring_extensions)

    return World(
        disks=tuple(new_disks),
        rotors=tuple(new_rotors),
        springs=world.springs,
        central_pulls=world.central_pulls,
        box=world.box,
        partition_wall=world.partition_wall,
        gear=new_gear,
        time=t0 + dt,
        drag=world.drag,
        step_events=tuple(events),
    )


def _marker_torque(rotor: Rotor, angle: float, force: Vec2) -> float:
    rx = rotor.marker_radius * math.cos(angle)
    ry = rotor.marker_radius * math.sin(angle)
    return rx * force.y - ry * force.x


def run(world: World, dt: float, n_steps: int,
        applied: dict[str, Vec2] | None = None) -> World:
    """Step ``n_steps`` times with a constant applied-force map."""
    for _ in range(n_steps):
        world = step(world, dt, applied)
    return world
