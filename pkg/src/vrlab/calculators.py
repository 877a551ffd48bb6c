"""Catalog of simulated calculators: a world, a dof partition, a declaration.

Each catalog entry pairs the machine actually built (the world) with the
builder's public claim about what it simulates (the declaration) and the
agreed split of coordinates into output, input, and hidden computational
ones. Several entries deliberately misdeclare, which is the whole point.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, replace

from .dynamics import Disk, GearDrive, Rotor, Spring, WallBox, World
from .vec import Vec2

CATALOG_IDS = ("A", "B_full", "B_partial", "C", "D", "E", "F", "G", "H", "X")

FREE_MOTION = "FreeMotion"
FREE_MOTION_BOUNDED = "FreeMotionBounded"
HARMONIC = "Harmonic"
CENTRAL_FORCE = "CentralForce"

FAMILIES = (FREE_MOTION, FREE_MOTION_BOUNDED, HARMONIC, CENTRAL_FORCE)


@dataclass(frozen=True)
class WallLine:
    """Axis-aligned constraint line: axis 'x' means the plane x = position."""

    axis: str
    position: float

    def __post_init__(self):
        if self.axis not in ("x", "y"):
            raise ValueError(f"wall axis must be 'x' or 'y', got {self.axis!r}")


@dataclass(frozen=True)
class DofPartition:
    all_dofs: tuple[str, ...]
    output: tuple[str, ...]
    input: tuple[str, ...] = ()

    def __post_init__(self):
        if len(set(self.all_dofs)) != len(self.all_dofs):
            raise ValueError("dof ids must be unique")
        missing_o = set(self.output) - set(self.all_dofs)
        if missing_o:
            raise ValueError(f"output dofs not in the dof set: {sorted(missing_o)}")
        missing_i = set(self.input) - set(self.all_dofs)
        if missing_i:
            raise ValueError(f"input dofs not in the dof set: {sorted(missing_i)}")

    @property
    def hidden(self) -> tuple[str, ...]:
        # Recomputed, never stored: the complement of the output set.
        out = set(self.output)
        return tuple(d for d in self.all_dofs if d not in out)


@dataclass(frozen=True)
class Declaration:
    """The builder's claim: model family, parameters, declared constraints."""

    family: str
    params: dict[str, float] = field(default_factory=dict)
    declared_dof_count: int = 2
    declared_constraints: tuple[WallLine, ...] = ()
    declared_output_dofs: tuple[str, ...] = ()

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown declared family {self.family!r}")
        if self.declared_dof_count < 1:
            raise ValueError("declared dof count must be >= 1")
        if self.family == CENTRAL_FORCE:
            for key in ("k", "a", "m_p"):
                if self.params.get(key, 0.0) <= 0:
                    raise ValueError(f"central-force parameter {key} must be > 0")
        if self.family == HARMONIC and self.params.get("omega", 0.0) <= 0:
            raise ValueError("harmonic declaration needs omega > 0")
        if self.family == FREE_MOTION_BOUNDED and self.params.get("side", 0.0) <= 0:
            raise ValueError("bounded free-motion declaration needs side > 0")

    @property
    def mass(self) -> float:
        """Declared inertial mass (m_p for central force, 1 if unstated)."""
        if self.family == CENTRAL_FORCE:
            return self.params["m_p"]
        return self.params.get("mass", 1.0)

    @property
    def dynamics_family(self) -> str:
        """Family of the smooth dynamics, with wall bounds stripped."""
        return FREE_MOTION if self.family == FREE_MOTION_BOUNDED else self.family


@dataclass
class Calculator:
    id: str
    world: World
    partition: DofPartition
    declaration: Declaration
    total_dof_count: int
    # dof id -> (body kind, body index) with kind in {"disk", "rotor", "gear"};
    # the coordinate ('x' or 'y') is taken from the dof id prefix.
    coord_map: dict[str, tuple[str, int]] = field(default_factory=dict)
    # body id receiving controller forces, or None when there is no input.
    input_body: str | None = None
    characteristic_length: float = 1.0

    def __post_init__(self):
        for dof in self.partition.all_dofs:
            if dof not in self.coord_map:
                raise ValueError(f"dof {dof!r} has no coordinate accessor")
        if self.partition.input and self.input_body is None:
            raise ValueError("input dofs declared but no input body bound")

    def coordinate(self, dof: str, world: World | None = None) -> float:
        world = world if world is not None else self.world
        kind, idx = self.coord_map[dof]
        if kind == "disk":
            p = world.disks[idx].pos
        elif kind == "rotor":
            p = world.rotors[idx].marker_pos()
        elif kind == "gear":
            gear = world.gear
            if dof == "wheel_a":
                return gear.hidden_wheel_angles[0]
            if dof == "wheel_b":
                return gear.hidden_wheel_angles[1]
            if dof == "spring_a":
                return gear.hidden_spring_extensions[0]
            if dof == "spring_b":
                return gear.hidden_spring_extensions[1]
            p = gear.position(world.time)
        else:
            raise KeyError(f"unknown body kind {kind!r}")
        return p.x if dof[0] == "x" else p.y

    def coordinates(self, world: World | None = None) -> dict[str, float]:
        return {dof: self.coordinate(dof, world) for dof in self.partition.all_dofs}

    def output_values(self, world: World | None = None) -> tuple[float, ...]:
        return tuple(self.coordinate(dof, world) for dof in self.partition.output)

    def input_forces(self, force: Vec2) -> dict[str, Vec2]:
        if self.input_body is None:
            raise ValueError(f"calculator {self.id} has no controller")
        return {self.input_body: force}

    def copy(self) -> "Calculator":
        return copy.deepcopy(self)


def _box_walls(side: float) -> tuple[WallLine, ...]:
    h = side / 2
    return (
        WallLine("x", -h),
        WallLine("x", h),
        WallLine("y", -h),
        WallLine("y", h),
    )


# Documented catalog defaults; every entry can be overridden via build(**params).
DEFAULTS: dict[str, dict[str, float | tuple[float, float]]] = {
    "A": {"side": 10.0, "mass": 1.0, "radius": 0.5,
          "pos": (0.0, 0.0), "vel": (1.0, 0.7)},
    "B": {"side": 10.0, "mass": 1.0, "radius": 0.5,
          "pos1": (-2.0, 0.0), "vel1": (1.0, 0.35),
          "pos2": (2.0, 0.8), "vel2": (-1.0, 0.15)},
    "C": {"side": 10.0, "mass": 1.0, "radius": 0.5, "stiffness": 2.0,
          "pos": (1.5, 0.0), "vel": (0.0, 1.2)},
    "D": {"partition_x": 3.0, "hidden_pos": (4.0, -1.0), "hidden_vel": (0.8, 0.6)},
    "E": {"k": 1.0, "a": 1.0, "m_p": 1.0, "r": 2.0,
          "moment_of_inertia": 1.0, "angle": 0.3},
    "X": {"speed": 1.0, "half_period": 4.0, "phase": 0.0, "track_y": 0.0},
}


def build(calculator_id: str, **params) -> Calculator:
    """Build a catalog calculator, overriding documented defaults by keyword."""
    if calculator_id not in CATALOG_IDS:
        raise ValueError(
            f"unknown calculator {calculator_id!r}; expected one of {CATALOG_IDS}"
        )
    builder = {
        "A": _build_a,
        "B_full": lambda p: _build_b(full_output=True, **p),
        "B_partial": lambda p: _build_b(full_output=False, **p),
        "C": _build_c,
        "D": _build_d,
        "E": lambda p: _build_rotor(with_controller=False, **p),
        "F": _build_f,
        "G": _build_g,
        "H": lambda p: _build_rotor(with_controller=True, **p),
        "X": _build_x,
    }[calculator_id]
    return builder(params)


def _merged(defaults_key: str, params: dict) -> dict:
    merged = dict(DEFAULTS[defaults_key])
    unknown = set(params) - set(merged)
    if unknown:
        raise ValueError(f"unknown parameters {sorted(unknown)} "
                         f"for catalog entry {defaults_key}")
    merged.update(params)
    return merged


def _check_inside(side: float, pos: tuple[float, float], label: str):
    h = side / 2
    if not (-h < pos[0] < h and -h < pos[1] < h):
        raise ValueError(f"{label} position {pos} violates the box |x|,|y| < {h}")


def _free_disk_world(side, mass, radius, pos, vel) -> World:
    if side <= 0:
        raise ValueError(f"box side must be > 0, got {side}")
    _check_inside(side, pos, "disk")
    disk = Disk(mass, radius, Vec2(*pos), Vec2(*vel), body_id="d1")
    return World(disks=(disk,), box=WallBox(side))


def _build_a(params: dict) -> Calculator:
    p = _merged("A", params)
    world = _free_disk_world(p["side"], p["mass"], p["radius"], p["pos"], p["vel"])
    decl = Declaration(
        family=FREE_MOTION_BOUNDED,
        params={"side": p["side"], "mass": p["mass"]},
        declared_dof_count=2,
        declared_constraints=_box_walls(p["side"]),
        declared_output_dofs=("x", "y"),
    )
    part = DofPartition(all_dofs=("x", "y"), output=("x", "y"))
    return Calculator(
        id="A", world=world, partition=part, declaration=decl, total_dof_count=2,
        coord_map={"x": ("disk", 0), "y": ("disk", 0)},
        characteristic_length=p["side"],
    )


def _two_disk_world(p: dict) -> World:
    side = p["side"]
    _check_inside(side, p["pos1"], "disk 1")
    _check_inside(side, p["pos2"], "disk 2")
    gap = math.dist(p["pos1"], p["pos2"])
    if gap <= 2 * p["radius"]:
        raise ValueError(
            f"initial disk separation {gap} violates the contact distance "
            f"{2 * p['radius']}"
        )
    d1 = Disk(p["mass"], p["radius"], Vec2(*p["pos1"]), Vec2(*p["vel1"]), body_id="d1")
    d2 = Disk(p["mass"], p["radius"], Vec2(*p["pos2"]), Vec2(*p["vel2"]), body_id="d2")
    return World(disks=(d1, d2), box=WallBox(side))


def _build_b(full_output: bool, **params) -> Calculator:
    p = _merged("B", params)
    world = _two_disk_world(p)
    if full_output:
        decl = Declaration(
            family=FREE_MOTION_BOUNDED,
            params={"side": p["side"], "mass": p["mass"]},
            declared_dof_count=4,
            declared_constraints=_box_walls(p["side"]),
            declared_output_dofs=("x1", "y1", "x2", "y2"),
        )
        output = ("x1", "y1", "x2", "y2")
    else:
        decl = Declaration(
            family=FREE_MOTION_BOUNDED,
            params={"side": p["side"], "mass": p["mass"]},
            declared_dof_count=2,
            declared_constraints=_box_walls(p["side"]),
            declared_output_dofs=("x1", "y1"),
        )
        output = ("x1", "y1")
    part = DofPartition(all_dofs=("x1", "y1", "x2", "y2"), output=output)
    return Calculator(
        id="B_full" if full_output else "B_partial",
        world=world, partition=part, declaration=decl, total_dof_count=4,
        coord_map={"x1": ("disk", 0), "y1": ("disk", 0),
                   "x2": ("disk", 1), "y2": ("disk", 1)},
        characteristic_length=p["side"],
    )


def _spring_disk_world(p: dict) -> World:
    side = p["side"]
    _check_inside(side, p["pos"], "disk")
    disk = Disk(p["mass"], p["radius"], Vec2(*p["pos"]), Vec2(*p["vel"]), body_id="d1")
    h = side / 2
    # Two zero-rest-length springs anchored on opposite walls give an exactly
    # isotropic linear pull about the midpoint: omega^2 = (k1 + k2) / m.
    springs = (
        Spring(p["stiffness"], 0.0, Vec2(-h, 0.0), "d1"),
        Spring(p["stiffness"], 0.0, Vec2(h, 0.0), "d1"),
    )
    return World(disks=(disk,), springs=springs, box=WallBox(side))


def _build_c(params: dict) -> Calculator:
    p = _merged("C", params)
    world = _spring_disk_world(p)
    omega = math.sqrt(2 * p["stiffness"] / p["mass"])
    decl = Declaration(
        family=HARMONIC,
        params={"omega": omega, "mass": p["mass"]},
        declared_dof_count=2,
        declared_output_dofs=("x", "y"),
    )
    part = DofPartition(all_dofs=("x", "y"), output=("x", "y"))
    return Calculator(
        id="C", world=world, partition=part, declaration=decl, total_dof_count=2,
        coord_map={"x": ("disk", 0), "y": ("disk", 0)},
        characteristic_length=p["side"],
    )


def _build_d(params: dict) -> Calculator:
    c_params = {k: v for k, v in params.items() if k in DEFAULTS["C"]}
    d_params = _merged("D", {k: v for k, v in params.items() if k in DEFAULTS["D"]})
    base = _build_c(_merged("C", c_params))
    p = _merged("C", c_params)
    wall_x = d_params["partition_x"]
    half = p["side"] / 2
    if not (-half < wall_x < half):
        raise ValueError(f"partition wall {wall_x} must sit inside the box")
    hx, hy = d_params["hidden_pos"]
    if not (wall_x < hx < half):
        raise ValueError("hidden disk must start between the partition wall "
                         "and the box edge")
    observed = replace(base.world.disks[0], partition_side=-1)
    hidden = Disk(p["mass"], p["radius"], Vec2(hx, hy),
                  Vec2(*d_params["hidden_vel"]), body_id="d2", partition_side=1)
    world = replace(base.world, disks=(observed, hidden), partition_wall=wall_x)
    part = DofPartition(all_dofs=("x", "y", "x2", "y2"), output=("x", "y"))
    return Calculator(
        id="D", world=world, partition=part, declaration=base.declaration,
        total_dof_count=4,
        coord_map={"x": ("disk", 0), "y": ("disk", 0),
                   "x2": ("disk", 1), "y2": ("disk", 1)},
        characteristic_length=p["side"],
    )


def _build_rotor(with_controller: bool, **params) -> Calculator:
    p = _merged("E", params)
    for key in ("k", "a", "m_p", "r", "moment_of_inertia"):
        if p[key] <= 0:
            raise ValueError(f"rotor parameter {key} must be > 0, got {p[key]}")
    # The builder spins the rotor at exactly the rate a real particle would
    # orbit under the declared pull: m_p w^2 r = k a^2 / r^2.
    omega = math.sqrt(p["k"] * p["a"] ** 2 / (p["m_p"] * p["r"] ** 3))
    rotor = Rotor(
        moment_of_inertia=p["moment_of_inertia"],
        angle=p["angle"],
        angular_velocity=omega,
        marker_radius=p["r"],
    )
    world = World(rotors=(rotor,))
    decl = Declaration(
        family=CENTRAL_FORCE,
        params={"k": p["k"], "a": p["a"], "m_p": p["m_p"]},
        declared_dof_count=2,
        declared_output_dofs=("x", "y"),
    )
    part = DofPartition(
        all_dofs=("x", "y"), output=("x", "y"),
        input=("x", "y") if with_controller else (),
    )
    return Calculator(
        id="H" if with_controller else "E",
        world=world, partition=part, declaration=decl, total_dof_count=1,
        coord_map={"x": ("rotor", 0), "y": ("rotor", 0)},
        input_body="rotor" if with_controller else None,
        characteristic_length=2 * p["r"],
    )


def _build_f(params: dict) -> Calculator:
    base = _build_a(params)
    part = DofPartition(all_dofs=("x", "y"), output=("x", "y"), input=("x", "y"))
    return replace_calculator(base, id="F", partition=part, input_body="d1")


def _build_g(params: dict) -> Calculator:
    base = _build_b(full_output=False, **params)
    part = DofPartition(
        all_dofs=("x1", "y1", "x2", "y2"), output=("x1", "y1"), input=("x1", "y1")
    )
    return replace_calculator(base, id="G", partition=part, input_body="d1")


def _build_x(params: dict) -> Calculator:
    p = _merged("X", params)
    gear = GearDrive(speed=p["speed"], half_period=p["half_period"],
                     phase=p["phase"], track_y=p["track_y"])
    world = World(gear=gear)
    decl = Declaration(
        family=FREE_MOTION,
        params={"mass": 1.0},
        declared_dof_count=2,
        declared_output_dofs=("x", "y"),
    )
    part = DofPartition(
        all_dofs=("x", "y", "wheel_a", "wheel_b", "spring_a", "spring_b"),
        output=("x", "y"),
    )
    return Calculator(
        id="X", world=world, partition=part, declaration=decl, total_dof_count=6,
        coord_map={"x": ("gear", 0), "y": ("gear", 0),
                   "wheel_a": ("gear", 0), "wheel_b": ("gear", 0),
                   "spring_a": ("gear", 0), "spring_b": ("gear", 0)},
        characteristic_length=p["speed"] * p["half_period"],
    )


def replace_calculator(base: Calculator, **changes) -> Calculator:
    fields = {
        "id": base.id, "world": base.world, "partition": base.partition,
        "declaration": base.declaration, "total_dof_count": base.total_dof_count,
        "coord_map": base.coord_map, "input_body": base.input_body,
        "characteristic_length": base.characteristic_length,
    }
    fields.update(changes)
    return Calculator(**fields)


def declared_acceleration(
    declaration: Declaration, pos: Vec2, vel: Vec2, applied: Vec2, mass: float
) -> Vec2:
    """Acceleration the declared model predicts for an observed state.

    Wall reflections of bounded declarations are impulsive and are handled
    as declared-constraint events by the callers, not here.
    """
    fam = declaration.family
    if fam in (FREE_MOTION, FREE_MOTION_BOUNDED):
        return Vec2(applied.x / mass, applied.y / mass)
    if fam == HARMONIC:
        w2 = declaration.params["omega"] ** 2
        return Vec2(-w2 * pos.x + applied.x / mass, -w2 * pos.y + applied.y / mass)
    if fam == CENTRAL_FORCE:
        m_p = declaration.params["m_p"]
        from .dynamics import central_force

        pull = central_force(declaration.params["k"], declaration.params["a"], pos)
        return Vec2(pull.x / m_p + applied.x / m_p, pull.y / m_p + applied.y / m_p)
    raise ValueError(f"unknown family {fam!r}")
