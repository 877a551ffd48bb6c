"""Passive observer: sample output dofs, fit candidate dynamics, judge claims.

The observer sees only the output coordinates, sampled at a finite rate and
rounded to a finite quantum. From that evidence it detects impulsive events,
infers axis-aligned walls from specular bounces, fits the candidate model
families (free motion, harmonic about the origin, inverse-square pull), and
renders a verdict against the builder's declaration.

Raw second differences of quantized samples carry noise of order
quantum/period^2, which at the default sensor settings is far above the
smooth accelerations of interest. Parameter estimates therefore come from
least squares over the whole record (where quantization noise averages out),
and the accept/reject decision for a family is made in the position domain:
the family's solution is fitted to the samples window by window and the
residual is compared against a few quanta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize

from .calculators import (
    CENTRAL_FORCE,
    FREE_MOTION,
    HARMONIC,
    Calculator,
    Declaration,
    WallLine,
)
from .dynamics import step
from .vec import Vec2

PHYSICAL_AS_DECLARED = "PhysicalAsDeclared"
PHYSICAL_WITH_INFERRED = "PhysicalWithInferredConstraints"
NON_PHYSICAL = "NonPhysicalHiddenVariables"
AGREES = "Agrees"
DISAGREES = "Disagrees"

CANDIDATE_FAMILIES = (FREE_MOTION, HARMONIC, CENTRAL_FORCE)
# Model-complexity order used for tie-breaking: fewer parameters first.
FAMILY_COMPLEXITY = {FREE_MOTION: 0, HARMONIC: 1, CENTRAL_FORCE: 2}

MIN_SAMPLES = 101  # shortest record the observer accepts (100 sample periods)


class InsufficientEvidenceError(ValueError):
    """Observation too short to say anything."""


@dataclass(frozen=True)
class SensorSpec:
    sample_period: float = 0.01
    quantum: float = 1e-3
    duration: float = 60.0

    def __post_init__(self):
        if self.sample_period <= 0:
            raise ValueError("sample period must be > 0")
        if self.quantum <= 0:
            raise ValueError("sensor quantum must be > 0 (finite sensitivity)")
        if self.duration <= 0:
            raise ValueError("duration must be > 0")


@dataclass(frozen=True)
class ObserverConfig:
    # Quantization of a steady drift is patterned, not white: two-gap velocity
    # differences jitter by up to 2 quanta/period, so the factor leaves room
    # under the smallest jump worth seeing rather than hugging 3 sigma.
    event_threshold_factor: float = 1.5   # eta, in units of 3-sigma velocity noise
    event_mask_periods: int = 2           # samples masked within this many periods
    min_segment_samples: int = 5
    window_time: float = 2.0              # position-fit window length
    min_window_samples: int = 20
    fit_accept_quanta: float = 5.0        # family fits if RMS position error <= this
    param_rel_tol: float = 0.02
    wall_match_quanta: float = 3.0
    event_fit_samples: int = 8            # samples per side for event kinematics
    tiny_omega_window: float = 0.05


@dataclass
class Trajectory:
    """Quantized samples of output dofs only; the observer's whole world."""

    dof_ids: tuple[str, ...]
    times: np.ndarray
    samples: np.ndarray  # shape (n_samples, n_dofs), multiples of the quantum
    quantum: float
    sample_period: float
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if self.samples.shape != (len(self.times), len(self.dof_ids)):
            raise ValueError("sample matrix shape does not match times/dof ids")
        dts = np.diff(self.times)
        if len(dts) and not np.allclose(dts, self.sample_period, rtol=1e-9, atol=1e-12):
            raise ValueError("sample times must be uniformly spaced")

    def n_samples(self) -> int:
        return len(self.times)

    def bodies(self) -> list[tuple[str, int, int]]:
        """Pair x*/y* columns into bodies by shared suffix."""
        idx = {dof: i for i, dof in enumerate(self.dof_ids)}
        out = []
        for dof in self.dof_ids:
            if dof.startswith("x"):
                suffix = dof[1:]
                mate = "y" + suffix
                if mate in idx:
                    out.append((suffix, idx[dof], idx[mate]))
        if not out:
            raise ValueError(f"no x/y column pairs among dofs {self.dof_ids}")
        return out


@dataclass
class Event:
    time: float
    location: Vec2
    body: str          # body suffix from the trajectory column naming
    sample_index: int  # sample nearest the event
    gap_span: tuple[int, int]  # first and last forward-difference gap involved


@dataclass
class EventList:
    event_times: np.ndarray
    event_locations: np.ndarray  # (n, 2)
    events: list[Event] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.events)


@dataclass
class Derivatives:
    times: np.ndarray
    velocity: np.ndarray       # (n, d), central differences
    acceleration: np.ndarray   # (n, d), central second differences
    valid: np.ndarray          # (n,) bool, False near events/edges
    noise_floor_accel: float   # quantum / sample_period^2
    diagnostics: tuple[str, ...] = ()


@dataclass
class FitResult:
    family: str
    params: dict[str, float]
    per_segment_rms_residual: tuple[float, ...]  # acceleration units per segment
    accel_residual_norm: float
    position_rms: float
    position_rms_quanta: float
    inferred_constraints: tuple[WallLine, ...]
    uses_only_observed: bool = True
    diagnostics: tuple[str, ...] = ()

    def fits(self, accept_quanta: float) -> bool:
        return self.position_rms_quanta <= accept_quanta


@dataclass
class Verdict:
    physicality: str
    agreement: str
    best_family: str
    params: dict[str, float]
    residual: float  # decision residual: RMS position error in sensor quanta
    unexplained_events: int
    inferred_walls: tuple[WallLine, ...]
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.physicality == PHYSICAL_AS_DECLARED and self.agreement != AGREES:
            raise ValueError("a system physical as declared must agree")
        if self.physicality == NON_PHYSICAL and self.agreement != DISAGREES:
            raise ValueError("hidden-variable verdicts must disagree")


def quantize(value: float, quantum: float) -> float:
    """Round to the nearest quantum multiple, ties away from zero."""
    if quantum <= 0:
        raise ValueError("quantum must be > 0")
    return math.copysign(math.floor(abs(value) / quantum + 0.5) * quantum, value)


def _quantize_array(values: np.ndarray, quantum: float) -> np.ndarray:
    return np.copysign(np.floor(np.abs(values) / quantum + 0.5) * quantum, values)


def observe(calculator: Calculator, sensor: SensorSpec,
            sim_dt: float | None = None) -> Trajectory:
    """Watch a calculator passively: no forces, output dofs only."""
    traj, _forces = simulate_sampled(calculator, sensor, sim_dt=sim_dt, policy=None)
    return traj


def simulate_sampled(calculator: Calculator, sensor: SensorSpec,
                     sim_dt: float | None = None, policy=None
                     ) -> tuple[Trajectory, np.ndarray]:
    """Run a calculator and sample its output dofs at the sensor rate.

    ``policy(index, time, quantized_row)`` may return a Vec2 force applied to
    the input body, held constant until the next sample (zero-order hold).
    Returns the trajectory and the per-interval force log, aligned so that
    ``forces[i]`` acted during ``(times[i], times[i+1]]``.
    """
    ts = sensor.sample_period
    n_samples = int(round(sensor.duration / ts)) + 1
    if n_samples < MIN_SAMPLES:
        raise InsufficientEvidenceError(
            f"duration {sensor.duration} gives {n_samples} samples; "
            f"at least {MIN_SAMPLES} required"
        )
    if sim_dt is None:
        steps_per_sample = 10
    else:
        steps_per_sample = max(1, int(round(ts / sim_dt)))
    dt = ts / steps_per_sample

    warnings = []
    if sensor.quantum >= calculator.characteristic_length:
        warnings.append(
            f"sensor quantum {sensor.quantum} is at or above the system "
            f"length scale {calculator.characteristic_length}; low evidence"
        )
    elif sensor.quantum >= 0.01 * calculator.characteristic_length:
        warnings.append(
            f"coarse sensor: quantum {sensor.quantum} is within 1% of the "
            f"system length scale {calculator.characteristic_length}"
        )

    out_dofs = calculator.partition.output
    if not out_dofs:
        raise ValueError(f"calculator {calculator.id} has no output dofs")
    q = sensor.quantum
    world = calculator.world
    rows = np.empty((n_samples, len(out_dofs)))
    forces = np.zeros((n_samples, 2))
    row = [quantize(v, q) for v in calculator.output_values(world)]
    rows[0] = row
    force = policy(0, 0.0, tuple(row)) if policy is not None else None
    if force is not None:
        forces[0] = (force.x, force.y)
    for s in range(1, n_samples):
        applied = calculator.input_forces(force) if force is not None else None
        for _ in range(steps_per_sample):
            world = step(world, dt, applied)
        row = [quantize(v, q) for v in calculator.output_values(world)]
        rows[s] = row
        if policy is not None:
            force = policy(s, world.time, tuple(row))
            if force is not None and s < n_samples - 1:
                forces[s] = (force.x, force.y)

    times = np.arange(n_samples) * ts
    traj = Trajectory(
        dof_ids=tuple(out_dofs), times=times, samples=rows,
        quantum=q, sample_period=ts, warnings=tuple(warnings),
    )
    return traj, forces


def detect_events(traj: Trajectory, threshold_factor: float = 1.5) -> EventList:
    """Flag sample gaps where the gap-to-gap velocity change is anomalous."""
    if threshold_factor <= 1:
        raise ValueError("threshold factor must be > 1")
    ts = traj.sample_period
    sigma_v = traj.quantum * math.sqrt(2.0) / ts
    threshold = threshold_factor * 3.0 * sigma_v

    gap_v = np.diff(traj.samples, axis=0) / ts  # velocity per gap
    # Compare velocities two gaps apart so a jump inside a gap shows up whole
    # instead of being split below threshold across two differences.
    dv2 = gap_v[2:] - gap_v[:-2]  # dv2[g] spans gaps g and g+1
    events: list[Event] = []
    for body, xc, yc in traj.bodies():
        flags = (np.abs(dv2[:, xc]) > threshold) | (np.abs(dv2[:, yc]) > threshold)
        k = 0
        n = len(flags)
        while k < n:
            if not flags[k]:
                k += 1
                continue
            k1 = k
            while k1 + 1 < n and flags[k1 + 1]:
                k1 += 1
            # dv2[g] = V[g+2] - V[g] is centered at sample g + 1.5.
            s_float = (k + k1) / 2 + 1.5
            t_event = float(traj.times[0] + s_float * ts)
            nearest = int(round(s_float))
            nearest = min(max(nearest, 0), traj.n_samples() - 1)
            loc = traj.samples[nearest, [xc, yc]]
            events.append(Event(
                time=t_event, location=Vec2(float(loc[0]), float(loc[1])),
                body=body, sample_index=nearest, gap_span=(k + 1, k1 + 1),
            ))
            k = k1 + 1
    events.sort(key=lambda e: (e.time, e.body))
    if events:
        times = np.array([e.time for e in events])
        locs = np.array([[e.location.x, e.location.y] for e in events])
    else:
        times = np.empty(0)
        locs = np.empty((0, 2))
    return EventList(event_times=times, event_locations=locs, events=events)


def estimate_derivatives(traj: Trajectory, events: EventList,
                         config: ObserverConfig | None = None) -> Derivatives:
    """Central-difference velocity/acceleration with event neighborhoods masked."""
    cfg = config or ObserverConfig()
    ts = traj.sample_period
    x = traj.samples
    n = len(traj.times)
    vel = np.full_like(x, np.nan)
    acc = np.full_like(x, np.nan)
    vel[1:-1] = (x[2:] - x[:-2]) / (2 * ts)
    acc[1:-1] = (x[2:] - 2 * x[1:-1] + x[:-2]) / (ts * ts)
    valid = np.ones(n, dtype=bool)
    valid[0] = valid[-1] = False
    for e in events.events:
        mask = np.abs(traj.times - e.time) <= cfg.event_mask_periods * ts + 1e-12
        valid &= ~mask

    diagnostics = []
    for start, stop in _valid_runs(valid):
        if stop - start < cfg.min_segment_samples:
            valid[start:stop] = False
            diagnostics.append(
                f"segment [{start}, {stop}) has fewer than "
                f"{cfg.min_segment_samples} samples; skipped"
            )
    return Derivatives(
        times=traj.times, velocity=vel, acceleration=acc, valid=valid,
        noise_floor_accel=traj.quantum / (ts * ts),
        diagnostics=tuple(diagnostics),
    )


def _valid_runs(valid: np.ndarray) -> list[tuple[int, int]]:
    runs = []
    n = len(valid)
    i = 0
    while i < n:
        if not valid[i]:
            i += 1
            continue
        j = i
        while j < n and valid[j]:
            j += 1
        runs.append((i, j))
        i = j
    return runs


# ---------------------------------------------------------------------------
# Event kinematics and wall inference


@dataclass
class EventGroup:
    """Events on one body close enough to share before/after kinematics.

    Two kinks a few samples apart (a corner hit, or a wall graze next to a
    contact) would contaminate each other's line fits; grouped, the incoming
    fit sits strictly before the first kink and the outgoing fit strictly
    after the last.
    """

    indices: tuple[int, ...]
    body: str
    time: float        # midpoint of the group
    span: float        # t_last - t_first
    lo_gap: int
    hi_gap: int


@dataclass
class EventKinematics:
    group: EventGroup
    pre_pos: np.ndarray   # (2,) position extrapolated to the group midpoint
    post_pos: np.ndarray
    pre_vel: np.ndarray
    post_vel: np.ndarray
    vel_tol: float


def _line_fit(times: np.ndarray, values: np.ndarray, t_ref: float
              ) -> tuple[float, float]:
    """Least-squares line value and slope evaluated at t_ref."""
    t = times - t_ref
    a = np.vstack([np.ones_like(t), t]).T
    coef, *_ = np.linalg.lstsq(a, values, rcond=None)
    return float(coef[0]), float(coef[1])


def _group_events(events: EventList, traj: Trajectory,
                  cfg: ObserverConfig) -> list[EventGroup]:
    merge_gap = cfg.event_fit_samples + 2 * cfg.event_mask_periods + 2
    by_body: dict[str, list[int]] = {}
    for i, e in enumerate(events.events):
        by_body.setdefault(e.body, []).append(i)
    groups = []
    for body, idx in by_body.items():
        idx.sort(key=lambda i: events.events[i].time)
        current = [idx[0]]
        for i in idx[1:]:
            if (events.events[i].gap_span[0]
                    - events.events[current[-1]].gap_span[1]) <= merge_gap:
                current.append(i)
            else:
                groups.append(_make_group(current, events, body))
                current = [i]
        groups.append(_make_group(current, events, body))
    groups.sort(key=lambda g: (g.time, g.body))
    return groups


def _make_group(indices: list[int], events: EventList, body: str) -> EventGroup:
    members = [events.events[i] for i in indices]
    t_first = min(e.time for e in members)
    t_last = max(e.time for e in members)
    return EventGroup(
        indices=tuple(indices), body=body,
        time=(t_first + t_last) / 2, span=t_last - t_first,
        lo_gap=min(e.gap_span[0] for e in members),
        hi_gap=max(e.gap_span[1] for e in members),
    )


def _group_kinematics(traj: Trajectory, group: EventGroup,
                      cfg: ObserverConfig) -> EventKinematics | None:
    w = cfg.event_fit_samples
    margin = cfg.event_mask_periods
    body_cols = {b: (xc, yc) for b, xc, yc in traj.bodies()}
    xc, yc = body_cols[group.body]
    pre_end = group.lo_gap - margin + 1         # exclusive
    post_start = group.hi_gap + margin + 1
    pre_start = pre_end - w
    post_end = post_start + w
    if pre_start < 0 or post_end > traj.n_samples():
        return None
    t = traj.times
    pre = slice(pre_start, pre_end)
    post = slice(post_start, post_end)
    px, pvx = _line_fit(t[pre], traj.samples[pre, xc], group.time)
    py, pvy = _line_fit(t[pre], traj.samples[pre, yc], group.time)
    qx, qvx = _line_fit(t[post], traj.samples[post, xc], group.time)
    qy, qvy = _line_fit(t[post], traj.samples[post, yc], group.time)
    # Slope noise of a quantized line fit over w points.
    sigma_e = traj.quantum / math.sqrt(12.0)
    denom = traj.sample_period * math.sqrt(w * (w * w - 1) / 12.0)
    vel_tol = 8.0 * sigma_e / denom + 1e-12
    return EventKinematics(
        group=group,
        pre_pos=np.array([px, py]), post_pos=np.array([qx, qy]),
        pre_vel=np.array([pvx, pvy]), post_vel=np.array([qvx, qvy]),
        vel_tol=vel_tol,
    )


@dataclass
class WallAnalysis:
    walls: tuple[WallLine, ...]
    explained: set[int]          # indices into events.events explained by walls
    groups: list[EventGroup]
    kinematics: dict[int, EventKinematics]  # keyed by group index
    resolved_events: set[int]    # event indices whose group has kinematics
    residual_events: list[Event]


def _specular_wall_candidates(kin: EventKinematics, ts: float
                              ) -> list[tuple[str, float]]:
    """Axis-aligned walls the event group could be specular bounces off.

    A corner hit (or two wall hits merged into one group) mirrors both
    components, so the off-axis component may be either preserved (plain
    wall) or mirrored too; such a group yields one candidate per axis.
    """
    out: list[tuple[str, float]] = []
    for axis, flip, keep in (("x", 0, 1), ("y", 1, 0)):
        v_in, v_out = kin.pre_vel[flip], kin.post_vel[flip]
        if abs(v_in) < 5 * kin.vel_tol:
            continue  # not actually moving into a wall on this axis
        if abs(v_out + v_in) > kin.vel_tol * 2:
            continue  # normal component not mirrored
        keep_preserved = abs(kin.post_vel[keep] - kin.pre_vel[keep]) \
            <= kin.vel_tol * 2
        keep_mirrored = abs(kin.post_vel[keep] + kin.pre_vel[keep]) \
            <= kin.vel_tol * 2
        if not (keep_preserved or keep_mirrored):
            continue  # energy went somewhere else: not a wall
        # Intersect the incoming and outgoing position lines on the flip axis.
        dv = v_in - v_out
        if dv == 0:
            continue
        t_cross = (kin.post_pos[flip] - kin.pre_pos[flip]) / dv
        if abs(t_cross) > 3 * ts + kin.group.span / 2:
            continue
        wall_pos = kin.pre_pos[flip] + v_in * t_cross
        out.append((axis, float(wall_pos)))
    return out


def _analyze_walls(traj: Trajectory, events: EventList,
                   cfg: ObserverConfig) -> WallAnalysis:
    groups = _group_events(events, traj, cfg) if len(events) else []
    kinematics: dict[int, EventKinematics] = {}
    resolved: set[int] = set()
    candidates: list[tuple[int, str, float]] = []
    for g, group in enumerate(groups):
        kin = _group_kinematics(traj, group, cfg)
        if kin is None:
            continue
        kinematics[g] = kin
        resolved.update(group.indices)
        for axis, pos in _specular_wall_candidates(kin, traj.sample_period):
            candidates.append((g, axis, pos))

    tol = cfg.wall_match_quanta * traj.quantum
    walls: list[WallLine] = []
    accepted_axes: dict[int, set[str]] = {}
    for axis in ("x", "y"):
        axis_cands = sorted(
            [(pos, g) for g, ax, pos in candidates if ax == axis]
        )
        cluster: list[tuple[float, int]] = []
        for pos, g in axis_cands + [(math.inf, -1)]:
            if cluster and pos - cluster[0][0] > tol:
                wall = _accept_wall(traj, axis, cluster, tol)
                if wall is not None:
                    walls.append(wall)
                    for _, g2 in cluster:
                        accepted_axes.setdefault(g2, set()).add(axis)
                cluster = []
            if g >= 0:
                cluster.append((pos, g))

    # A group counts as wall-explained only when every component that
    # actually changed is covered by an accepted wall on that axis.
    explained: set[int] = set()
    for g, kin in kinematics.items():
        changed = {
            axis for axis, comp in (("x", 0), ("y", 1))
            if abs(kin.post_vel[comp] - kin.pre_vel[comp]) > 2 * kin.vel_tol
        }
        if changed <= accepted_axes.get(g, set()):
            explained.update(groups[g].indices)

    residual = [e for i, e in enumerate(events.events) if i not in explained]
    return WallAnalysis(
        walls=tuple(sorted(walls, key=lambda w: (w.axis, w.position))),
        explained=explained, groups=groups, kinematics=kinematics,
        resolved_events=resolved, residual_events=residual,
    )


def _accept_wall(traj: Trajectory, axis: str,
                 cluster: list[tuple[float, int]], tol: float) -> WallLine | None:
    pos = float(np.median([p for p, _ in cluster]))
    cols = [xc if axis == "x" else yc for _, xc, yc in traj.bodies()]
    values = traj.samples[:, cols]
    below = np.all(values <= pos + tol)
    above = np.all(values >= pos - tol)
    if not (below or above):
        return None  # trajectory crosses the line: not a wall
    return WallLine(axis, pos)


def infer_constraints(traj: Trajectory, events: EventList,
                      config: ObserverConfig | None = None) -> tuple[WallLine, ...]:
    """Axis-aligned wall lines consistent with the observed bounces."""
    cfg = config or ObserverConfig()
    return _analyze_walls(traj, events, cfg).walls


def _pair_contacts(analysis: WallAnalysis, events: EventList,
                   ts: float) -> set[int]:
    """Explain residual event pairs as elastic contact between observed bodies.

    Two near-simultaneous event groups on different bodies whose velocity
    changes are antiparallel and aligned with the line of centers are what a
    contact between two visible bodies looks like from outside.
    """
    explained: set[int] = set()
    used: set[int] = set()
    gids = [
        g for g in sorted(analysis.kinematics)
        if not set(analysis.groups[g].indices) <= analysis.explained
    ]
    for ii, i in enumerate(gids):
        for j in gids[ii + 1:]:
            if i in used or j in used:
                continue
            gi, gj = analysis.groups[i], analysis.groups[j]
            if gi.body == gj.body:
                continue
            if abs(gi.time - gj.time) > 2 * ts + (gi.span + gj.span) / 2:
                continue
            ki, kj = analysis.kinematics[i], analysis.kinematics[j]
            dvi = ki.post_vel - ki.pre_vel
            dvj = kj.post_vel - kj.pre_vel
            ni, nj = np.linalg.norm(dvi), np.linalg.norm(dvj)
            if ni < 5 * ki.vel_tol or nj < 5 * kj.vel_tol:
                continue
            if float(dvi @ dvj) / (ni * nj) > -0.95:
                continue  # kicks not antiparallel
            center_line = (ki.pre_pos + ki.post_pos) / 2 \
                - (kj.pre_pos + kj.post_pos) / 2
            nc = np.linalg.norm(center_line)
            if nc == 0:
                continue
            if float(dvi @ center_line) / (ni * nc) < 0.95:
                continue  # kick not along the line of centers, pushing apart
            used.update((i, j))
            explained.update(gi.indices)
            explained.update(gj.indices)
    return explained


# ---------------------------------------------------------------------------
# Family fitting


def _fit_harmonic_omega(traj: Trajectory, deriv: Derivatives) -> float:
    v = deriv.valid
    x = traj.samples[v]
    a = deriv.acceleration[v]
    denom = float(np.sum(x * x))
    if denom == 0:
        return 0.0
    w2 = -float(np.sum(a * x)) / denom
    return math.sqrt(w2) if w2 > 0 else 0.0


def _fit_central(traj: Trajectory, deriv: Derivatives
                 ) -> tuple[float, np.ndarray] | None:
    """Coefficient and center of an inverse-square pull, or None."""
    v = deriv.valid
    if not v.any():
        return None
    bodies = traj.bodies()
    if len(bodies) != 1:
        return None  # single representative point only
    _, xc, yc = bodies[0]
    p = traj.samples[v][:, [xc, yc]]
    a = deriv.acceleration[v][:, [xc, yc]]
    floor = 10 * traj.quantum

    def objective(center: np.ndarray) -> float:
        rel = p - center
        r = np.linalg.norm(rel, axis=1)
        if np.any(r < floor):
            return 1e18
        u = rel / (r ** 3)[:, None]
        uu = float(np.sum(u * u))
        if uu == 0:
            return 1e18
        c = max(-float(np.sum(a * u)) / uu, 0.0)
        return float(np.sum((a + c * u) ** 2))

    x0 = p.mean(axis=0)
    res = minimize(objective, x0, method="Nelder-Mead",
                   options={"xatol": 1e-7, "fatol": 1e-12, "maxiter": 400})
    center = res.x
    rel = p - center
    r = np.linalg.norm(rel, axis=1)
    if np.any(r < floor):
        return None
    u = rel / (r ** 3)[:, None]
    c = max(-float(np.sum(a * u)) / float(np.sum(u * u)), 0.0)
    if c <= 0:
        return None
    return c, center


def _rk4_central(p0: np.ndarray, v0: np.ndarray, c: float, center: np.ndarray,
                 n_steps: int, dt: float) -> np.ndarray:
    """Integrate a = -c (p - center)/r^3 and return positions per step."""
    out = np.empty((n_steps + 1, 2))
    px, py = float(p0[0]), float(p0[1])
    vx, vy = float(v0[0]), float(v0[1])
    cx, cy = float(center[0]), float(center[1])
    out[0, 0] = px
    out[0, 1] = py

    def accel(x, y):
        rx = x - cx
        ry = y - cy
        r2 = rx * rx + ry * ry
        r = math.sqrt(r2)
        if r < 1e-9:
            raise ZeroDivisionError("central-force singularity during shooting")
        coeff = -c / (r2 * r)
        return coeff * rx, coeff * ry

    h = dt
    for i in range(n_steps):
        a1x, a1y = accel(px, py)
        k2px, k2py = vx + 0.5 * h * a1x, vy + 0.5 * h * a1y
        a2x, a2y = accel(px + 0.5 * h * vx, py + 0.5 * h * vy)
        k3px, k3py = vx + 0.5 * h * a2x, vy + 0.5 * h * a2y
        a3x, a3y = accel(px + 0.5 * h * k2px, py + 0.5 * h * k2py)
        k4px, k4py = vx + h * a3x, vy + h * a3y
        a4x, a4y = accel(px + h * k3px, py + h * k3py)
        px += h / 6 * (vx + 2 * k2px + 2 * k3px + k4px)
        py += h / 6 * (vy + 2 * k2py + 2 * k3py + k4py)
        vx += h / 6 * (a1x + 2 * a2x + 2 * a3x + a4x)
        vy += h / 6 * (a1y + 2 * a2y + 2 * a3y + a4y)
        out[i + 1, 0] = px
        out[i + 1, 1] = py
    return out


def _window_residual_linear(t: np.ndarray, values: np.ndarray) -> float:
    a = np.vstack([np.ones_like(t), t]).T
    coef, *_ = np.linalg.lstsq(a, values, rcond=None)
    return float(np.sum((values - a @ coef) ** 2))


def _window_residual_harmonic(t: np.ndarray, values: np.ndarray,
                              omega: float) -> float:
    a = np.vstack([np.cos(omega * t), np.sin(omega * t)]).T
    coef, *_ = np.linalg.lstsq(a, values, rcond=None)
    return float(np.sum((values - a @ coef) ** 2))


def _window_residual_central(t: np.ndarray, pos: np.ndarray, c: float,
                             center: np.ndarray, ts: float) -> float:
    """Shooting fit: optimize initial state, integrate, compare positions."""
    n = len(t)
    head = min(15, max(5, n // 3))
    ht = t[:head]
    p0 = np.empty(2)
    v0 = np.empty(2)
    for k in range(2):
        coef = np.polyfit(ht, pos[:head, k], 2)
        p0[k] = np.polyval(coef, 0.0)
        v0[k] = np.polyval(np.polyder(coef), 0.0)

    def residual(state):
        try:
            path = _rk4_central(state[:2], state[2:], c, center, n - 1, ts)
        except ZeroDivisionError:
            return np.full(2 * n, 1e6)
        return (path - pos).ravel()

    try:
        sol = least_squares(residual, np.concatenate([p0, v0]),
                            method="lm", max_nfev=60)
        return float(np.sum(sol.fun ** 2))
    except Exception:
        return float("inf")


def _windows(runs: list[tuple[int, int]], win: int, min_len: int
             ) -> list[tuple[int, int]]:
    out = []
    for start, stop in runs:
        i = start
        while stop - i >= min_len:
            j = min(i + win, stop)
            if j - i < min_len:
                break
            out.append((i, j))
            i = j
    return out


def fit(traj: Trajectory, events: EventList, family: str,
        config: ObserverConfig | None = None) -> FitResult:
    """Fit one candidate family to the observed record.

    Parameters come from whole-record least squares on the differentiated
    data; the accept/reject residual comes from refitting the family's
    solution to the raw positions window by window.
    """
    cfg = config or ObserverConfig()
    if family not in CANDIDATE_FAMILIES:
        raise ValueError(f"unknown candidate family {family!r}")
    deriv = estimate_derivatives(traj, events, cfg)
    walls = infer_constraints(traj, events, cfg)
    ts = traj.sample_period
    diagnostics = list(deriv.diagnostics)

    params: dict[str, float] = {}
    central: tuple[float, np.ndarray] | None = None
    if family == HARMONIC:
        params["omega"] = _fit_harmonic_omega(traj, deriv)
    elif family == CENTRAL_FORCE:
        central = _fit_central(traj, deriv)
        if central is None:
            diagnostics.append("central-force center search did not converge")
            return FitResult(
                family=family, params={},
                per_segment_rms_residual=(),
                accel_residual_norm=float("inf"),
                position_rms=float("inf"), position_rms_quanta=float("inf"),
                inferred_constraints=walls, diagnostics=tuple(diagnostics),
            )
        params = {"coefficient": central[0],
                  "center_x": float(central[1][0]),
                  "center_y": float(central[1][1])}

    # Position-domain evaluation over fixed-length windows.
    runs = _valid_runs(deriv.valid)
    win = max(cfg.min_window_samples, int(round(cfg.window_time / ts)))
    windows = _windows(runs, win, cfg.min_window_samples)
    sq_sum = 0.0
    n_pts = 0
    total_pts = sum(2 * (j - i) for i, j in windows) * len(traj.bodies())
    # Once the accumulated error alone guarantees rejection, stop integrating.
    bail = (3 * cfg.fit_accept_quanta * traj.quantum) ** 2 * max(total_pts, 1)
    omega = params.get("omega", 0.0)
    for i, j in windows:
        t = traj.times[i:j] - traj.times[i]
        for _, xc, yc in traj.bodies():
            if family == FREE_MOTION:
                sq_sum += _window_residual_linear(t, traj.samples[i:j, xc])
                sq_sum += _window_residual_linear(t, traj.samples[i:j, yc])
            elif family == HARMONIC:
                if omega * (t[-1] - t[0]) < cfg.tiny_omega_window:
                    sq_sum += _window_residual_linear(t, traj.samples[i:j, xc])
                    sq_sum += _window_residual_linear(t, traj.samples[i:j, yc])
                else:
                    # Basis phased at absolute time: origin-centered solutions.
                    ta = traj.times[i:j]
                    sq_sum += _window_residual_harmonic(ta, traj.samples[i:j, xc], omega)
                    sq_sum += _window_residual_harmonic(ta, traj.samples[i:j, yc], omega)
            else:
                pos = traj.samples[i:j][:, [xc, yc]]
                sq_sum += _window_residual_central(t, pos, central[0], central[1], ts)
            n_pts += 2 * (j - i)
        if sq_sum > bail:
            n_pts = total_pts  # rejection is already certain; report the bound
            break
    if n_pts == 0:
        position_rms = float("inf")
    else:
        position_rms = math.sqrt(sq_sum / n_pts)
    position_quanta = position_rms / traj.quantum

    accel_segments, accel_norm = _accel_residuals(traj, deriv, family, params)
    return FitResult(
        family=family, params=params,
        per_segment_rms_residual=tuple(accel_segments),
        accel_residual_norm=accel_norm,
        position_rms=position_rms, position_rms_quanta=position_quanta,
        inferred_constraints=walls, diagnostics=tuple(diagnostics),
    )


def _accel_residuals(traj: Trajectory, deriv: Derivatives, family: str,
                     params: dict[str, float]) -> tuple[list[float], float]:
    """Acceleration-domain residuals, normalized against the noise floor."""
    runs = _valid_runs(deriv.valid)
    segments: list[float] = []
    res_sq = 0.0
    meas_sq = 0.0
    count = 0
    for start, stop in runs:
        a = deriv.acceleration[start:stop]
        p = traj.samples[start:stop]
        if family == FREE_MOTION:
            model = np.zeros_like(a)
        elif family == HARMONIC:
            model = -(params.get("omega", 0.0) ** 2) * p
        else:
            if "coefficient" not in params:
                return [], float("inf")
            center = np.array([params["center_x"], params["center_y"]])
            bodies = traj.bodies()
            model = np.zeros_like(a)
            for _, xc, yc in bodies:
                rel = p[:, [xc, yc]] - center
                r = np.linalg.norm(rel, axis=1)
                r = np.maximum(r, 1e-9)
                model[:, [xc, yc]] = -params["coefficient"] * rel / (r ** 3)[:, None]
        resid = a - model
        seg_sq = float(np.sum(resid ** 2))
        segments.append(math.sqrt(seg_sq / resid.size) if resid.size else 0.0)
        res_sq += seg_sq
        meas_sq += float(np.sum(a ** 2))
        count += a.size
    if count == 0:
        return segments, float("inf")
    rms_res = math.sqrt(res_sq / count)
    rms_meas = math.sqrt(meas_sq / count)
    return segments, rms_res / max(rms_meas, deriv.noise_floor_accel)


# ---------------------------------------------------------------------------
# Classification


def classify(traj: Trajectory, declaration: Declaration,
             config: ObserverConfig | None = None) -> Verdict:
    """Judge a record against a declaration.

    The record is physical if some candidate family reproduces it and every
    impulsive event is explained by an inferred wall or by contact between
    observed bodies. The observer agrees when the declared family itself is
    among the consistent ones, with matching parameters and constraints;
    equally consistent alternatives do not spoil the agreement, since the
    observer is looking for any equation set that admits the curve.
    """
    cfg = config or ObserverConfig()
    if traj.n_samples() < MIN_SAMPLES:
        raise InsufficientEvidenceError(
            f"insufficient evidence: {traj.n_samples()} samples "
            f"(need {MIN_SAMPLES})"
        )
    events = detect_events(traj, cfg.event_threshold_factor)
    analysis = _analyze_walls(traj, events, cfg)
    contact_explained = _pair_contacts(analysis, events, traj.sample_period)
    explained = analysis.explained | contact_explained
    # Events so close to the record's edge that no before/after kinematics
    # exist are unresolvable, not evidence of hidden variables: drop them
    # from the count but surface them in the diagnostics.
    edge_margin = (cfg.event_fit_samples + cfg.event_mask_periods + 2) \
        * traj.sample_period
    edge_events = [
        i for i, e in enumerate(events.events)
        if i not in analysis.resolved_events
        and (e.time < traj.times[0] + edge_margin
             or e.time > traj.times[-1] - edge_margin)
    ]
    unexplained = len(events) - len(explained) - len(edge_events)

    fits = {fam: fit(traj, events, fam, cfg) for fam in CANDIDATE_FAMILIES}
    fitting = [fam for fam in CANDIDATE_FAMILIES
               if fits[fam].fits(cfg.fit_accept_quanta)]

    diagnostics: dict = {
        "n_samples": traj.n_samples(),
        "n_events": len(events),
        "n_unexplained_events": unexplained,
        "n_edge_events": len(edge_events),
        "warnings": list(traj.warnings),
        "family_position_residual_quanta": {
            fam: fits[fam].position_rms_quanta for fam in CANDIDATE_FAMILIES
        },
        "family_accel_residual_norm": {
            fam: fits[fam].accel_residual_norm for fam in CANDIDATE_FAMILIES
        },
        "fitting_families": list(fitting),
    }

    walls = analysis.walls
    if not fitting or unexplained > 0:
        best = min(CANDIDATE_FAMILIES,
                   key=lambda f: (fits[f].position_rms_quanta,
                                  FAMILY_COMPLEXITY[f]))
        return Verdict(
            physicality=NON_PHYSICAL, agreement=DISAGREES,
            best_family=best, params=fits[best].params,
            residual=fits[best].position_rms_quanta,
            unexplained_events=unexplained, inferred_walls=walls,
            diagnostics=diagnostics,
        )

    declared_dyn = declaration.dynamics_family
    agrees = (
        declared_dyn in fitting
        and _params_match(declaration, fits[declared_dyn], traj, cfg)
        and _constraints_match(declaration, walls, traj, cfg)
    )
    if agrees:
        chosen = fits[declared_dyn]
        return Verdict(
            physicality=PHYSICAL_AS_DECLARED, agreement=AGREES,
            best_family=declared_dyn, params=chosen.params,
            residual=chosen.position_rms_quanta,
            unexplained_events=0, inferred_walls=walls,
            diagnostics=diagnostics,
        )
    best = min(fitting, key=lambda f: FAMILY_COMPLEXITY[f])
    return Verdict(
        physicality=PHYSICAL_WITH_INFERRED, agreement=DISAGREES,
        best_family=best, params=fits[best].params,
        residual=fits[best].position_rms_quanta,
        unexplained_events=0, inferred_walls=walls,
        diagnostics=diagnostics,
    )


def _params_match(declaration: Declaration, fitted: FitResult,
                  traj: Trajectory, cfg: ObserverConfig) -> bool:
    tol = cfg.param_rel_tol
    fam = declaration.dynamics_family
    if fam == FREE_MOTION:
        return True
    if fam == HARMONIC:
        declared = declaration.params["omega"]
        return abs(fitted.params.get("omega", 0.0) - declared) <= tol * declared
    if fam == CENTRAL_FORCE:
        declared_c = (declaration.params["k"] * declaration.params["a"] ** 2
                      / declaration.params["m_p"])
        c = fitted.params.get("coefficient", 0.0)
        if abs(c - declared_c) > tol * declared_c:
            return False
        # Declared center is the coordinate origin by convention.
        center = math.hypot(fitted.params.get("center_x", 0.0),
                            fitted.params.get("center_y", 0.0))
        bodies = traj.bodies()
        _, xc, yc = bodies[0]
        mean_r = float(np.mean(np.linalg.norm(traj.samples[:, [xc, yc]], axis=1)))
        return center <= max(cfg.wall_match_quanta * traj.quantum, tol * mean_r)
    return False


def _constraints_match(declaration: Declaration, inferred: tuple[WallLine, ...],
                       traj: Trajectory, cfg: ObserverConfig) -> bool:
    tol = cfg.wall_match_quanta * traj.quantum
    declared = declaration.declared_constraints
    # Every inferred wall must be a declared one.
    for wall in inferred:
        if not any(w.axis == wall.axis and abs(w.position - wall.position) <= tol
                   for w in declared):
            return False
    # No sample may sit beyond a declared wall: the trajectory's bounding box
    # must respect every declared constraint even if that wall was never hit.
    if declared:
        cols = {b: (xc, yc) for b, xc, yc in traj.bodies()}
        mid_x = float(np.mean([traj.samples[:, xc].mean() for xc, _ in cols.values()]))
        mid_y = float(np.mean([traj.samples[:, yc].mean() for _, yc in cols.values()]))
        for w in declared:
            axis_cols = [xc if w.axis == "x" else yc for xc, yc in cols.values()]
            values = traj.samples[:, axis_cols]
            mid = mid_x if w.axis == "x" else mid_y
            if mid <= w.position:
                if np.any(values > w.position + tol):
                    return False
            else:
                if np.any(values < w.position - tol):
                    return False
    return True
