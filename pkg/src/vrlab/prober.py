"""Active observer: drive the input dofs and try to break the declaration.

Three probe kinds. A force schedule applies known piecewise-constant forces
and checks the measured response against the declared model (the Newton
check). Stop-and-release operates a feedback controller that brings the
marker to rest, lets go, and compares the post-release acceleration with
what the declared force field predicts at that point. A coupling sweep
drives the body through a waypoint lattice to maximize the chance of
bumping into anything hidden.

All probe decisions are functions of the recorded quantized output samples
and the prober's own applied forces; nothing reads hidden state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .calculators import (
    CENTRAL_FORCE,
    FREE_MOTION,
    FREE_MOTION_BOUNDED,
    HARMONIC,
    Calculator,
    Declaration,
)
from .observer import (
    DISAGREES,
    NON_PHYSICAL,
    PHYSICAL_WITH_INFERRED,
    ObserverConfig,
    SensorSpec,
    Trajectory,
    Verdict,
    classify,
    detect_events,
    observe,
    simulate_sampled,
)
from .vec import Vec2


class ProbeError(ValueError):
    """Raised when a probe cannot run at all (typically: no controller)."""


@dataclass(frozen=True)
class ProbePlan:
    kind: str  # "force_schedule" | "stop_and_release" | "coupling_sweep"
    sensor: SensorSpec
    schedule: tuple[tuple[float, float, tuple[float, float]], ...] = ()
    controller_gains: tuple[float, float] = (50.0, 20.0)
    sweep_grid: tuple[int, int] = (8, 8)
    sweep_extent: float | None = None  # half-width of the lattice
    stop_budget: float = 50.0
    rest_speed_tol: float | None = None  # default 10*quantum/sample_period
    force_limit: float = 10.0

    def __post_init__(self):
        if self.kind not in ("force_schedule", "stop_and_release", "coupling_sweep"):
            raise ValueError(f"unknown probe kind {self.kind!r}")
        kp, kd = self.controller_gains
        if kp <= 0 or kd <= 0:
            raise ValueError("controller gains must be > 0")
        last_end = -math.inf
        for start, end, _force in self.schedule:
            if not (0 <= start < end):
                raise ValueError(f"bad schedule window ({start}, {end})")
            if start < last_end:
                raise ValueError("schedule windows must be ordered, non-overlapping")
            last_end = end

    def v_tol(self) -> float:
        if self.rest_speed_tol is not None:
            return self.rest_speed_tol
        return 10.0 * self.sensor.quantum / self.sensor.sample_period


@dataclass
class ProbeRecord:
    trajectory: Trajectory
    applied: np.ndarray  # (n_samples, 2); applied[i] acted over (t[i], t[i+1]]
    plan: ProbePlan
    meta: dict = field(default_factory=dict)


@dataclass
class ProbeReport:
    probe: str
    passed: bool | None  # None means inconclusive
    max_residual: float
    predicted: float | None = None
    measured: float | None = None
    events: list = field(default_factory=list)
    details: dict = field(default_factory=dict)


def default_force_schedule(sensor: SensorSpec | None = None) -> ProbePlan:
    sensor = sensor or SensorSpec(duration=12.0)
    return ProbePlan(
        kind="force_schedule",
        sensor=sensor,
        schedule=((0.5, 2.5, (0.5, 0.0)),
                  (4.0, 6.0, (0.0, -0.4)),
                  (8.0, 9.5, (-0.3, 0.3))),
    )


def run_probe(calculator: Calculator, plan: ProbePlan) -> ProbeRecord:
    """Execute a probe plan against a fresh copy of the calculator."""
    if not calculator.partition.input:
        raise ProbeError(f"calculator {calculator.id} has no controller")
    calc = calculator.copy()
    if plan.kind == "force_schedule":
        policy = _SchedulePolicy(plan)
    elif plan.kind == "stop_and_release":
        policy = _StopPolicy(plan)
    else:
        policy = _SweepPolicy(plan, calc)
    traj, forces = simulate_sampled(calc, plan.sensor, policy=policy)
    meta = policy.meta()
    return ProbeRecord(trajectory=traj, applied=forces, plan=plan, meta=meta)


class _SchedulePolicy:
    def __init__(self, plan: ProbePlan):
        self.plan = plan

    def __call__(self, index: int, t: float, row: tuple[float, ...]) -> Vec2 | None:
        for start, end, force in self.plan.schedule:
            if start <= t < end:
                return Vec2(*force)
        return Vec2(0.0, 0.0)

    def meta(self) -> dict:
        return {}


class _VelocityEstimator:
    """Finite-difference velocity from quantized samples, with smoothing."""

    def __init__(self, ts: float, alpha: float = 0.15):
        self.ts = ts
        self.alpha = alpha
        self.prev: np.ndarray | None = None
        self.smooth = np.zeros(2)
        self.raw = np.zeros(2)

    def update(self, row: tuple[float, ...]) -> None:
        p = np.array(row[:2])
        if self.prev is not None:
            self.raw = (p - self.prev) / self.ts
            self.smooth = (1 - self.alpha) * self.smooth + self.alpha * self.raw
        self.prev = p


class _StopPolicy:
    """Damp the marker, hold position, certify rest, then let go.

    The controller knows nothing about the machine, so before braking it
    pokes the marker with a small known force and reads off the effective
    inertia from the velocity response; the plan's reference gains are
    scaled by that estimate, which keeps the discrete loop stable whether
    the marker weighs a unit mass or responds like a light rotor rim.
    """

    WARMUP = 20
    POKE = 50
    POKE_FORCE = 0.3
    SETTLE = 200  # samples held before certification may trigger

    def __init__(self, plan: ProbePlan):
        self.plan = plan
        ts = plan.sensor.sample_period
        self.est = _VelocityEstimator(ts)
        self.sigma_v = plan.sensor.quantum * math.sqrt(2.0) / ts
        self.phase = "warmup"
        self.warmup_v: list[np.ndarray] = []
        self.poke_v: list[float] = []
        self.poke_dir: np.ndarray | None = None
        self.effective_mass = 1.0
        self.initial_speed: float | None = None
        self.v_tol_cert: float | None = None
        self.cert_window: int | None = None
        self.recent_v: list[np.ndarray] = []
        self.hold_point: np.ndarray | None = None
        self.hold_count = 0
        self.release_index: int | None = None
        self.budget_samples = int(round(plan.stop_budget / ts))

    def __call__(self, index: int, t: float, row: tuple[float, ...]) -> Vec2 | None:
        self.est.update(row)
        if self.release_index is not None:
            return Vec2(0.0, 0.0)
        if index > self.budget_samples:
            return Vec2(0.0, 0.0)
        if self.phase == "warmup":
            if index > 0:
                self.warmup_v.append(self.est.raw.copy())
            if index >= self.WARMUP:
                self._finish_warmup()
            return Vec2(0.0, 0.0)
        if self.phase == "poke":
            self.poke_v.append(float(self.est.raw @ self.poke_dir))
            if len(self.poke_v) >= self.POKE:
                self._finish_poke()
                return Vec2(0.0, 0.0)
            f = self.POKE_FORCE * self.poke_dir
            return Vec2(float(f[0]), float(f[1]))

        kp, kd = self.plan.controller_gains
        kp *= self.effective_mass
        kd *= self.effective_mass
        vs = self.est.smooth
        if self.phase == "damp":
            if float(np.linalg.norm(vs)) < max(0.3 * self.initial_speed,
                                               self.v_tol_cert):
                self.phase = "hold"
                self.hold_point = np.array(row[:2])
            force = -kd * vs
        if self.phase == "hold":
            err = np.array(row[:2]) - self.hold_point
            force = -kp * err - kd * vs
            self.hold_count += 1
            self.recent_v.append(self.est.raw.copy())
            if len(self.recent_v) > self.cert_window:
                self.recent_v.pop(0)
            if (self.hold_count >= max(self.SETTLE, self.cert_window)
                    and len(self.recent_v) >= self.cert_window
                    and self._certified_at_rest(vs)):
                self.release_index = index
                return Vec2(0.0, 0.0)
        limit = self.plan.force_limit
        norm = float(np.linalg.norm(force))
        if norm > limit:
            force = force * (limit / norm)
        return Vec2(float(force[0]), float(force[1]))

    def _finish_warmup(self):
        mean_v = np.mean(self.warmup_v, axis=0)
        self.initial_speed = float(np.linalg.norm(mean_v))
        v_tol = self.plan.v_tol()
        # The sensor-derived tolerance can exceed a slow marker's actual
        # speed; certify against a tenth of the initial speed whenever that
        # speed is measurable at all.
        noise = (self.sigma_v * math.sqrt(math.pi / 2)
                 / math.sqrt(max(len(self.warmup_v), 1)))
        cert = v_tol
        if self.initial_speed > 3 * noise:
            cert = min(v_tol, 0.1 * self.initial_speed)
        self.v_tol_cert = cert
        # Window long enough that quantization noise cannot fake rest.
        need = (3.0 * self.sigma_v * math.sqrt(math.pi / 2) / cert) ** 2
        self.cert_window = int(min(max(need, 50), 5000))
        if self.initial_speed > 3 * noise:
            self.poke_dir = mean_v / self.initial_speed
            self.phase = "poke"
        else:
            self.phase = "damp"

    def _finish_poke(self):
        ts = self.plan.sensor.sample_period
        t = np.arange(len(self.poke_v)) * ts
        slope = float(np.polyfit(t, self.poke_v, 1)[0])
        slope_noise = self.sigma_v * math.sqrt(
            12.0 / (len(t) * (len(t) ** 2 - 1))) / ts
        if slope > 3 * slope_noise:
            self.effective_mass = min(max(self.POKE_FORCE / slope, 0.02), 50.0)
        self.phase = "damp"

    def _certified_at_rest(self, smoothed: np.ndarray) -> bool:
        mean_v = np.mean(self.recent_v, axis=0)
        if float(np.linalg.norm(mean_v)) >= self.v_tol_cert:
            return False
        if float(np.linalg.norm(smoothed)) >= self.v_tol_cert:
            return False
        # A marker ringing at the sample rate averages to zero; the raw
        # per-sample speeds expose it.
        max_raw = max(float(np.linalg.norm(v)) for v in self.recent_v)
        return max_raw < max(6.0 * self.sigma_v, 2.0 * self.v_tol_cert)

    def meta(self) -> dict:
        return {"release_index": self.release_index,
                "initial_speed": self.initial_speed,
                "rest_tolerance": self.v_tol_cert,
                "effective_mass": self.effective_mass}


class _SweepPolicy:
    """Serpentine PD sweep over a waypoint lattice spanning the declared box."""

    CAPTURE = 0.35
    DWELL_LIMIT = 3.0  # seconds of simulated time per waypoint at most

    def __init__(self, plan: ProbePlan, calculator: Calculator):
        self.plan = plan
        self.est = _VelocityEstimator(plan.sensor.sample_period)
        extent = plan.sweep_extent
        if extent is None:
            side = calculator.declaration.params.get("side")
            extent = side / 2 - 1.0 if side else calculator.characteristic_length / 2
        nx, ny = plan.sweep_grid
        xs = np.linspace(-extent, extent, nx)
        ys = np.linspace(-extent, extent, ny)
        pts = []
        for j, y in enumerate(ys):
            row = [(x, y) for x in (xs if j % 2 == 0 else xs[::-1])]
            pts.extend(row)
        self.waypoints = pts
        self.current = 0
        self.dwell = 0.0
        self.kp = 6.0
        self.kd = 4.0

    def __call__(self, index: int, t: float, row: tuple[float, ...]) -> Vec2 | None:
        self.est.update(row)
        if self.current >= len(self.waypoints):
            return Vec2(0.0, 0.0)
        target = np.array(self.waypoints[self.current])
        p = np.array(row[:2])
        err = p - target
        self.dwell += self.plan.sensor.sample_period
        if float(np.linalg.norm(err)) < self.CAPTURE or self.dwell > self.DWELL_LIMIT:
            self.current += 1
            self.dwell = 0.0
        force = -self.kp * err - self.kd * self.est.smooth
        limit = self.plan.force_limit
        norm = float(np.linalg.norm(force))
        if norm > limit:
            force = force * (limit / norm)
        return Vec2(float(force[0]), float(force[1]))

    def meta(self) -> dict:
        return {"waypoints_visited": self.current,
                "waypoints_total": len(self.waypoints)}


# ---------------------------------------------------------------------------
# Newton residual


def _quadratic_accel(t: np.ndarray, values: np.ndarray) -> float:
    coef = np.polyfit(t, values, 2)
    return 2.0 * float(coef[0])


def _displacement_accel(t: np.ndarray, pos: np.ndarray, ends: int = 20
                        ) -> np.ndarray:
    """Mean acceleration of a from-rest segment via end-to-end displacement.

    For motion released from rest, the displacement between the window's
    first and last few samples reads the acceleration with only one
    division by time squared, so a single sensor-quantum step costs far
    less accuracy than differentiating twice.
    """
    ends = min(ends, len(t) // 3)
    t2 = t * t
    denom = float(np.mean(t2[-ends:]) - np.mean(t2[:ends]))
    delta = pos[-ends:].mean(axis=0) - pos[:ends].mean(axis=0)
    return 2.0 * delta / denom


def _accel_noise_std(t: np.ndarray, quantum: float) -> float:
    """Std of the fitted acceleration when positions carry quantization noise."""
    x = np.vstack([np.ones_like(t), t, t * t]).T
    cov = np.linalg.inv(x.T @ x)
    sigma_e = quantum / math.sqrt(12.0)
    return 2.0 * sigma_e * math.sqrt(cov[2, 2])


def integrate_declared(declaration: Declaration, p0: np.ndarray, v0: np.ndarray,
                       forces: np.ndarray, ts: float, mass: float
                       ) -> tuple[np.ndarray, np.ndarray]:
    """Positions of the declared model driven by the recorded force log.

    Returns (positions, folded) where folded[i] marks steps on which the
    declared walls reflected the state.
    """
    n = len(forces)
    pos = np.empty((n + 1, 2))
    folded = np.zeros(n + 1, dtype=bool)
    p = p0.astype(float).copy()
    v = v0.astype(float).copy()
    pos[0] = p
    fam = declaration.family
    walls = declaration.declared_constraints

    def smooth_accel(pp, vv, f):
        if fam in (FREE_MOTION, FREE_MOTION_BOUNDED):
            return f / mass
        if fam == HARMONIC:
            w2 = declaration.params["omega"] ** 2
            return -w2 * pp + f / mass
        m_p = declaration.params["m_p"]
        rel = pp
        r = float(np.linalg.norm(rel))
        r = max(r, 1e-9)
        pull = -declaration.params["k"] * declaration.params["a"] ** 2 * rel / r**3
        return pull / m_p + f / m_p

    for i in range(n):
        f = forces[i]
        if fam in (FREE_MOTION, FREE_MOTION_BOUNDED):
            a = f / mass
            p = p + v * ts + 0.5 * a * ts * ts
            v = v + a * ts
        else:
            k1v = smooth_accel(p, v, f)
            k1p = v
            k2v = smooth_accel(p + 0.5 * ts * k1p, v + 0.5 * ts * k1v, f)
            k2p = v + 0.5 * ts * k1v
            k3v = smooth_accel(p + 0.5 * ts * k2p, v + 0.5 * ts * k2v, f)
            k3p = v + 0.5 * ts * k2v
            k4v = smooth_accel(p + ts * k3p, v + ts * k3v, f)
            k4p = v + ts * k3v
            p = p + ts / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
            v = v + ts / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        for w in walls:
            axis = 0 if w.axis == "x" else 1
            lo_side = p0[axis] <= w.position
            if lo_side and p[axis] > w.position:
                p[axis] = 2 * w.position - p[axis]
                v[axis] = -v[axis]
                folded[i + 1] = True
            elif not lo_side and p[axis] < w.position:
                p[axis] = 2 * w.position - p[axis]
                v[axis] = -v[axis]
                folded[i + 1] = True
        pos[i + 1] = p
    return pos, folded


def newton_residual(record: ProbeRecord, declaration: Declaration,
                    mass: float, window_time: float = 1.0,
                    wall_event_tol: float = 0.1) -> ProbeReport:
    """Compare measured against declared acceleration, window by window.

    Each window's measured acceleration comes from a quadratic fit of the
    sampled positions; the declared prediction is produced by integrating the
    declared model from the window's own fitted initial state under the
    recorded force log and fitting the identical quadratic, so estimator bias
    cancels. Windows where the declared constraints act (wall bounces) are
    excused; anything else above threshold is a violation.
    """
    traj = record.trajectory
    ts = traj.sample_period
    n = traj.n_samples()
    bodies = traj.bodies()
    _, xc, yc = bodies[0]
    events = detect_events(traj)

    win = max(20, int(round(window_time / ts)))
    head = 15
    threshold = None
    residuals = []
    times = []
    excused = []
    for start in range(0, n - win, win):
        stop = start + win
        t = traj.times[start:stop] - traj.times[start]
        pos = traj.samples[start:stop][:, [xc, yc]]

        p0 = np.empty(2)
        v0 = np.empty(2)
        for k in range(2):
            coef = np.polyfit(t[:head], pos[:head, k], 2)
            p0[k] = np.polyval(coef, 0.0)
            v0[k] = np.polyval(np.polyder(coef), 0.0)
        pred, folded = integrate_declared(
            declaration, p0, v0, record.applied[start:stop - 1], ts, mass
        )

        meas_a = np.array([_quadratic_accel(t, pos[:, k]) for k in range(2)])
        pred_a = np.array([_quadratic_accel(t, pred[:, k]) for k in range(2)])
        resid = float(np.linalg.norm(meas_a - pred_a))
        if threshold is None:
            threshold = 5.0 * math.sqrt(2.0) * _accel_noise_std(t, traj.quantum)

        is_excused = bool(folded.any())
        for e in events.events:
            if traj.times[start] <= e.time <= traj.times[stop - 1]:
                if _near_declared_wall(e.location.as_tuple(), declaration,
                                       wall_event_tol):
                    is_excused = True
                else:
                    is_excused = False  # a non-wall event keeps the window live
                    break
        residuals.append(resid)
        times.append(float(traj.times[start]))
        excused.append(is_excused)

    if threshold is None:
        return ProbeReport(
            probe=record.plan.kind, passed=None, max_residual=float("nan"),
            details={"reason": "record too short for any check window"},
        )
    live = [r for r, ex in zip(residuals, excused) if not ex]
    max_resid = max(live) if live else 0.0
    passed = all(r <= threshold for r in live)
    return ProbeReport(
        probe="force_schedule" if record.plan.kind == "force_schedule"
        else record.plan.kind,
        passed=passed,
        max_residual=max_resid,
        events=[{"time": e.time, "x": e.location.x, "y": e.location.y}
                for e in events.events],
        details={
            "threshold": threshold,
            "window_times": times,
            "window_residuals": residuals,
            "window_excused": excused,
        },
    )


def _near_declared_wall(loc: tuple[float, float], declaration: Declaration,
                        tol: float) -> bool:
    for w in declaration.declared_constraints:
        value = loc[0] if w.axis == "x" else loc[1]
        if abs(value - w.position) <= tol:
            return True
    return False


# ---------------------------------------------------------------------------
# Stop and release


def stop_and_release(calculator: Calculator, plan: ProbePlan | None = None
                     ) -> ProbeReport:
    """Bring the marker to rest, let go, and test the declared pull.

    Falsified when the measured post-release acceleration is under 5% of the
    declared prediction at the stopping radius. A controller that cannot
    certify rest within its budget yields an inconclusive report, which is
    not evidence either way.
    """
    if plan is None:
        plan = ProbePlan(kind="stop_and_release",
                         sensor=SensorSpec(duration=52.0))
    if plan.kind != "stop_and_release":
        raise ValueError("plan kind must be stop_and_release")
    decl = calculator.declaration
    if decl.family != CENTRAL_FORCE:
        raise ProbeError(
            "stop-and-release tests inverse-square declarations; "
            f"{calculator.id} declares {decl.family}"
        )
    record = run_probe(calculator, plan)
    release = record.meta.get("release_index")
    traj = record.trajectory
    if release is None:
        return ProbeReport(
            probe="stop_and_release", passed=None, max_residual=float("nan"),
            details={"reason": "controller failed to certify rest in budget",
                     **record.meta},
        )
    ts = traj.sample_period
    bodies = traj.bodies()
    _, xc, yc = bodies[0]

    pre = traj.samples[max(release - 20, 0):release + 1][:, [xc, yc]]
    stop_point = pre.mean(axis=0)
    r_stop = float(np.linalg.norm(stop_point))  # declared center is the origin
    predicted = (decl.params["k"] * decl.params["a"] ** 2
                 / (decl.params["m_p"] * max(r_stop, 1e-9) ** 2))

    # Weak declared pulls need a longer look: pick the window so the declared
    # fall would cover a solid displacement while its own growth stays a few
    # percent (fall time scales with sqrt(r/a)).
    window = math.sqrt(0.12 * r_stop / predicted)
    window = min(max(window, 0.6), 3.5)
    fit_start = release + 2
    fit_len = max(60, int(round(window / ts)))
    if fit_start + fit_len > traj.n_samples():
        return ProbeReport(
            probe="stop_and_release", passed=None, max_residual=float("nan"),
            details={"reason": "record too short after release", **record.meta},
        )
    t = traj.times[fit_start:fit_start + fit_len] - traj.times[fit_start]
    seg = traj.samples[fit_start:fit_start + fit_len][:, [xc, yc]]
    accel = _displacement_accel(t, seg)
    measured = float(np.linalg.norm(accel))
    falsified = measured < 0.05 * predicted
    return ProbeReport(
        probe="stop_and_release",
        passed=not falsified,
        max_residual=abs(measured - predicted),
        predicted=predicted,
        measured=measured,
        details={
            "r_stop": r_stop,
            "release_time": float(traj.times[release]),
            "falsified": falsified,
            **record.meta,
        },
    )


# ---------------------------------------------------------------------------
# The full battery


def falsify(calculator: Calculator, sensor: SensorSpec | None = None,
            config: ObserverConfig | None = None) -> Verdict:
    """Passive classification plus the probe battery the declaration invites.

    The battery is declaration-driven: every controllable calculator gets a
    Newton check under a force schedule; bounded free-motion claims get a
    coupling sweep; inverse-square claims get stop-and-release. Any failed
    check overturns the passive verdict.
    """
    sensor = sensor or SensorSpec()
    cfg = config or ObserverConfig()
    traj = observe(calculator, sensor)
    passive = classify(traj, calculator.declaration, cfg)
    if not calculator.partition.input:
        passive.diagnostics["probes"] = []
        return passive

    decl = calculator.declaration
    mass = decl.mass
    reports: list[ProbeReport] = []

    schedule_plan = default_force_schedule(
        SensorSpec(sensor.sample_period, sensor.quantum, 12.0)
    )
    record = run_probe(calculator, schedule_plan)
    reports.append(newton_residual(record, decl, mass))

    if decl.family == FREE_MOTION_BOUNDED:
        sweep_plan = ProbePlan(
            kind="coupling_sweep",
            sensor=SensorSpec(sensor.sample_period, sensor.quantum, 160.0),
        )
        sweep_record = run_probe(calculator, sweep_plan)
        sweep_report = newton_residual(sweep_record, decl, mass)
        sweep_report.probe = "coupling_sweep"
        reports.append(sweep_report)

    if decl.family == CENTRAL_FORCE:
        reports.append(stop_and_release(calculator))

    newton_violations = sum(
        sum(1 for resid, excused in zip(r.details.get("window_residuals", []),
                                        r.details.get("window_excused", []))
            if not excused and resid > r.details.get("threshold", math.inf))
        for r in reports if r.probe in ("force_schedule", "coupling_sweep")
    )
    stop_failed = any(
        r.passed is False and r.probe == "stop_and_release" for r in reports
    )
    inconclusive = [r.probe for r in reports if r.passed is None]

    diagnostics = dict(passive.diagnostics)
    diagnostics["probes"] = [_report_summary(r) for r in reports]
    if inconclusive:
        diagnostics.setdefault("warnings", []).append(
            f"inconclusive probes: {inconclusive}"
        )

    if stop_failed:
        # The decisive experiment for an inverse-square claim: the declared
        # family itself is wrong, which is more specific than the Newton
        # residual's "something unexplained pushed back".
        return Verdict(
            physicality=PHYSICAL_WITH_INFERRED, agreement=DISAGREES,
            best_family=passive.best_family, params=passive.params,
            residual=passive.residual,
            unexplained_events=passive.unexplained_events,
            inferred_walls=passive.inferred_walls, diagnostics=diagnostics,
        )
    if newton_violations:
        return Verdict(
            physicality=NON_PHYSICAL, agreement=DISAGREES,
            best_family=passive.best_family, params=passive.params,
            residual=passive.residual,
            unexplained_events=passive.unexplained_events + newton_violations,
            inferred_walls=passive.inferred_walls, diagnostics=diagnostics,
        )
    return Verdict(
        physicality=passive.physicality, agreement=passive.agreement,
        best_family=passive.best_family, params=passive.params,
        residual=passive.residual,
        unexplained_events=passive.unexplained_events,
        inferred_walls=passive.inferred_walls, diagnostics=diagnostics,
    )


def _report_summary(report: ProbeReport) -> dict:
    return {
        "probe": report.probe,
        "pass": "inconclusive" if report.passed is None else report.passed,
        "max_residual": report.max_residual,
        "predicted": report.predicted,
        "measured": report.measured,
        "events": report.events,
    }
