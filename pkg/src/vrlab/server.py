"""Live session server: stream observed dofs, accept forces, judge on demand.

One WebSocket connection is one session with one calculator instance. The
server paces frames at the sensor rate scaled by the session speed, applies
client force messages to the input dofs with zero-order hold, and runs
probe commands headlessly on a fresh copy of the calculator. For
inverse-square declarations a release watcher mirrors the prober's
stop-and-release oracle: when the client holds the marker at rest and then
lets go, the post-release window is measured and a verdict is pushed.

Frames carry output-dof values only; that restriction is asserted at the
serialization boundary, not left to clients.
"""
from __future__ import annotations

import asyncio
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .calculators import CENTRAL_FORCE, CATALOG_IDS, Calculator, build
from .dynamics import step
from .io import declaration_to_dict, verdict_to_dict, probe_report_to_dict
from .observer import (
    MIN_SAMPLES,
    ObserverConfig,
    SensorSpec,
    Trajectory,
    detect_events,
    fit,
    quantize,
)
from .prober import (
    ProbePlan,
    _displacement_accel,
    default_force_schedule,
    falsify,
    newton_residual,
    run_probe,
    stop_and_release,
)
from .protocol import ProtocolError, parse_client_message
from .vec import Vec2


def _run_single_newton_probe(calculator: Calculator, kind: str):
    if kind == "force_schedule":
        plan = default_force_schedule()
    else:
        plan = ProbePlan(kind="coupling_sweep", sensor=SensorSpec(duration=160.0))
    record = run_probe(calculator, plan)
    report = newton_residual(record, calculator.declaration,
                             calculator.declaration.mass)
    report.probe = kind
    return report

_session_counter = itertools.count(1)

FIT_INTERVAL = 500      # samples between live fit messages
FIT_TAIL = 2000         # samples the live fit looks back over


@dataclass
class Session:
    calculator: Calculator
    sensor: SensorSpec
    speed: float
    steps_per_sample: int = 10
    session_id: str = ""
    pending_force: Vec2 | None = None
    sample_index: int = 0
    rows: list[list[float]] = field(default_factory=list)
    forces: list[tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        if not self.session_id:
            self.session_id = f"session-{next(_session_counter):04d}"
        self.world = self.calculator.world
        q = self.sensor.quantum
        self.rows.append(
            [quantize(v, q) for v in self.calculator.output_values(self.world)]
        )
        self.forces.append((0.0, 0.0))

    @property
    def time(self) -> float:
        return self.sample_index * self.sensor.sample_period

    def advance(self) -> list[float]:
        """Advance one sensor period under the pending force and sample."""
        force = self.pending_force
        applied = (self.calculator.input_forces(force)
                   if force is not None and self.calculator.partition.input
                   else None)
        dt = self.sensor.sample_period / self.steps_per_sample
        for _ in range(self.steps_per_sample):
            self.world = step(self.world, dt, applied)
        self.sample_index += 1
        q = self.sensor.quantum
        row = [quantize(v, q) for v in self.calculator.output_values(self.world)]
        self.rows.append(row)
        self.forces.append((force.x, force.y) if force is not None else (0.0, 0.0))
        return row

    def frame_values(self, row: list[float]) -> dict[str, float]:
        out_dofs = self.calculator.partition.output
        values = dict(zip(out_dofs, row))
        # Output dofs only may cross this boundary.
        assert set(values) <= set(out_dofs), "hidden dof leaked into a frame"
        return values

    def tail_trajectory(self, n: int) -> Trajectory | None:
        if len(self.rows) < max(n // 2, MIN_SAMPLES):
            return None
        rows = self.rows[-n:]
        start = len(self.rows) - len(rows)
        ts = self.sensor.sample_period
        times = (start + np.arange(len(rows))) * ts
        return Trajectory(
            dof_ids=tuple(self.calculator.partition.output),
            times=times, samples=np.array(rows),
            quantum=self.sensor.quantum, sample_period=ts,
        )


class ReleaseWatcher:
    """Detect a manual stop-and-release and measure the aftermath."""

    HOLD_WINDOW = 100
    POST_WINDOW = 100

    def __init__(self, session: Session):
        self.session = session
        self.armed = False
        self.release_index: int | None = None
        self.done = False
        decl = session.calculator.declaration
        self.enabled = (decl.family == CENTRAL_FORCE
                        and bool(session.calculator.partition.input))
        ts = session.sensor.sample_period
        self.sigma_v = session.sensor.quantum * math.sqrt(2) / ts
        self.rest_tol = max(10 * session.sensor.quantum / ts * 0.1,
                            3 * self.sigma_v * math.sqrt(math.pi / 2)
                            / math.sqrt(self.HOLD_WINDOW))

    def check(self) -> dict | None:
        """Returns a verdict message once the post-release window is in."""
        if not self.enabled or self.done:
            return None
        s = self.session
        i = s.sample_index
        if self.release_index is None:
            if i < self.HOLD_WINDOW + 2:
                return None
            rows = np.array(s.rows[-(self.HOLD_WINDOW + 1):])
            vbar = (rows[-1] - rows[0]) / (self.HOLD_WINDOW
                                           * s.sensor.sample_period)
            at_rest = float(np.linalg.norm(vbar)) < self.rest_tol
            forcing = any(fx != 0 or fy != 0 for fx, fy in s.forces[-5:])
            if at_rest and forcing:
                self.armed = True
            if self.armed and not forcing and at_rest:
                self.release_index = i
            return None
        if i < self.release_index + self.POST_WINDOW + 2:
            return None
        if any(fx != 0 or fy != 0
               for fx, fy in s.forces[self.release_index:]):
            # Client grabbed it again: reset and wait for the next attempt.
            self.release_index = None
            self.armed = False
            return None
        self.done = True
        return self._evaluate()

    def _evaluate(self) -> dict:
        s = self.session
        decl = s.calculator.declaration
        ts = s.sensor.sample_period
        rel = self.release_index
        pre = np.array(s.rows[max(rel - 20, 0):rel + 1])
        stop_point = pre.mean(axis=0)
        r_stop = float(np.linalg.norm(stop_point))
        predicted = (decl.params["k"] * decl.params["a"] ** 2
                     / (decl.params["m_p"] * max(r_stop, 1e-9) ** 2))
        seg = np.array(s.rows[rel + 2:rel + 2 + self.POST_WINDOW])
        t = np.arange(len(seg)) * ts
        accel = _displacement_accel(t, seg)
        measured = float(np.linalg.norm(accel))
        falsified = measured < 0.05 * predicted
        verdict = {
            "physicality": ("PhysicalWithInferredConstraints" if falsified
                            else "PhysicalAsDeclared"),
            "agreement": "Disagrees" if falsified else "Agrees",
            "best_family": decl.family,
            "params": dict(decl.params),
            "residual": abs(measured - predicted),
            "unexplained_events": 0,
            "inferred_walls": [],
        }
        report = {
            "probe": "stop_and_release",
            "pass": not falsified,
            "max_residual": abs(measured - predicted),
            "predicted": predicted,
            "measured": measured,
            "events": [],
        }
        return {"type": "verdict", "source": "release_watch",
                "verdict": verdict, "report": report}


def _quick_fit_message(session: Session) -> dict | None:
    traj = session.tail_trajectory(FIT_TAIL)
    if traj is None:
        return None
    cfg = ObserverConfig()
    events = detect_events(traj, cfg.event_threshold_factor)
    results = {}
    for family in ("FreeMotion", "Harmonic"):
        try:
            results[family] = fit(traj, events, family, cfg)
        except Exception:
            continue
    if not results:
        return None
    best = min(results, key=lambda f: results[f].position_rms_quanta)
    return {
        "type": "fit",
        "t": session.time,
        "best_family": best,
        "residual": results[best].position_rms_quanta,
        "n_events": len(events),
    }


def create_app(default_speed: float = 1.0, record_dir: str | None = None,
               ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="vrlab session server")

    @app.websocket("/ws")
    async def ws_session(ws: WebSocket):  # noqa: C901
        await ws.accept()
        try:
            init = parse_client_message(json.loads(await ws.receive_text()))
            if init["type"] != "init":
                raise ProtocolError("first message must be init")
        except WebSocketDisconnect:
            return
        except (ProtocolError, json.JSONDecodeError) as exc:
            await ws.send_json({"type": "error", "message": str(exc)})
            await ws.close()
            return

        cid = init["calculator"]
        if cid not in CATALOG_IDS:
            await ws.send_json({"type": "error",
                                "message": f"unknown calculator {cid!r}"})
            await ws.close()
            return
        sensor_args = init.get("sensor", {})
        try:
            sensor = SensorSpec(
                sample_period=float(sensor_args.get("sample_period", 0.01)),
                quantum=float(sensor_args.get("quantum", 1e-3)),
                duration=float(sensor_args.get("duration", 3600.0)),
            )
            params = {k: tuple(v) if isinstance(v, list) else v
                      for k, v in init.get("params", {}).items()}
            calculator = build(cid, **params)
        except ValueError as exc:
            await ws.send_json({"type": "error", "message": str(exc)})
            await ws.close()
            return
        speed = float(init.get("speed", default_speed))
        speed = min(max(speed, 0.0), 1000.0)
        session = Session(calculator=calculator, sensor=sensor, speed=speed)
        watcher = ReleaseWatcher(session)
        await ws.send_json({
            "type": "ready",
            "session": session.session_id,
            "calculator": cid,
            "output_dofs": list(calculator.partition.output),
            "input_dofs": list(calculator.partition.input),
            "declaration": declaration_to_dict(calculator.declaration),
            "sample_period": sensor.sample_period,
            "quantum": sensor.quantum,
            "speed": speed,
        })

        inbox: asyncio.Queue = asyncio.Queue()
        send_lock = asyncio.Lock()

        async def send(payload: dict):
            async with send_lock:
                await ws.send_json(payload)

        async def reader():
            try:
                while True:
                    await inbox.put(await ws.receive_text())
            except WebSocketDisconnect:
                await inbox.put(None)

        reader_task = asyncio.create_task(reader())
        probe_tasks: set[asyncio.Task] = set()
        max_samples = int(round(sensor.duration / sensor.sample_period))
        try:
            while session.sample_index < max_samples:
                closed = False
                while not inbox.empty():
                    raw = inbox.get_nowait()
                    if raw is None:
                        closed = True
                        break
                    try:
                        msg = parse_client_message(json.loads(raw))
                    except (ProtocolError, json.JSONDecodeError) as exc:
                        await send({"type": "error", "message": str(exc)})
                        await ws.close()
                        closed = True
                        break
                    if msg["type"] == "force":
                        if not calculator.partition.input:
                            await send({"type": "error",
                                        "message": "no controller"})
                        else:
                            session.pending_force = Vec2(float(msg["fx"]),
                                                         float(msg["fy"]))
                    elif msg["type"] == "probe":
                        # Probes run on a copy off the event loop so frames
                        # keep flowing while the battery grinds.
                        task = asyncio.create_task(
                            _run_probe_command(send, calculator, msg["kind"]))
                        probe_tasks.add(task)
                        task.add_done_callback(probe_tasks.discard)
                if closed:
                    break

                row = session.advance()
                await send({
                    "type": "frame",
                    "t": session.time,
                    "values": session.frame_values(row),
                })
                if session.sample_index % FIT_INTERVAL == 0:
                    fit_msg = await asyncio.to_thread(_quick_fit_message, session)
                    if fit_msg is not None:
                        await send(fit_msg)
                verdict_msg = watcher.check()
                if verdict_msg is not None:
                    await send(verdict_msg)
                if session.speed > 0:
                    await asyncio.sleep(sensor.sample_period / session.speed)
                else:
                    await asyncio.sleep(0)
            if probe_tasks:
                await asyncio.gather(*probe_tasks, return_exceptions=True)
        except WebSocketDisconnect:
            pass
        finally:
            reader_task.cancel()
            for task in probe_tasks:
                task.cancel()
            if record_dir is not None:
                _write_recording(record_dir, session)

    async def _run_probe_command(send, calculator: Calculator, kind: str):
        if not calculator.partition.input:
            await send({"type": "error", "message": "no controller"})
            return
        try:
            if kind == "stop_and_release":
                report = await asyncio.to_thread(stop_and_release,
                                                 calculator.copy())
                await send({"type": "probe_report",
                            "report": probe_report_to_dict(report)})
                if report.passed is not None:
                    falsified = report.passed is False
                    await send({
                        "type": "verdict", "source": "probe",
                        "verdict": {
                            "physicality": ("PhysicalWithInferredConstraints"
                                            if falsified
                                            else "PhysicalAsDeclared"),
                            "agreement": "Disagrees" if falsified else "Agrees",
                            "best_family": calculator.declaration.family,
                            "params": dict(calculator.declaration.params),
                            "residual": report.max_residual,
                            "unexplained_events": 0,
                            "inferred_walls": [],
                        },
                        "report": probe_report_to_dict(report),
                    })
            elif kind in ("force_schedule", "coupling_sweep"):
                report = await asyncio.to_thread(
                    _run_single_newton_probe, calculator.copy(), kind)
                await send({"type": "probe_report",
                            "report": probe_report_to_dict(report)})
            else:  # battery
                verdict = await asyncio.to_thread(falsify, calculator.copy())
                for rep in verdict.diagnostics.get("probes", []):
                    await send({"type": "probe_report", "report": rep})
                await send({"type": "verdict", "source": "probe",
                            "verdict": verdict_to_dict(verdict)})
        except Exception as exc:
            try:
                await send({"type": "error",
                            "message": f"probe failed: {exc}"})
            except Exception:
                pass  # session already gone

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app


def _write_recording(record_dir: str, session: Session) -> None:
    from pathlib import Path

    path = Path(record_dir)
    path.mkdir(parents=True, exist_ok=True)
    out = path / f"{session.session_id}.csv"
    dofs = session.calculator.partition.output
    ts = session.sensor.sample_period
    with out.open("w") as fh:
        fh.write("t," + ",".join(dofs) + ",fx,fy\n")
        for i, (row, force) in enumerate(zip(session.rows, session.forces)):
            cells = [repr(i * ts)] + [repr(v) for v in row] + \
                [repr(force[0]), repr(force[1])]
            fh.write(",".join(cells) + "\n")
