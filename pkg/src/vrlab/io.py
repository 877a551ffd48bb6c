"""File formats: trajectory CSV, declaration / verdict / probe-report JSON."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .calculators import Declaration, WallLine
from .observer import Trajectory, Verdict
from .prober import ProbeReport


class FormatError(ValueError):
    pass


def write_trajectory_csv(traj: Trajectory, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", *traj.dof_ids])
        for t, row in zip(traj.times, traj.samples):
            writer.writerow([repr(float(t)), *(repr(float(v)) for v in row)])


def read_trajectory_csv(path: str | Path, quantum: float) -> Trajectory:
    path = Path(path)
    times = []
    rows = []
    with path.open() as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty trajectory file") from None
        if not header or header[0] != "t" or len(header) < 2:
            raise FormatError(f"{path}: header must be 't,<dof>...', got {header}")
        dof_ids = tuple(header[1:])
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise FormatError(
                    f"{path}: line {lineno}: expected {len(header)} fields, "
                    f"got {len(row)}"
                )
            try:
                values = [float(v) for v in row]
            except ValueError as exc:
                raise FormatError(f"{path}: line {lineno}: {exc}") from None
            times.append(values[0])
            rows.append(values[1:])
    if len(times) < 2:
        raise FormatError(f"{path}: need at least two samples")
    times_arr = np.array(times)
    period = float(times_arr[1] - times_arr[0])
    return Trajectory(
        dof_ids=dof_ids, times=times_arr, samples=np.array(rows),
        quantum=quantum, sample_period=period,
    )


def wall_to_dict(wall: WallLine) -> dict:
    return {"axis": wall.axis, "position": wall.position}


def wall_from_dict(data: dict) -> WallLine:
    return WallLine(axis=data["axis"], position=float(data["position"]))


def declaration_to_dict(declaration: Declaration) -> dict:
    return {
        "family": declaration.family,
        "params": dict(declaration.params),
        "declared_dof_count": declaration.declared_dof_count,
        "declared_constraints": [wall_to_dict(w)
                                 for w in declaration.declared_constraints],
        "declared_output_dofs": list(declaration.declared_output_dofs),
    }


def declaration_from_dict(data: dict) -> Declaration:
    try:
        return Declaration(
            family=data["family"],
            params={k: float(v) for k, v in data.get("params", {}).items()},
            declared_dof_count=int(data.get("declared_dof_count", 2)),
            declared_constraints=tuple(
                wall_from_dict(w) for w in data.get("declared_constraints", [])
            ),
            declared_output_dofs=tuple(data.get("declared_output_dofs", [])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad declaration: {exc}") from exc


def verdict_to_dict(verdict: Verdict) -> dict:
    return {
        "physicality": verdict.physicality,
        "agreement": verdict.agreement,
        "best_family": verdict.best_family,
        "params": {k: float(v) for k, v in verdict.params.items()},
        "residual": float(verdict.residual),
        "unexplained_events": int(verdict.unexplained_events),
        "inferred_walls": [wall_to_dict(w) for w in verdict.inferred_walls],
    }


def probe_report_to_dict(report: ProbeReport) -> dict:
    return {
        "probe": report.probe,
        "pass": "inconclusive" if report.passed is None else report.passed,
        "max_residual": _json_float(report.max_residual),
        "predicted": _json_float(report.predicted),
        "measured": _json_float(report.measured),
        "events": report.events,
    }


def _json_float(value):
    if value is None:
        return None
    value = float(value)
    if value != value:  # NaN
        return None
    return value
