"""Command-line harness: simulate, classify, probe, suite, serve.

Exit codes: 0 success, 1 runtime or verdict failure, 2 usage errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .calculators import CATALOG_IDS, build
from .io import (
    FormatError,
    declaration_from_dict,
    probe_report_to_dict,
    read_trajectory_csv,
    verdict_to_dict,
    write_trajectory_csv,
)
from .observer import (
    InsufficientEvidenceError,
    ObserverConfig,
    SensorSpec,
    classify,
    observe,
)
from .prober import ProbeError, ProbePlan, falsify, newton_residual, run_probe, \
    stop_and_release, default_force_schedule
from .suite import format_table, report_to_dict, run_suite, suite_config, fingerprint

PLAN_KINDS = ("force_schedule", "stop_and_release", "coupling_sweep", "battery")


def _sensor_from_args(args) -> SensorSpec:
    return SensorSpec(
        sample_period=args.sensor_dt,
        quantum=args.quantum,
        duration=args.duration,
    )


def _add_sensor_flags(parser, duration=60.0):
    parser.add_argument("--duration", type=float, default=duration,
                        help="observation window in time units")
    parser.add_argument("--sensor-dt", type=float, default=0.01,
                        help="sample period of the observer's instruments")
    parser.add_argument("--quantum", type=float, default=1e-3,
                        help="sensor resolution (samples are rounded to it)")


def _load_params(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise FormatError(f"{path}: parameter file must hold a JSON object")
    out = {}
    for key, value in data.items():
        out[key] = tuple(value) if isinstance(value, list) else value
    return out


def cmd_simulate(args) -> int:
    calc = build(args.calculator, **_load_params(args.params))
    traj = observe(calc, _sensor_from_args(args))
    write_trajectory_csv(traj, args.out)
    for w in traj.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"wrote {traj.n_samples()} samples to {args.out}")
    return 0


def cmd_classify(args) -> int:
    if args.declaration:
        with open(args.declaration) as fh:
            declaration = declaration_from_dict(json.load(fh))
    else:
        declaration = build(args.calculator).declaration
    traj = read_trajectory_csv(args.trajectory, quantum=args.quantum)
    verdict = classify(traj, declaration, ObserverConfig())
    Path(args.out).write_text(json.dumps(verdict_to_dict(verdict), indent=2) + "\n")
    print(f"{verdict.physicality}/{verdict.agreement} -> {args.out}")
    return 0


def cmd_probe(args) -> int:
    calc = build(args.calculator, **_load_params(args.params))
    if not calc.partition.input:
        raise ProbeError(f"no controller: calculator {calc.id} has no input dofs")
    sensor = _sensor_from_args(args)
    reports = []
    if args.plan == "battery":
        verdict = falsify(calc, sensor)
        reports = verdict.diagnostics.get("probes", [])
    else:
        if args.plan == "stop_and_release":
            report = stop_and_release(calc)
        else:
            if args.plan == "force_schedule":
                plan = default_force_schedule(
                    SensorSpec(sensor.sample_period, sensor.quantum, 12.0))
            else:
                plan = ProbePlan(kind="coupling_sweep", sensor=SensorSpec(
                    sensor.sample_period, sensor.quantum, 160.0))
            record = run_probe(calc, plan)
            report = newton_residual(record, calc.declaration,
                                     calc.declaration.mass)
            report.probe = args.plan
        reports = [probe_report_to_dict(report)]
        verdict = falsify(calc, sensor) if args.verdict_out else None
    Path(args.out).write_text(json.dumps(reports, indent=2) + "\n")
    if args.verdict_out:
        Path(args.verdict_out).write_text(
            json.dumps(verdict_to_dict(verdict), indent=2) + "\n")
    print(f"{len(reports)} probe report(s) -> {args.out}")
    return 0


def cmd_suite(args) -> int:
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
        sensor_cfg = cfg.get("sensor", {})
        sensor = SensorSpec(
            sample_period=float(sensor_cfg.get("sample_period", args.sensor_dt)),
            quantum=float(sensor_cfg.get("quantum", args.quantum)),
            duration=float(sensor_cfg.get("duration", args.duration)),
        )
    else:
        sensor = SensorSpec(sample_period=args.sensor_dt, quantum=args.quantum,
                            duration=args.duration)
    report = run_suite(sensor)
    stamp = datetime.now(timezone.utc).isoformat()
    payload = report_to_dict(report, timestamp=stamp)
    Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
    table = format_table(report)
    if args.table:
        Path(args.table).write_text(table)
    print(table, end="")
    print(f"fingerprint: {report.config_fingerprint}")
    return 0 if report.ok() else 1


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    app = create_app(default_speed=args.speed, record_dir=args.record_dir,
                     ui_dir=args.ui)
    print(f"LISTENING {args.host}:{args.port}", flush=True)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vrlab",
        description="Simulated calculators, a passive observer, and probes "
                    "that try to falsify the manufacturer's declaration.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--print-defaults", action="store_true",
                        help="print the full default configuration as JSON")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("simulate", help="write a trajectory CSV")
    p.add_argument("--calculator", required=True, choices=CATALOG_IDS)
    p.add_argument("--params", help="JSON file of catalog parameter overrides")
    _add_sensor_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("classify", help="judge a trajectory against a declaration")
    p.add_argument("--trajectory", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--declaration", help="declaration JSON file")
    group.add_argument("--calculator", choices=CATALOG_IDS,
                       help="use this catalog entry's declaration")
    p.add_argument("--quantum", type=float, default=1e-3,
                   help="sensor quantum the trajectory was recorded with")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("probe", help="run active probes against a calculator")
    p.add_argument("--calculator", required=True, choices=CATALOG_IDS)
    p.add_argument("--plan", choices=PLAN_KINDS, default="battery")
    p.add_argument("--params", help="JSON file of catalog parameter overrides")
    _add_sensor_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--verdict-out")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("suite", help="run every catalog entry and tabulate")
    _add_sensor_flags(p)
    p.add_argument("--config", help="JSON run config (see --print-defaults "
                   "for the shape); overrides the sensor flags")
    p.add_argument("--out", default="suite.json")
    p.add_argument("--table", help="also write the human-readable table here")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("serve", help="serve live observation sessions")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--speed", type=float, default=1.0,
                   help="simulated seconds per wall second; 0 = unthrottled")
    p.add_argument("--record-dir", help="write per-session frame logs here")
    p.add_argument("--ui", help="directory of static UI assets to serve at /")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_defaults:
        config = suite_config(SensorSpec(), ObserverConfig())
        config["config_fingerprint"] = fingerprint(config)
        print(json.dumps(config, indent=2, sort_keys=True))
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ProbeError, InsufficientEvidenceError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
