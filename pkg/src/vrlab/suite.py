"""Run the whole catalog and tabulate passive and active verdicts."""
from __future__ import annotations

import hashlib
import json
import traceback
from dataclasses import asdict, dataclass, field

from . import __version__
from .calculators import CATALOG_IDS, DEFAULTS, build
from .io import declaration_to_dict, verdict_to_dict
from .observer import ObserverConfig, SensorSpec, classify, observe
from .prober import falsify


@dataclass
class SuiteRow:
    calculator: str
    passive: dict | None
    active: dict | str  # verdict dict or "n/a"
    evidence: dict = field(default_factory=dict)
    error: str | None = None


@dataclass
class SuiteReport:
    rows: list[SuiteRow]
    config_fingerprint: str
    tool_version: str
    config: dict

    def ok(self) -> bool:
        return all(r.error is None for r in self.rows)


def suite_config(sensor: SensorSpec, observer_cfg: ObserverConfig) -> dict:
    return {
        "tool_version": __version__,
        "sensor": {
            "sample_period": sensor.sample_period,
            "quantum": sensor.quantum,
            "duration": sensor.duration,
        },
        "observer": asdict(observer_cfg),
        "catalog_defaults": {k: _jsonable(v) for k, v in DEFAULTS.items()},
        "catalog_ids": list(CATALOG_IDS),
    }


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, tuple):
        return list(value)
    return value


def fingerprint(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def run_suite(sensor: SensorSpec | None = None,
              observer_cfg: ObserverConfig | None = None) -> SuiteReport:
    sensor = sensor or SensorSpec()
    observer_cfg = observer_cfg or ObserverConfig()
    config = suite_config(sensor, observer_cfg)
    rows: list[SuiteRow] = []
    for cid in CATALOG_IDS:
        try:
            rows.append(_run_row(cid, sensor, observer_cfg))
        except Exception:
            rows.append(SuiteRow(
                calculator=cid, passive=None, active="n/a",
                error=traceback.format_exc(limit=3),
            ))
    return SuiteReport(
        rows=rows, config_fingerprint=fingerprint(config),
        tool_version=__version__, config=config,
    )


def _run_row(cid: str, sensor: SensorSpec, cfg: ObserverConfig) -> SuiteRow:
    calc = build(cid)
    traj = observe(calc, sensor)
    passive = classify(traj, calc.declaration, cfg)
    if calc.partition.input:
        active = falsify(calc, sensor, cfg)
        active_out: dict | str = verdict_to_dict(active)
        probes = active.diagnostics.get("probes", [])
    else:
        active_out = "n/a"
        probes = []
    evidence = {
        "n_samples": passive.diagnostics.get("n_samples"),
        "n_events": passive.diagnostics.get("n_events"),
        "n_unexplained_events": passive.diagnostics.get("n_unexplained_events"),
        "warnings": passive.diagnostics.get("warnings", []),
        "probes": probes,
        "declaration": declaration_to_dict(calc.declaration),
    }
    return SuiteRow(
        calculator=cid, passive=verdict_to_dict(passive), active=active_out,
        evidence=evidence,
    )


def report_to_dict(report: SuiteReport, timestamp: str | None = None) -> dict:
    out = {
        "tool_version": report.tool_version,
        "config_fingerprint": report.config_fingerprint,
        "config": report.config,
        "rows": [
            {
                "calculator": r.calculator,
                "passive": r.passive,
                "active": r.active,
                "evidence": r.evidence,
                "error": r.error,
            }
            for r in report.rows
        ],
    }
    if timestamp is not None:
        out["generated_at"] = timestamp
    return out


def format_table(report: SuiteReport) -> str:
    header = f"{'calculator':<12} {'passive':<46} {'active':<46}"
    lines = [header, "-" * len(header)]
    for row in report.rows:
        if row.error is not None:
            lines.append(f"{row.calculator:<12} FAILED: {row.error.splitlines()[-1]}")
            continue
        passive = _verdict_cell(row.passive)
        active = _verdict_cell(row.active) if isinstance(row.active, dict) \
            else row.active
        lines.append(f"{row.calculator:<12} {passive:<46} {active:<46}")
    return "\n".join(lines) + "\n"


def _verdict_cell(verdict: dict) -> str:
    return f"{verdict['physicality']}/{verdict['agreement']}"
