"""Acceptance gate: the verdict table plus the numerical contracts.

Each test prints one PASS line so the whole gate reads as a checklist under
``pytest -v`` or plain ``pytest -s``.
"""
import json

import numpy as np
import pytest

from vrlab import (
    AGREES,
    DISAGREES,
    NON_PHYSICAL,
    PHYSICAL_AS_DECLARED,
    SensorSpec,
    build,
    detect_events,
    falsify,
    fit,
    observe,
    step,
    total_energy,
)
from vrlab.io import verdict_to_dict
from vrlab.observer import Trajectory
from vrlab.suite import format_table, report_to_dict, run_suite

from .oracles import first_pair_collision_time, folded_position


def _ok(name):
    print(f"PASS: {name}")


@pytest.fixture(scope="module")
def active_verdicts():
    return {cid: falsify(build(cid)) for cid in ("F", "G", "H")}


# ---------------------------------------------------------------------------
# Verdict table


def test_table_a_passive_agrees(classified):
    v = classified("A")
    assert v.physicality == PHYSICAL_AS_DECLARED
    assert v.agreement == AGREES
    _ok("A passive -> (PhysicalAsDeclared, Agrees)")


def test_table_b_full_passive_agrees(classified):
    v = classified("B_full")
    assert v.agreement == AGREES
    assert v.physicality == PHYSICAL_AS_DECLARED
    _ok("B_full passive -> Agrees")


def test_table_b_partial_needs_hidden_variables(classified):
    v = classified("B_partial")
    assert v.physicality == NON_PHYSICAL
    assert v.agreement == DISAGREES
    _ok("B_partial passive -> (NonPhysicalHiddenVariables, Disagrees)")


def test_table_c_passive_agrees(classified):
    v = classified("C")
    assert v.agreement == AGREES
    _ok("C passive -> Agrees")


def test_table_d_agrees_and_matches_c(classified):
    v = classified("D")
    assert v.agreement == AGREES
    assert verdict_to_dict(v) == verdict_to_dict(classified("C"))
    _ok("D passive -> Agrees, verdict identical to C")


def test_table_e_passive_agrees_despite_one_dof(classified):
    assert build("E").total_dof_count == 1
    v = classified("E")
    assert v.physicality == PHYSICAL_AS_DECLARED
    assert v.agreement == AGREES
    _ok("E passive -> (PhysicalAsDeclared, Agrees) with a 1-dof machine")


def test_table_f_active_agrees(active_verdicts):
    v = active_verdicts["F"]
    assert v.agreement == AGREES
    assert v.physicality == PHYSICAL_AS_DECLARED
    _ok("F active -> Agrees")


def test_table_g_active_disagrees(active_verdicts):
    assert active_verdicts["G"].agreement == DISAGREES
    _ok("G active -> Disagrees")


def test_table_h_passive_agrees_active_disagrees(classified, active_verdicts):
    assert classified("H").agreement == AGREES
    assert active_verdicts["H"].agreement == DISAGREES
    _ok("H passive Agrees AND active Disagrees")


def test_table_x_passive_disagrees(classified):
    assert classified("X").agreement == DISAGREES
    _ok("X passive -> Disagrees")


# ---------------------------------------------------------------------------
# Numerical properties


def test_energy_conservation_million_steps():
    w = build("A").world
    e0 = total_energy(w)
    for _ in range(1_000_000):
        w = step(w, 1e-3)
    drift = abs(total_energy(w) - e0) / e0
    assert drift < 1e-6
    _ok(f"energy drift over 1e6 steps = {drift:.2e} < 1e-6")


def test_simulation_matches_piecewise_linear_oracle():
    calc = build("A")
    w = calc.world
    dt = 1e-3
    worst = 0.0
    for k in range(1, 60_001):
        w = step(w, dt)
        if k % 10 == 0:
            t = w.time
            ex = folded_position(0.0, 1.0, t, -5.0, 5.0)
            ey = folded_position(0.0, 0.7, t, -5.0, 5.0)
            worst = max(worst, abs(w.disks[0].pos.x - ex),
                        abs(w.disks[0].pos.y - ey))
    assert worst < 1e-9
    _ok(f"boxed free flight vs analytic fold: max error {worst:.2e} < 1e-9")


def test_harmonic_frequency_recovery():
    amp = 1.5
    ts = 0.01
    times = np.arange(6001) * ts
    clean = np.stack([amp * np.cos(2.0 * times + 0.3),
                      0.4 * amp * np.sin(2.0 * times)], axis=1)
    q = 1e-3 * amp
    samples = np.copysign(np.floor(np.abs(clean) / q + 0.5) * q, clean)
    traj = Trajectory(dof_ids=("x", "y"), times=times, samples=samples,
                      quantum=q, sample_period=ts)
    result = fit(traj, detect_events(traj), "Harmonic")
    err = abs(result.params["omega"] - 2.0) / 2.0
    assert err < 0.01
    _ok(f"harmonic frequency recovered to {err:.2e} relative (< 1%)")


def test_newton_check_constant_force(active_verdicts):
    from vrlab.prober import ProbePlan, newton_residual, run_probe

    calc = build("F")
    plan = ProbePlan(kind="force_schedule", sensor=SensorSpec(duration=12.0),
                     schedule=((0.5, 2.5, (0.5, 0.0)),))
    record = run_probe(calc, plan)
    report = newton_residual(record, calc.declaration, calc.declaration.mass)
    assert report.passed is True
    rel = report.max_residual / 0.5
    assert rel < 0.02
    _ok(f"Newton check under 0.5 force: residual {rel:.2%} of target (< 2%)")


def test_stop_and_release_margin():
    from vrlab.prober import stop_and_release

    report = stop_and_release(build("H"))
    assert report.predicted == pytest.approx(0.25, rel=0.01)
    assert report.measured < 0.0125  # 5% of the declared 0.25
    ratio = report.predicted / report.measured
    assert ratio > 20
    _ok(f"stop-and-release: predicted 0.25, measured {report.measured:.2e}, "
        f"ratio {ratio:.0f}x > 20x")


def test_hidden_collision_event_timing(observed):
    _, traj = observed("B_partial")
    t_true = first_pair_collision_time(build("B_partial").world, 1e-3, 10.0)
    events = detect_events(traj)
    nearest = min(abs(e.time - t_true) for e in events.events)
    assert nearest <= traj.sample_period
    _ok(f"hidden collision located to {nearest:.3f} <= one sample period")


@pytest.fixture(scope="module")
def suite_runs():
    return run_suite(), run_suite()


def test_suite_deterministic(suite_runs, tmp_path):
    blobs = []
    for run, report in enumerate(suite_runs):
        assert report.ok()
        payload = report_to_dict(report, timestamp=None)  # drop the timestamp
        path = tmp_path / f"suite-{run}.json"
        path.write_text(json.dumps(payload, indent=2, sort_keys=True))
        blobs.append(path.read_bytes())
    assert blobs[0] == blobs[1]
    assert suite_runs[0].config_fingerprint == suite_runs[1].config_fingerprint
    _ok("suite runs twice byte-identical (timestamp aside)")


def test_suite_table_matches_expectations(suite_runs):
    report = suite_runs[0]
    rows = {r.calculator: r for r in report.rows}
    expected_passive = {
        "A": (PHYSICAL_AS_DECLARED, AGREES),
        "B_full": (PHYSICAL_AS_DECLARED, AGREES),
        "B_partial": (NON_PHYSICAL, DISAGREES),
        "C": (PHYSICAL_AS_DECLARED, AGREES),
        "D": (PHYSICAL_AS_DECLARED, AGREES),
        "E": (PHYSICAL_AS_DECLARED, AGREES),
        "F": (PHYSICAL_AS_DECLARED, AGREES),
        "G": (NON_PHYSICAL, DISAGREES),
        "H": (PHYSICAL_AS_DECLARED, AGREES),
        "X": ("PhysicalWithInferredConstraints", DISAGREES),
    }
    for cid, (phys, agr) in expected_passive.items():
        row = rows[cid]
        assert row.error is None, f"{cid} crashed: {row.error}"
        assert row.passive["physicality"] == phys, cid
        assert row.passive["agreement"] == agr, cid
    assert rows["F"].active["agreement"] == AGREES
    assert rows["G"].active["agreement"] == DISAGREES
    assert rows["H"].active["agreement"] == DISAGREES
    for cid in ("A", "B_full", "B_partial", "C", "D", "E", "X"):
        assert rows[cid].active == "n/a"
    print(format_table(report))
    _ok("suite table matches the expected verdicts")
