import math

import numpy as np
import pytest

from vrlab import (
    CATALOG_IDS,
    AGREES,
    DISAGREES,
    NON_PHYSICAL,
    PHYSICAL_AS_DECLARED,
    InsufficientEvidenceError,
    SensorSpec,
    Trajectory,
    Verdict,
    build,
    classify,
    detect_events,
    estimate_derivatives,
    fit,
    infer_constraints,
    observe,
)
from vrlab.io import verdict_to_dict
from vrlab.observer import EventList, quantize

from .oracles import first_pair_collision_time, wall_bounce_schedule


def _synthetic_trajectory(fn, duration=60.0, ts=0.01, quantum=1e-3,
                          dof_ids=("x", "y")):
    times = np.arange(int(round(duration / ts)) + 1) * ts
    rows = np.array([fn(t) for t in times])
    samples = np.copysign(np.floor(np.abs(rows) / quantum + 0.5) * quantum, rows)
    return Trajectory(dof_ids=dof_ids, times=times, samples=samples,
                      quantum=quantum, sample_period=ts)


def test_quantize_rounding_rule():
    assert quantize(1.2345, 0.01) == pytest.approx(1.23)
    assert quantize(0.005, 0.01) == pytest.approx(0.01)   # ties away from zero
    assert quantize(-0.005, 0.01) == pytest.approx(-0.01)
    assert quantize(0.0049, 0.01) == 0.0


def test_observe_sample_count():
    calc = build("A")
    traj = observe(calc, SensorSpec(sample_period=0.01, quantum=1e-3,
                                    duration=10.0))
    assert traj.n_samples() == 1001


def test_observe_b_partial_outputs_only(observed):
    _, traj = observed("B_partial")
    assert traj.dof_ids == ("x1", "y1")


def test_observe_rejects_short_duration():
    calc = build("A")
    with pytest.raises(InsufficientEvidenceError):
        observe(calc, SensorSpec(sample_period=0.01, quantum=1e-3, duration=0.5))


def test_observe_warns_on_coarse_quantum():
    calc = build("A")
    traj = observe(calc, SensorSpec(sample_period=0.01, quantum=20.0,
                                    duration=2.0))
    assert any("quantum" in w for w in traj.warnings)


def test_trajectory_never_contains_hidden_dofs():
    sensor = SensorSpec(sample_period=0.01, quantum=1e-3, duration=2.0)
    for cid in CATALOG_IDS:
        calc = build(cid)
        traj = observe(calc, sensor)
        assert set(traj.dof_ids) == set(calc.partition.output)
        assert not set(traj.dof_ids) & set(calc.partition.hidden)


def test_derivatives_exact_on_quadratic():
    traj = _synthetic_trajectory(lambda t: (t * t, 0.0), duration=2.0,
                                 quantum=1e-15)
    d = estimate_derivatives(traj, EventList(np.empty(0), np.empty((0, 2))))
    inner = d.valid
    assert np.allclose(d.acceleration[inner][:, 0], 2.0, atol=1e-9)


def test_derivatives_sine_truncation_error():
    traj = _synthetic_trajectory(lambda t: (math.sin(t), 0.0), duration=10.0,
                                 quantum=1e-12)
    d = estimate_derivatives(traj, EventList(np.empty(0), np.empty((0, 2))))
    err = np.abs(d.acceleration[d.valid][:, 0] + np.sin(traj.times[d.valid]))
    assert err.max() < 1e-4


def test_derivatives_mask_near_events(observed):
    _, traj = observed("A")
    events = detect_events(traj)
    d = estimate_derivatives(traj, events)
    for e in events.events:
        near = np.abs(traj.times - e.time) <= 2 * traj.sample_period
        assert not d.valid[near].any()
    assert d.noise_floor_accel == pytest.approx(traj.quantum
                                                / traj.sample_period**2)


def test_detect_events_smooth_harmonic_is_quiet(observed):
    _, traj = observed("C")
    assert len(detect_events(traj)) == 0


def test_detect_events_matches_bounce_schedule(observed):
    calc, traj = observed("A")
    events = detect_events(traj)
    expected = wall_bounce_schedule(calc, 60.0 - 2 * traj.sample_period)
    assert len(events) == len(expected)
    for ev, (t_true, _axis) in zip(events.events, expected):
        assert abs(ev.time - t_true) <= traj.sample_period


def test_detect_events_finds_hidden_collision(observed):
    calc, traj = observed("B_partial")
    t_true = first_pair_collision_time(build("B_partial").world, 1e-3, 10.0)
    assert t_true is not None
    events = detect_events(traj)
    nearest = min(abs(e.time - t_true) for e in events.events)
    assert nearest <= traj.sample_period


def test_infer_constraints_recovers_box(observed):
    _, traj = observed("A")
    walls = infer_constraints(traj, detect_events(traj))
    assert len(walls) == 4
    positions = sorted((w.axis, round(w.position, 6)) for w in walls)
    for (axis, pos), expected in zip(positions,
                                     [("x", -5.0), ("x", 5.0),
                                      ("y", -5.0), ("y", 5.0)]):
        assert axis == expected[0]
        assert abs(pos - expected[1]) <= traj.quantum


def test_infer_constraints_empty_for_harmonic(observed):
    _, traj = observed("C")
    assert infer_constraints(traj, detect_events(traj)) == ()


def test_hidden_collision_stays_unexplained(classified):
    verdict = classified("B_partial")
    assert verdict.unexplained_events >= 1


def test_fit_recovers_harmonic_frequency():
    # Amplitude-scaled quantum, per the recovery contract.
    amp = 1.5

    def fn(t):
        return (amp * math.cos(2.0 * t + 0.3), 0.4 * amp * math.sin(2.0 * t))

    traj = _synthetic_trajectory(fn, quantum=1e-3 * amp)
    result = fit(traj, detect_events(traj), "Harmonic")
    assert result.params["omega"] == pytest.approx(2.0, rel=0.01)
    assert result.position_rms_quanta <= 5.0


def test_fit_free_motion_on_boxed_disk(observed):
    _, traj = observed("A")
    result = fit(traj, detect_events(traj), "FreeMotion")
    assert result.position_rms_quanta <= 5.0
    assert result.accel_residual_norm <= 1.0  # at or below the noise floor
    assert result.uses_only_observed


def test_fit_central_force_on_rotor(observed):
    _, traj = observed("E")
    result = fit(traj, detect_events(traj), "CentralForce")
    assert result.position_rms_quanta <= 5.0
    assert result.params["coefficient"] == pytest.approx(1.0, rel=0.02)
    assert math.hypot(result.params["center_x"],
                      result.params["center_y"]) < 0.04


def test_fit_rejects_unknown_family(observed):
    _, traj = observed("A")
    with pytest.raises(ValueError):
        fit(traj, detect_events(traj), "Magic")


def test_classify_boxed_disk_agrees(classified):
    verdict = classified("A")
    assert verdict.physicality == PHYSICAL_AS_DECLARED
    assert verdict.agreement == AGREES
    assert len(verdict.inferred_walls) == 4


def test_classify_partial_view_needs_hidden_variables(classified):
    verdict = classified("B_partial")
    assert verdict.physicality == NON_PHYSICAL
    assert verdict.agreement == DISAGREES


def test_classify_rotor_passes_for_declared_orbit(classified):
    verdict = classified("E")
    assert verdict.physicality == PHYSICAL_AS_DECLARED
    assert verdict.agreement == AGREES
    assert verdict.best_family == "CentralForce"


def test_classify_is_deterministic(observed):
    calc, traj = observed("C")
    v1 = classify(traj, calc.declaration)
    v2 = classify(traj, calc.declaration)
    assert verdict_to_dict(v1) == verdict_to_dict(v2)


def test_classify_rejects_short_record():
    times = np.arange(50) * 0.01
    traj = Trajectory(dof_ids=("x", "y"), times=times,
                      samples=np.zeros((50, 2)), quantum=1e-3,
                      sample_period=0.01)
    calc = build("A")
    with pytest.raises(InsufficientEvidenceError):
        classify(traj, calc.declaration)


def test_boxed_disk_verdict_stable_under_finer_quantum(classified):
    coarse = classified("A")
    calc = build("A")
    traj = observe(calc, SensorSpec(sample_period=0.01, quantum=1e-4,
                                    duration=60.0))
    fine = classify(traj, calc.declaration)
    assert coarse.physicality == fine.physicality == PHYSICAL_AS_DECLARED
    assert fine.agreement == AGREES


def test_d_and_c_verdicts_identical(classified):
    assert verdict_to_dict(classified("C")) == verdict_to_dict(classified("D"))


def test_verdict_invariants_enforced():
    with pytest.raises(ValueError):
        Verdict(physicality=PHYSICAL_AS_DECLARED, agreement=DISAGREES,
                best_family="FreeMotion", params={}, residual=0.0,
                unexplained_events=0, inferred_walls=())
    with pytest.raises(ValueError):
        Verdict(physicality=NON_PHYSICAL, agreement=AGREES,
                best_family="FreeMotion", params={}, residual=0.0,
                unexplained_events=1, inferred_walls=())


def test_sensor_spec_validation():
    with pytest.raises(ValueError):
        SensorSpec(sample_period=0.0)
    with pytest.raises(ValueError):
        SensorSpec(quantum=0.0)  # sensitivity must be finite and non-zero


def test_event_threshold_must_exceed_one():
    calc = build("A")
    traj = observe(calc, SensorSpec(duration=2.0))
    with pytest.raises(ValueError):
        detect_events(traj, threshold_factor=0.5)


def test_short_segments_skipped_with_diagnostic():
    # Two kinks eight samples apart leave a sliver between the event masks
    # that is too short to differentiate.
    ts = 0.01
    times = np.arange(401) * ts
    t1, t2 = 1.0, 1.08
    x = np.piecewise(
        times,
        [times < t1, (times >= t1) & (times < t2), times >= t2],
        [lambda t: t, lambda t: 2 * t1 - t, lambda t: t - t2 + (2 * t1 - t2)],
    )
    samples = np.stack([x, np.zeros_like(x)], axis=1)
    traj = Trajectory(dof_ids=("x", "y"), times=times, samples=samples,
                      quantum=1e-9, sample_period=ts)
    events = detect_events(traj)
    assert len(events) == 2
    d = estimate_derivatives(traj, events)
    assert any("skipped" in note for note in d.diagnostics)
    # the sliver between the two masks must not be marked usable
    sliver = (times > t1 + 2 * ts) & (times < t2 - 2 * ts)
    assert not d.valid[sliver].any()


def test_fit_central_force_multibody_reports_infinite_residual(observed):
    _, traj = observed("B_full")
    result = fit(traj, detect_events(traj), "CentralForce")
    assert result.position_rms_quanta == float("inf")
    assert "did not converge" in " ".join(result.diagnostics)


def test_trajectory_csv_round_trip(observed, tmp_path):
    from vrlab.io import read_trajectory_csv, write_trajectory_csv

    _, traj = observed("C")
    path = tmp_path / "c.csv"
    write_trajectory_csv(traj, path)
    loaded = read_trajectory_csv(path, quantum=traj.quantum)
    assert loaded.dof_ids == traj.dof_ids
    assert np.array_equal(loaded.samples, traj.samples)
    assert np.allclose(loaded.times, traj.times)


def test_bounce_at_record_edge_is_not_hidden_variables():
    # A wall bounce in the final fraction of a second cannot be resolved
    # kinematically; it must not flip an honest machine to non-physical.
    calc = build("A")
    traj = observe(calc, SensorSpec(sample_period=0.01, quantum=1e-3,
                                    duration=55.03))
    verdict = classify(traj, calc.declaration)
    assert verdict.physicality == PHYSICAL_AS_DECLARED
    assert verdict.agreement == AGREES


def test_energy_drift_all_passive_catalog_machines():
    # Symplectic stepping keeps every passive catalog machine's drift tiny.
    from vrlab import step, total_energy

    for cid in ("A", "B_full", "C", "D", "E"):
        w = build(cid).world
        e0 = total_energy(w)
        for _ in range(100_000):
            w = step(w, 1e-3)
        drift = abs(total_energy(w) - e0) / abs(e0)
        assert drift < 1e-6, f"{cid} drifted {drift}"


def test_corner_bounce_is_still_a_wall():
    # A diagonal launch hits both walls at the same instant; the merged
    # corner event must still read as wall bounces, not hidden variables.
    calc = build("A", vel=(1.0, 1.0))
    traj = observe(calc, SensorSpec())
    verdict = classify(traj, calc.declaration)
    assert verdict.physicality == PHYSICAL_AS_DECLARED
    assert verdict.agreement == AGREES
    axes = sorted((w.axis, round(w.position)) for w in verdict.inferred_walls)
    assert ("x", 5) in axes and ("y", 5) in axes


@pytest.mark.parametrize("params", [
    {"vel": (0.6, 0.45)},               # slow: jumps near the noise floor
    {"vel": (1.8, 1.3)},                # fast
    {"side": 6.0, "pos": (0.5, -0.5)},  # small box: bounces crowd together
])
def test_boxed_disk_agrees_across_parameters(params):
    calc = build("A", **params)
    traj = observe(calc, SensorSpec())
    verdict = classify(traj, calc.declaration)
    assert verdict.physicality == PHYSICAL_AS_DECLARED
    assert verdict.agreement == AGREES
    assert len(verdict.inferred_walls) == 4
