import math

import pytest

from vrlab import (
    CATALOG_IDS,
    CENTRAL_FORCE,
    FREE_MOTION,
    FREE_MOTION_BOUNDED,
    HARMONIC,
    Declaration,
    DofPartition,
    Vec2,
    build,
    declared_acceleration,
    step,
)


def test_build_a_partition_and_declaration():
    calc = build("A", side=10.0, mass=1.0, pos=(0.0, 0.0), vel=(1.0, 0.7))
    assert len(calc.partition.output) == 2
    assert len(calc.partition.input) == 0
    assert len(calc.partition.all_dofs) == 2
    assert calc.declaration.family == FREE_MOTION_BOUNDED
    assert calc.declaration.params["side"] == 10.0
    assert len(calc.declaration.declared_constraints) == 4


def test_build_b_partial_partition():
    calc = build("B_partial")
    assert calc.partition.output == ("x1", "y1")
    assert len(calc.partition.all_dofs) == 4
    assert calc.partition.hidden == ("x2", "y2")
    assert calc.declaration.family == FREE_MOTION_BOUNDED
    assert calc.declaration.declared_dof_count == 2


def test_build_e_spins_at_orbit_consistent_rate():
    calc = build("E", k=1.0, a=1.0, m_p=1.0, r=2.0)
    # Balance for a circular orbit: m_p w^2 r = k a^2 / r^2.
    expected = math.sqrt(1.0 * 1.0**2 / (1.0 * 2.0**3))
    assert calc.world.rotors[0].angular_velocity == pytest.approx(expected)
    assert calc.total_dof_count == 1
    assert calc.declaration.family == CENTRAL_FORCE


def test_every_catalog_partition_is_consistent():
    for cid in CATALOG_IDS:
        calc = build(cid)
        part = calc.partition
        dofs = set(part.all_dofs)
        assert set(part.output) <= dofs
        assert set(part.input) <= dofs
        assert set(part.hidden) == dofs - set(part.output)
        assert len(set(part.all_dofs)) == len(part.all_dofs)
        # Every dof resolves to a live world coordinate.
        for dof in part.all_dofs:
            assert isinstance(calc.coordinate(dof), float)


def test_b_full_and_b_partial_share_the_world():
    full = build("B_full")
    partial = build("B_partial")
    wf, wp = full.world, partial.world
    for _ in range(5000):
        wf = step(wf, 1e-3)
        wp = step(wp, 1e-3)
    # Hidden trajectories coincide bit for bit; only the partition differs.
    for df, dp in zip(wf.disks, wp.disks):
        assert (df.pos.x, df.pos.y, df.vel.x, df.vel.y) == \
            (dp.pos.x, dp.pos.y, dp.vel.x, dp.vel.y)
    assert full.partition.output != partial.partition.output


def test_d_observed_disk_matches_c_bitwise():
    wc = build("C").world
    wd = build("D").world
    pair_contacts = 0
    for _ in range(20_000):
        wc = step(wc, 1e-3)
        wd = step(wd, 1e-3)
        pair_contacts += sum(1 for e in wd.step_events if e.kind == "pair")
        assert (wd.disks[0].pos.x, wd.disks[0].pos.y) == \
            (wc.disks[0].pos.x, wc.disks[0].pos.y)
    assert pair_contacts == 0  # the partition wall keeps them apart


def test_d_hidden_disk_stays_in_its_compartment():
    calc = build("D")
    wall = calc.world.partition_wall
    w = calc.world
    for _ in range(20_000):
        w = step(w, 1e-3)
        assert w.disks[1].pos.x >= wall - 1e-9


def test_e_marker_traces_a_circle_at_constant_rate():
    calc = build("E")
    w = calc.world
    r = w.rotors[0].marker_radius
    w0 = w.rotors[0].angular_velocity
    for _ in range(5000):
        w = step(w, 1e-3)
        marker = w.rotors[0].marker_pos()
        assert marker.norm() == pytest.approx(r, rel=1e-12)
        assert w.rotors[0].angular_velocity == w0


def test_f_force_acts_directly_on_disk():
    # Controller rod mass is idealized to zero: impulse equals momentum gain.
    calc = build("F")
    w = calc.world
    applied = calc.input_forces(Vec2(0.5, 0.0))
    v0 = w.disks[0].vel.x
    for _ in range(2000):
        w = step(w, 1e-3, applied)
    assert w.disks[0].vel.x - v0 == pytest.approx(1.0, rel=1e-9)


def test_x_output_pattern():
    calc = build("X")
    w = calc.world
    ys = set()
    vxs = []
    prev = calc.coordinate("x", w)
    for _ in range(10_000):
        w = step(w, 1e-3)
        x = calc.coordinate("x", w)
        ys.add(calc.coordinate("y", w))
        vxs.append((x - prev) / 1e-3)
        prev = x
    assert ys == {0.0}
    near_speed = [abs(abs(v) - 1.0) < 1e-6 for v in vxs]
    assert sum(near_speed) >= len(vxs) - 3  # only switch steps break the rule
    assert min(vxs) < -0.99 and max(vxs) > 0.99


def test_x_declares_unbounded_inertial_motion():
    calc = build("X")
    assert calc.declaration.family == FREE_MOTION
    assert calc.declaration.declared_constraints == ()
    assert calc.declaration.declared_dof_count == 2
    assert calc.total_dof_count == 6


def test_declared_acceleration_free_motion():
    decl = Declaration(family=FREE_MOTION, params={"mass": 1.0},
                       declared_dof_count=2)
    a = declared_acceleration(decl, Vec2(3, 3), Vec2(0, 0), Vec2(0.5, 0), 1.0)
    assert a == Vec2(0.5, 0.0)


def test_declared_acceleration_harmonic():
    decl = Declaration(family=HARMONIC, params={"omega": 2.0},
                       declared_dof_count=2)
    a = declared_acceleration(decl, Vec2(1, 0), Vec2(0, 0), Vec2(0, 0), 1.0)
    assert a == Vec2(-4.0, 0.0)


def test_declared_acceleration_central_force():
    decl = Declaration(family=CENTRAL_FORCE,
                       params={"k": 1.0, "a": 1.0, "m_p": 1.0},
                       declared_dof_count=2)
    a = declared_acceleration(decl, Vec2(2, 0), Vec2(0, 0), Vec2(0, 0), 1.0)
    assert a.x == pytest.approx(-0.25)
    assert a.y == pytest.approx(0.0)


def test_build_rejects_bad_parameters():
    with pytest.raises(ValueError, match="side"):
        build("A", side=-1.0)
    with pytest.raises(ValueError, match="separation"):
        build("B_full", pos1=(0.0, 0.0), pos2=(0.5, 0.0))
    with pytest.raises(ValueError, match="unknown parameter"):
        build("A", bogus=1.0)
    with pytest.raises(ValueError, match="unknown calculator"):
        build("Z")


def test_partition_validation():
    with pytest.raises(ValueError, match="output"):
        DofPartition(all_dofs=("x", "y"), output=("x", "z"))
    with pytest.raises(ValueError, match="unique"):
        DofPartition(all_dofs=("x", "x"), output=("x",))


def test_declaration_validation():
    with pytest.raises(ValueError):
        Declaration(family="Magic")
    with pytest.raises(ValueError):
        Declaration(family=CENTRAL_FORCE, params={"k": 1.0, "a": 0.0, "m_p": 1.0})
    with pytest.raises(ValueError):
        Declaration(family=HARMONIC, params={"omega": 2.0}, declared_dof_count=0)
