import math

import pytest

from hypdyn.dilation import (
    classify_brfp,
    detect_brfp,
    dilation_along_ray,
    dilation_iterates,
    global_dilation_relations,
    scan_brfps,
)
from hypdyn.errors import ConfigurationError, TailNotConverged
from hypdyn.maps import MapHandle, cylinder_screw, disc_automorphism, identity
from hypdyn.models import ClassificationResult
from hypdyn.spaces import FlatCylinder, L1Cylinder, PoincareDisc, RealLine

LOG3 = math.log(3.0)


@pytest.mark.parametrize("theta", [0.0, 1.0, math.pi / 2.0])
def test_l1_screw_one_step_dilation(theta):
    cyl = L1Cylinder()
    fmap = cylinder_screw(cyl, shift=1.0, theta=theta)
    ray = dilation_along_ray(fmap, cyl.ray_toward((0.0, 0.0), "-inf"))
    assert ray.value == pytest.approx(1.0 - theta, abs=1e-6)
    assert ray.regime == "ray-estimate"


@pytest.mark.parametrize("theta, n_max", [(0.0, 64), (1.0, 64), (math.pi / 2.0, 64), (3.0, 128)])
def test_l1_screw_stable_dilations(theta, n_max):
    cyl = L1Cylinder()
    fmap = cylinder_screw(cyl, shift=1.0, theta=theta)
    back = dilation_iterates(fmap, cyl.ray_toward((0.0, 0.0), "-inf"), n_max=n_max, delta=0.0)
    ahead = dilation_iterates(fmap, cyl.ray_toward((0.0, 0.0), "+inf"), n_max=n_max, delta=0.0)
    assert back.stable == pytest.approx(1.0, abs=1e-3)
    assert ahead.stable == pytest.approx(-1.0, abs=1e-3)
    assert back.superadditivity_defect <= 1e-6
    assert back.horizon == n_max


def test_half_turn_second_iterate():
    cyl = L1Cylinder()
    fmap = cylinder_screw(cyl, shift=1.0, theta=math.pi)
    table = dilation_iterates(fmap, cyl.ray_toward((0.0, 0.0), "-inf"), n_max=4, delta=0.0)
    assert table.value(1) == pytest.approx(1.0 - math.pi, abs=1e-6)
    assert table.value(2) == pytest.approx(2.0, abs=1e-6)
    with pytest.raises(KeyError):
        table.value(5)


def test_flat_cylinder_dilation():
    flat = FlatCylinder()
    fmap = cylinder_screw(flat, shift=1.0, theta=math.pi)
    record = detect_brfp(fmap, flat.ray_toward((0.0, 0.0), "+inf"))
    assert record.is_brfp
    assert record.log_lambda == pytest.approx(-1.0, abs=1e-6)
    assert record.displacement_limsup == pytest.approx(math.sqrt(1.0 + math.pi ** 2), abs=1e-9)


def test_disc_automorphism_power_rule():
    disc = PoincareDisc()
    fmap = disc_automorphism(disc, a=0.5)
    origin = disc.from_user((0.0, 0.0))
    repelling = dilation_iterates(fmap, disc.ray_toward(origin, "-1"), n_max=16)
    attracting = dilation_iterates(fmap, disc.ray_toward(origin, "1"), n_max=16)
    for n in range(1, 17):
        assert repelling.value(n) == pytest.approx(n * LOG3, abs=1e-4)
        assert attracting.value(n) == pytest.approx(-n * LOG3, abs=1e-4)
    assert repelling.regime == "exact"
    assert classify_brfp(repelling) == "repelling"
    assert classify_brfp(attracting) == "attracting"


def test_identity_boundary_points_are_indifferent():
    disc = PoincareDisc()
    origin = disc.from_user((0.0, 0.0))
    record = detect_brfp(identity(disc), disc.ray_toward(origin, "1"), with_table=True, n_max=4)
    assert record.is_brfp
    assert record.log_lambda == 0.0
    assert record.classification == "indifferent"


def test_unbounded_dilation_is_not_a_brfp():
    line = RealLine()
    halve = MapHandle(space=line, name="halve", apply=lambda p: (0.5 * p[0],))
    anchor = line.ray_toward((0.0,), "+inf")
    with pytest.raises(TailNotConverged):
        dilation_along_ray(halve, anchor)
    record = detect_brfp(halve, anchor)
    assert not record.is_brfp
    assert record.log_lambda is None


def test_detect_brfp_brackets_the_displacement():
    disc = PoincareDisc()
    origin = disc.from_user((0.0, 0.0))
    record = detect_brfp(disc_automorphism(disc), disc.ray_toward(origin, "-1"))
    assert record.is_brfp
    assert record.bracketing_ok
    assert record.c_emp == pytest.approx(0.0, abs=1e-6)


def test_t_grid_must_reach_far_enough():
    disc = PoincareDisc()
    origin = disc.from_user((0.0, 0.0))
    with pytest.raises(ConfigurationError):
        dilation_along_ray(disc_automorphism(disc), disc.ray_toward(origin, "1"), t_grid=[0.0, 5.0, 10.0])
    with pytest.raises(ConfigurationError):
        dilation_iterates(disc_automorphism(disc), disc.ray_toward(origin, "1"), n_max=1)


def test_scan_defaults_to_declared_points():
    disc = PoincareDisc()
    origin = disc.from_user((0.0, 0.0))
    records = scan_brfps(disc_automorphism(disc), origin, n_max=4)
    assert [r.label for r in records] == ["1", "-1"]
    assert [r.classification for r in records] == ["attracting", "repelling"]


def test_global_relations_for_hyperbolic_automorphism():
    disc = PoincareDisc()
    fmap = disc_automorphism(disc)
    origin = disc.from_user((0.0, 0.0))
    records = scan_brfps(fmap, origin, n_max=8)
    good = ClassificationResult(map_class="Hyperbolic", c_estimate=LOG3, dw_label="1")
    report = global_dilation_relations(fmap, records, good)
    assert report.passed
    assert report.values["c"] == pytest.approx(LOG3)

    wrong = ClassificationResult(map_class="Hyperbolic", c_estimate=2.0, dw_label="1")
    report = global_dilation_relations(fmap, records, wrong)
    assert not report.passed
    assert "stable_dw_equals_minus_c" in report.failed_rules


def test_global_relations_for_elliptic_isometry():
    disc = PoincareDisc()
    origin = disc.from_user((0.0, 0.0))
    fmap = identity(disc)
    records = scan_brfps(fmap, origin, ["1", "-1"], n_max=4)
    result = ClassificationResult(map_class="Elliptic", elliptic_kind="undetermined", c_estimate=0.0)
    assert global_dilation_relations(fmap, records, result).passed
