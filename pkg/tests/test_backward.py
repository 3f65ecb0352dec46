import cmath
import math

import pytest

from hypdyn.backward import (
    backward_divergence_rate,
    backward_orbit_via_inverse,
    backward_orbit_via_solver,
    classify_backward_limit,
    equivalence_battery,
    orbit_proximity,
    step_profile,
    synthesize_backward_orbit,
    unbounded_step_probe,
)
from hypdyn.dilation import detect_brfp
from hypdyn.errors import ClustersDiverged, NoRepellingCertificate, SolverFailed
from hypdyn.forward import classify
from hypdyn.horofunction import HorofunctionHandle, first_exit, horoball_contains
from hypdyn.maps import (
    MapHandle,
    cylinder_screw,
    disc_automorphism,
    halfplane_clamp,
    halfplane_sqrt_parabolic,
    identity,
    logline_shift,
    punctured_dilation,
    slit_translate,
)
from hypdyn.models import LabSettings
from hypdyn.spaces import HyperbolicPuncturedCylinder, L1Cylinder, LogLine, PoincareDisc, SlitPlane, UpperHalfPlane

LOG3 = math.log(3.0)
SQRT_I = (math.sqrt(0.5), math.sqrt(0.5))


@pytest.fixture(scope="module")
def sqrt_orbit():
    fmap = halfplane_sqrt_parabolic(UpperHalfPlane())
    return fmap, backward_orbit_via_solver(fmap, SQRT_I, 400)


@pytest.fixture(scope="module")
def disc_orbit():
    disc = PoincareDisc()
    fmap = disc_automorphism(disc, a=0.5)
    return fmap, backward_orbit_via_inverse(fmap, disc.from_user((0.0, 0.0)), 200)


def test_inverse_orbit_of_disc_automorphism(disc_orbit):
    fmap, orbit = disc_orbit
    disc = fmap.space
    assert orbit.construction == "inverse"
    assert orbit.terminated_at is None
    for n in range(10):
        x, y = disc.to_user(orbit.points[n])
        assert x == pytest.approx(-math.tanh(n * math.atanh(0.5)), abs=1e-12)
        assert y == pytest.approx(0.0, abs=1e-12)
    assert orbit.max_residual <= 1e-9


def test_logline_backward_orbit_leaves_the_domain():
    line = LogLine()
    orbit = backward_orbit_via_inverse(logline_shift(line, s=1.0), (10.0,), 20)
    assert orbit.terminated_at == 9
    assert len(orbit.points) == 10
    assert orbit.points[-1] == pytest.approx((1.0,))


def test_solver_reconstructs_square_root_orbit(sqrt_orbit):
    _, orbit = sqrt_orbit
    assert orbit.construction == "solver"
    assert len(orbit.points) == 401
    assert orbit.max_residual <= 1e-8
    assert orbit.ambiguous_steps == []
    for n in (0, 1, 10, 100, 400):
        expected = cmath.sqrt(n + 1j)
        assert abs(complex(*orbit.points[n]) - expected) <= 1e-8


def test_square_root_orbit_leaves_every_horoball_at_infinity(sqrt_orbit):
    fmap, orbit = sqrt_orbit
    h = HorofunctionHandle.toward(fmap.space, "inf", (0.0, 1.0))
    assert first_exit(h, 2.0, orbit.points) == 14
    assert not any(horoball_contains(h, 2.0, x) for x in orbit.points[14:])


def test_solver_agrees_with_inverse():
    disc = PoincareDisc()
    fmap = disc_automorphism(disc)
    origin = disc.from_user((0.0, 0.0))
    exact = backward_orbit_via_inverse(fmap, origin, 20)
    solved = backward_orbit_via_solver(fmap, origin, 20)
    for a, b in zip(exact.points, solved.points):
        assert disc.distance(a, b) <= 1e-6


def test_solver_on_identity_gives_constant_orbit():
    plane = UpperHalfPlane()
    orbit = backward_orbit_via_solver(identity(plane), (0.5, 2.0), 80)
    assert all(p == pytest.approx((0.5, 2.0)) for p in orbit.points)
    profile = step_profile(orbit, plane, 20)
    assert profile.b_estimate == 0.0
    assert max(profile.sigma.values()) <= 1e-9


def test_solver_fails_without_preimage():
    plane = UpperHalfPlane()
    lift = MapHandle(space=plane, name="lift", apply=lambda p: (p[0], p[1] + 1.0))
    with pytest.raises(SolverFailed):
        backward_orbit_via_solver(lift, (0.0, 0.5), 1)


def test_step_profile_of_disc_orbit(disc_orbit):
    fmap, orbit = disc_orbit
    profile = step_profile(orbit, fmap.space, 20)
    assert profile.growth_model == "linear"
    for m in (1, 5, 20):
        assert profile.sigma[m] == pytest.approx(m * LOG3, abs=1e-6)
    assert profile.b_estimate == pytest.approx(LOG3, abs=1e-6)
    assert backward_divergence_rate(orbit, fmap.space) == pytest.approx(LOG3, abs=1e-6)


def test_step_profile_of_square_root_orbit(sqrt_orbit):
    fmap, orbit = sqrt_orbit
    profile = step_profile(orbit, fmap.space, 20)
    assert profile.growth_model == "logarithmic"
    assert profile.b_estimate == 0.0
    for m in (1, 5, 20):
        assert profile.sigma[m] == pytest.approx(2.0 * math.asinh(m / 2.0), abs=0.05)
    assert backward_divergence_rate(orbit.points[:201], fmap.space) == 0.0


def test_step_profile_needs_a_long_orbit():
    with pytest.raises(ValueError):
        step_profile([(0.0, 1.0)] * 10, UpperHalfPlane(), 20)


def test_backward_limits(disc_orbit, sqrt_orbit):
    disc_map, orbit = disc_orbit
    result = classify(disc_map, [disc_map.space.from_user((0.0, 0.0))], N=200)
    limit = classify_backward_limit(orbit, disc_map, result)
    assert limit.kind == "RepellingBRFP"
    assert limit.label == "-1"
    assert limit.consistent
    assert limit.b_estimate == pytest.approx(LOG3, abs=1e-3)

    sqrt_map, orbit = sqrt_orbit
    result = classify(sqrt_map, [(0.0, 1.0)], N=500)
    limit = classify_backward_limit(orbit, sqrt_map, result)
    assert limit.kind == "ParabolicDW"
    assert limit.label == "inf"
    assert limit.consistent


def test_clamp_backward_limit_is_undetermined():
    plane = UpperHalfPlane()
    fmap = halfplane_clamp(plane)
    seeds = [(0.0, math.exp(-4.0)), (0.0, 1.0), (0.0, math.exp(4.0)), (3.0, 1.0), (-2.0, 0.5)]
    result = classify(fmap, seeds, N=500)
    orbit = backward_orbit_via_inverse(fmap, (0.0, 1.0), 200)
    assert orbit.points[5] == pytest.approx((5.0, 1.0))
    limit = classify_backward_limit(orbit, fmap, result)
    assert limit.kind == "WeaklyEllipticUndetermined"


def test_battery_accepts_disc_orbit(disc_orbit):
    fmap, orbit = disc_orbit
    report = equivalence_battery(orbit, fmap)
    assert report.unanimous
    assert all(report.verdicts.values())
    assert report.limit_label == "-1"
    assert report.values["b"] == pytest.approx(LOG3, abs=1e-3)


def test_battery_rejects_square_root_orbit(sqrt_orbit):
    fmap, orbit = sqrt_orbit
    report = equivalence_battery(orbit, fmap)
    assert report.unanimous
    assert not any(report.verdicts.values())
    assert report.limit_label == "inf"


def test_battery_rejects_clamp_orbit():
    fmap = halfplane_clamp(UpperHalfPlane())
    orbit = backward_orbit_via_inverse(fmap, (0.0, 1.0), 200)
    report = equivalence_battery(orbit, fmap)
    assert not any(report.verdicts.values())
    assert report.values["b"] <= 0.05


def test_synthesized_orbit_shadows_inverse_orbit():
    disc = PoincareDisc()
    fmap = disc_automorphism(disc, a=0.5)
    origin = disc.from_user((0.0, 0.0))
    record = detect_brfp(fmap, disc.ray_toward(origin, "-1"), with_table=True, n_max=8)
    result = synthesize_backward_orbit(fmap, record)
    assert result.orbit.construction == "synthesized"
    assert len(result.orbit.points) == 51
    assert result.orbit.max_residual <= 1e-8
    assert result.profile.b_estimate == pytest.approx(LOG3, abs=1e-2)
    assert result.proximity_sup is not None and result.proximity_sup <= 0.5
    assert result.state.m == 1


@pytest.fixture(scope="module")
def l1_screw_record():
    cyl = L1Cylinder()
    fmap = cylinder_screw(cyl, shift=1.0, theta=math.pi / 2.0)
    record = detect_brfp(fmap, cyl.ray_toward((0.0, 0.0), "-inf"), with_table=True, n_max=16)
    return fmap, record


def test_synthesized_orbit_on_l1_cylinder(l1_screw_record):
    fmap, record = l1_screw_record
    cyl = fmap.space
    assert record.classification == "repelling"
    # f^3 returns to the same angle after four chunks, a shift of 12 along the axis
    settings = LabSettings(synth_t_grid=[10.0, 22.0, 34.0, 46.0])
    result = synthesize_backward_orbit(fmap, record, settings=settings)
    pts = result.orbit.points
    assert result.state.m == 3
    assert result.state.cluster_sizes == [4] * 51
    assert result.profile.b_estimate == pytest.approx(1.0, abs=1e-2)
    assert cyl.distance(pts[0], pts[1]) >= 1.0 + math.pi / 2.0 - 1e-3
    assert result.stable == pytest.approx(1.0, abs=1e-3)


def test_synthesizer_reports_families_that_never_meet(l1_screw_record):
    fmap, record = l1_screw_record
    # spacing 5 never matches the screw period, so every stop point is on its own
    with pytest.raises(ClustersDiverged) as info:
        synthesize_backward_orbit(fmap, record)
    assert info.value.exit_code == 3
    assert info.value.details["group_sizes"] == [1] * 7


def test_synthesized_disc_families_agree_at_every_depth():
    disc = PoincareDisc()
    fmap = disc_automorphism(disc, a=0.5)
    origin = disc.from_user((0.0, 0.0))
    record = detect_brfp(fmap, disc.ray_toward(origin, "-1"), with_table=True, n_max=8)
    result = synthesize_backward_orbit(fmap, record)
    sizes = result.state.cluster_sizes
    assert len(sizes) == 51
    assert min(sizes) >= 2
    assert len(set(sizes)) == 1


def test_synthesizer_needs_a_repelling_point():
    disc = PoincareDisc()
    origin = disc.from_user((0.0, 0.0))
    record = detect_brfp(identity(disc), disc.ray_toward(origin, "1"), with_table=True, n_max=4)
    with pytest.raises(NoRepellingCertificate):
        synthesize_backward_orbit(identity(disc), record)


def test_slit_plane_companions_drift_apart():
    slit = SlitPlane()
    fmap = slit_translate(slit, s=1.0)
    upper = backward_orbit_via_inverse(fmap, (0.0, 1.0), 100)
    lower = backward_orbit_via_inverse(fmap, (0.0, -1.0), 100)
    report = orbit_proximity(slit, upper.points, lower.points)
    assert report.growing
    assert report.distances[-1] >= 10.0
    assert report.distances[-1] > report.distances[50]


def test_punctured_cylinder_probe():
    space = HyperbolicPuncturedCylinder()
    fmap = punctured_dilation(space, theta=1.0, factor=2.0)
    orbit = backward_orbit_via_inverse(fmap, (0.0, 1.0), 20)
    probe = unbounded_step_probe(fmap, orbit, cells=16, angular_samples=2000)
    assert probe.step_growth
    assert probe.steps[-1] >= 20.0
    assert probe.cells_occupied == 16
    assert probe.angular_samples == 2000


def test_punctured_cylinder_probe_without_rotation():
    space = HyperbolicPuncturedCylinder()
    fmap = punctured_dilation(space, theta=0.0, factor=2.0)
    orbit = backward_orbit_via_inverse(fmap, (0.0, 1.0), 40)
    probe = unbounded_step_probe(fmap, orbit, cells=16, angular_samples=200)
    assert not probe.step_growth
    assert probe.steps[0] == pytest.approx(math.log(2.0))
    assert probe.cells_occupied == 1
    assert probe.limit_labels == ["angle:0"]


def test_angular_histogram_follows_the_inverse_beyond_the_orbit():
    space = HyperbolicPuncturedCylinder()
    fmap = punctured_dilation(space, theta=1.0, factor=2.0)
    orbit = backward_orbit_via_inverse(fmap, (0.0, 1.0), 1)
    report = unbounded_step_probe(fmap, orbit, cells=16, angular_samples=500)
    assert len(report.steps) == 1
    assert report.angular_samples == 500
    assert report.cells_occupied == 16


@pytest.fixture(scope="module")
def shipped_backward_cases(disc_orbit, sqrt_orbit):
    disc_map, disc_points = disc_orbit
    sqrt_map, sqrt_points = sqrt_orbit
    clamp_map = halfplane_clamp(UpperHalfPlane())
    clamp_seeds = [(0.0, math.exp(-4.0)), (0.0, 1.0), (0.0, math.exp(4.0)), (3.0, 1.0), (-2.0, 0.5)]
    return [
        (disc_map, disc_points, classify(disc_map, [disc_map.space.from_user((0.0, 0.0))], N=200)),
        (sqrt_map, sqrt_points, classify(sqrt_map, [(0.0, 1.0)], N=500)),
        (clamp_map, backward_orbit_via_inverse(clamp_map, (0.0, 1.0), 200), classify(clamp_map, clamp_seeds, N=500)),
    ]


def test_step_rate_bounds_on_shipped_orbits(shipped_backward_cases):
    for fmap, orbit, result in shipped_backward_cases:
        report = equivalence_battery(orbit, fmap)
        b, stable = report.values["b"], report.values["stable"]
        assert b >= result.c_estimate - 1e-3
        assert -1e-3 <= stable <= b + 1e-3


def test_slow_backward_orbits_belong_to_parabolic_or_weakly_elliptic_maps(shipped_backward_cases):
    slow = 0
    for fmap, orbit, result in shipped_backward_cases:
        profile = step_profile(orbit, fmap.space, 20)
        if profile.b_estimate <= 0.05:
            slow += 1
            assert result.map_class == "Parabolic" or result.elliptic_kind == "weak"
        else:
            assert result.map_class == "Hyperbolic"
    assert slow == 2
