import math

import pytest

from hypdyn.dilation import detect_brfp
from hypdyn.errors import ExactModeUnavailable, MonotonicityViolated
from hypdyn.horofunction import (
    HorofunctionHandle,
    busemann_trace,
    busemann_value,
    first_exit,
    horoball_contains,
    verify_julia,
)
from hypdyn.maps import MapHandle, cylinder_screw, disc_automorphism, sample_pairs
from hypdyn.models import BoundaryAnchor, BRFPRecord
from hypdyn.spaces import (
    FlatCylinder,
    HyperbolicPuncturedCylinder,
    L1Cylinder,
    LogLine,
    PoincareDisc,
    RealLine,
    SlitPlane,
    UpperHalfPlane,
)


def test_busemann_toward_infinity():
    plane = UpperHalfPlane()
    anchor = plane.ray_toward((0.0, 1.0), "inf")
    assert busemann_value(plane, anchor, (0.0, 1.0), (0.0, 4.0)) == pytest.approx(-math.log(4.0))


def test_truncated_limit_matches_closed_form():
    plane = UpperHalfPlane()
    anchor = plane.ray_toward((0.0, 1.0), "0")
    exact = busemann_value(plane, anchor, (0.0, 1.0), (1.0, 1.0))
    numeric = busemann_value(plane, anchor, (0.0, 1.0), (1.0, 1.0), prefer_exact=False)
    assert exact == pytest.approx(math.log(2.0))
    assert numeric == pytest.approx(exact, abs=1e-6)


def test_busemann_trace_rejects_a_ray_that_is_too_fast():
    line = RealLine()
    anchor = BoundaryAnchor(label="+inf", basepoint=(0.0,), ray=lambda t: (2.0 * t,))
    with pytest.raises(MonotonicityViolated):
        busemann_trace(line, anchor, (0.0,), (0.0,), 20.0)


def test_horofunction_drops_by_translation_length_along_orbit():
    disc = PoincareDisc()
    fmap = disc_automorphism(disc, a=0.5)
    origin = disc.from_user((0.0, 0.0))
    h = HorofunctionHandle.toward(disc, "1", origin)
    points = [origin]
    for _ in range(5):
        points.append(fmap(points[-1]))
    values = h.along(points)
    for a, b in zip(values, values[1:]):
        assert b - a == pytest.approx(-math.log(3.0), abs=1e-9)


def test_horoball_and_first_exit():
    plane = UpperHalfPlane()
    h = HorofunctionHandle.toward(plane, "inf", (0.0, 1.0))
    points = [(0.0, 100.0), (0.0, 10.0), (0.0, 1.0)]
    assert horoball_contains(h, -1.0, (0.0, 10.0))
    assert not horoball_contains(h, -1.0, (0.0, 1.0))
    assert first_exit(h, -1.0, points) == 2
    assert first_exit(h, 1.0, points) is None


def _sample_points(space, n):
    return [p for pair in sample_pairs(space, n // 2, seed=4) for p in pair]


def test_julia_exact_for_disc_automorphism():
    disc = PoincareDisc()
    fmap = disc_automorphism(disc, a=0.5)
    origin = disc.from_user((0.0, 0.0))
    record = detect_brfp(fmap, disc.ray_toward(origin, "1"))
    report = verify_julia(disc, fmap, record, origin, _sample_points(disc, 200), mode="exact")
    assert report.passed
    assert abs(report.max_violation) <= 1e-6
    assert report.delta == 0.0


def test_julia_exact_for_cylinder_isometry():
    cyl = L1Cylinder()
    fmap = cylinder_screw(cyl, shift=1.0, theta=math.pi / 2.0)
    record = detect_brfp(fmap, cyl.ray_toward((0.0, 0.0), "-inf"))
    report = verify_julia(cyl, fmap, record, (0.0, 0.0), _sample_points(cyl, 200), mode="exact")
    assert record.log_lambda == pytest.approx(1.0 - math.pi / 2.0, abs=1e-6)
    assert report.passed
    assert report.max_violation <= 1e-6


def test_julia_delta_budget_exceeds_exact():
    disc = PoincareDisc()
    fmap = disc_automorphism(disc, a=0.5)
    origin = disc.from_user((0.0, 0.0))
    record = detect_brfp(fmap, disc.ray_toward(origin, "-1"))
    samples = _sample_points(disc, 100)
    exact = verify_julia(disc, fmap, record, origin, samples, mode="exact")
    loose = verify_julia(disc, fmap, record, origin, samples, mode="delta", delta=0.5)
    assert loose.passed
    assert loose.error_budget >= exact.error_budget
    assert loose.error_budget == pytest.approx(exact.error_budget + 2.0)


def test_exact_mode_needs_equivalent_compactifications():
    cyl = L1Cylinder()
    shift = MapHandle(space=cyl, name="shift", apply=lambda p: (p[0] + 1.0, p[1]))
    record = BRFPRecord(
        anchor=cyl.ray_toward((0.0, 0.0), "-inf"),
        is_brfp=True,
        log_lambda=1.0,
        displacement_liminf=1.0,
        displacement_limsup=1.0,
    )
    with pytest.raises(ExactModeUnavailable):
        verify_julia(cyl, shift, record, (0.0, 0.0), [(0.0, 0.0)], mode="exact")


def test_julia_needs_samples():
    disc = PoincareDisc()
    fmap = disc_automorphism(disc)
    origin = disc.from_user((0.0, 0.0))
    record = detect_brfp(fmap, disc.ray_toward(origin, "1"))
    with pytest.raises(ValueError):
        verify_julia(disc, fmap, record, origin, [])


BUSEMANN_CASES = [
    (RealLine(), (0.0,), [(2.5,), (-3.0,)]),
    (LogLine(), (1.0,), [(0.5,), (3.0,)]),
    (UpperHalfPlane(), (0.0, 1.0), [(1.0, 1.0), (-2.0, 0.5), (0.5, 3.0)]),
    (
        PoincareDisc(),
        PoincareDisc.from_complex(0j),
        [PoincareDisc.from_complex(z) for z in (0.3 - 0.4j, -0.5 + 0.2j, 0.1 + 0.6j)],
    ),
    (SlitPlane(), (0.0, 1.0), [(1.0, 0.5), (-2.0, 1.0), (0.5, -3.0)]),
    (L1Cylinder(), (0.0, 0.0), [(1.0, 0.5), (-2.0, -2.5), (3.0, 3.0)]),
    (FlatCylinder(), (0.0, 0.0), [(1.0, 0.5), (-2.0, -2.5), (3.0, 3.0)]),
    (HyperbolicPuncturedCylinder(), (0.0, 1.0), [(1.0, 0.5), (-2.0, 2.0), (3.0, 0.2)]),
]


@pytest.mark.parametrize("space, p, points", BUSEMANN_CASES, ids=[case[0].kind for case in BUSEMANN_CASES])
def test_closed_form_matches_limit_for_every_label(space, p, points):
    for label in space.boundary_labels():
        anchor = space.ray_toward(p, label)
        for x in points:
            exact = busemann_value(space, anchor, p, x)
            numeric = busemann_value(space, anchor, p, x, prefer_exact=False)
            assert numeric == pytest.approx(exact, abs=1e-6), (label, x)


@pytest.mark.parametrize("space, p, points", BUSEMANN_CASES, ids=[case[0].kind for case in BUSEMANN_CASES])
def test_horofunctions_are_one_lipschitz(space, p, points):
    pairs = sample_pairs(space, 200, seed=11)
    for label in space.boundary_labels():
        h = HorofunctionHandle.toward(space, label, p)
        assert h(p) == pytest.approx(0.0, abs=1e-12)
        for x, y in pairs:
            d = space.distance(x, y)
            assert abs(h(x) - h(y)) <= d + 1e-9 * (1.0 + d)
