import cmath
import itertools
import math

import numpy as np
import pytest

from hypdyn.errors import ConfigurationError, DomainError, InvalidLabel
from hypdyn.spaces import (
    SPACE_KINDS,
    FlatCylinder,
    HyperbolicPuncturedCylinder,
    L1Cylinder,
    LogLine,
    PoincareDisc,
    RealLine,
    SlitPlane,
    UpperHalfPlane,
    build_space,
)


def _sample(space, n, seed=0):
    rng = np.random.default_rng(seed)
    return space.sample(rng.random((n, space.dim)))


def test_disc_distance_from_origin():
    disc = PoincareDisc()
    origin = disc.from_user((0.0, 0.0))
    half = disc.from_user((0.5, 0.0))
    assert disc.distance(origin, half) == pytest.approx(math.log(3.0), abs=1e-12)


def test_disc_user_coordinates_round_trip():
    disc = PoincareDisc()
    p = disc.from_user((0.3, -0.4))
    x, y = disc.to_user(p)
    assert x == pytest.approx(0.3, abs=1e-12)
    assert y == pytest.approx(-0.4, abs=1e-12)


def test_disc_rejects_points_outside():
    with pytest.raises(DomainError):
        PoincareDisc().from_user((0.8, 0.8))


def test_halfplane_midpoint_on_vertical_geodesic():
    plane = UpperHalfPlane()
    mid = plane.geodesic_point((0.0, 1.0), (0.0, 4.0), 0.5)
    assert mid[0] == pytest.approx(0.0, abs=1e-12)
    assert mid[1] == pytest.approx(2.0, abs=1e-12)


def test_halfplane_geodesic_point_splits_distance():
    plane = UpperHalfPlane()
    p, q = (0.0, 1.0), (2.0, 1.0)
    total = plane.distance(p, q)
    for s in (0.25, 0.5, 0.8):
        x = plane.geodesic_point(p, q, s)
        assert plane.distance(p, x) == pytest.approx(s * total, abs=1e-9)
        assert plane.distance(x, q) == pytest.approx((1.0 - s) * total, abs=1e-9)


def test_geodesic_point_needs_distinct_endpoints():
    with pytest.raises(ValueError):
        UpperHalfPlane().geodesic_point((0.0, 1.0), (0.0, 1.0), 0.5)


def test_busemann_at_infinity_closed_form():
    plane = UpperHalfPlane()
    anchor = plane.ray_toward((0.0, 1.0), "inf")
    assert plane.busemann_exact(anchor, (0.0, 1.0), (0.0, 4.0)) == pytest.approx(-math.log(4.0))


@pytest.mark.parametrize("kind", sorted(SPACE_KINDS))
def test_metric_axioms_on_samples(kind):
    space = build_space(kind)
    points = _sample(space, 20, seed=3)
    for x in points:
        assert space.distance(x, x) == pytest.approx(0.0, abs=1e-9)
    for x, y in itertools.combinations(points, 2):
        assert space.distance(x, y) == space.distance(y, x)
        assert space.distance(x, y) >= 0.0
    for x, y, z in itertools.combinations(points[:12], 3):
        slack = 1e-9 * (1.0 + space.distance(x, y) + space.distance(y, z))
        assert space.distance(x, z) <= space.distance(x, y) + space.distance(y, z) + slack


@pytest.mark.parametrize(
    "space, base, label",
    [
        (RealLine(), (0.0,), "+inf"),
        (LogLine(), (1.0,), "0"),
        (UpperHalfPlane(), (0.0, 1.0), "inf"),
        (UpperHalfPlane(), (1.0, 2.0), "0"),
        (PoincareDisc(), PoincareDisc.from_complex(0j), "-1"),
        (PoincareDisc(), PoincareDisc.from_complex(0j), "i"),
        (SlitPlane(), (0.0, 1.0), "inf"),
        (L1Cylinder(), (0.0, 0.5), "-inf"),
        (FlatCylinder(), (0.0, 0.5), "+inf"),
        (HyperbolicPuncturedCylinder(), (0.0, 1.0), "+inf"),
        (HyperbolicPuncturedCylinder(), (0.0, 1.0), "angle:0"),
    ],
)
def test_rays_have_unit_speed(space, base, label):
    ray = space.ray_toward(base, label)
    assert ray(0.0) == pytest.approx(base)
    for s, t in [(0.0, 1.0), (2.0, 7.5), (5.0, 20.0)]:
        assert space.distance(ray(s), ray(t)) == pytest.approx(t - s, abs=1e-8)


def test_disc_angle_labels_are_canonical():
    disc = PoincareDisc()
    assert disc.canonical_label("angle:0") == "1"
    assert disc.canonical_label(f"angle:{math.pi}") == "-1"
    assert disc.canonical_label(f"angle:{-math.pi / 2}") == "-i"
    assert disc.canonical_label("angle:1") == "angle:1"


def test_disc_nearest_label_of_points_near_one():
    disc = PoincareDisc()
    assert disc.nearest_label(disc.from_user((0.999999, 0.0))) == "1"
    assert disc.nearest_label(disc.from_user((-0.999999, 0.0))) == "-1"


def test_unknown_labels_are_rejected():
    with pytest.raises(InvalidLabel):
        RealLine().canonical_label("inf")
    with pytest.raises(InvalidLabel):
        PoincareDisc().canonical_label("north")
    with pytest.raises(InvalidLabel):
        SlitPlane().canonical_label("slit+:2")


def test_punctured_cylinder_angle_ray_must_start_on_meridian():
    space = HyperbolicPuncturedCylinder()
    with pytest.raises(InvalidLabel):
        space.ray_toward((0.5, 1.0), "angle:0")


def test_punctured_cylinder_uses_the_nearest_lift():
    space = HyperbolicPuncturedCylinder()
    p, q = (3.0, 0.1), (-3.0, 0.1)
    gap = 2.0 * math.pi - 6.0
    expected = UpperHalfPlane._hdist(0.0, 0.1, gap, 0.1)
    assert space.distance(p, q) == pytest.approx(expected, rel=1e-12)


def test_cylinder_distances():
    l1 = L1Cylinder()
    flat = FlatCylinder()
    p, q = (0.0, 0.0), (1.0, math.pi / 2.0)
    assert l1.distance(p, q) == pytest.approx(1.0 + math.pi / 2.0)
    assert flat.distance(p, q) == pytest.approx(math.hypot(1.0, math.pi / 2.0))


def test_logline_domain():
    with pytest.raises(DomainError):
        LogLine().validate((0.0,))


def test_slit_plane_domain():
    with pytest.raises(DomainError):
        SlitPlane().validate((-1.0, 0.0))
    SlitPlane().validate((1.0, 0.0))


def test_build_space_errors():
    with pytest.raises(ConfigurationError):
        build_space("Sphere")
    with pytest.raises(ConfigurationError):
        build_space("HyperbolicPuncturedCylinder", {"deck_truncation": 0})
    with pytest.raises(ConfigurationError):
        build_space("UpperHalfPlane", {"radius": 2.0})


def test_slit_plane_distance_is_halfplane_distance_of_square_roots():
    slit = SlitPlane()
    for p, q in itertools.combinations(_sample(slit, 40, seed=5), 2):
        w1 = 1j * cmath.sqrt(complex(*p))
        w2 = 1j * cmath.sqrt(complex(*q))
        expected = 2.0 * math.asinh(abs(w1 - w2) / (2.0 * math.sqrt(w1.imag * w2.imag)))
        assert slit.distance(p, q) == pytest.approx(expected, rel=1e-9, abs=1e-12)


def test_punctured_cylinder_distance_is_stable_when_more_deck_translates_are_tried():
    default = HyperbolicPuncturedCylinder()
    wider = HyperbolicPuncturedCylinder(deck_truncation=2 * default.deck_truncation)
    points = _sample(default, 60, seed=6) + [(0.0, 2.0 ** -n) for n in range(0, 21, 4)]
    for p, q in itertools.combinations(points, 2):
        assert wider.distance(p, q) == pytest.approx(default.distance(p, q), rel=1e-12, abs=1e-12)


@pytest.mark.integration
@pytest.mark.parametrize("kind", sorted(SPACE_KINDS))
def test_metric_axioms_on_many_samples(kind):
    space = build_space(kind)
    points = _sample(space, 10_000, seed=8)
    rng = np.random.default_rng(9)
    for i, j, k in rng.integers(0, len(points), size=(10_000, 3)):
        x, y, z = points[i], points[j], points[k]
        d_xy, d_yz, d_xz = space.distance(x, y), space.distance(y, z), space.distance(x, z)
        assert d_xy == space.distance(y, x)
        assert d_xy >= 0.0
        assert d_xz <= d_xy + d_yz + 1e-9 * (1.0 + d_xy + d_yz)
    for x in points[:1000]:
        assert space.distance(x, x) == pytest.approx(0.0, abs=1e-9)
