"""Model spaces with closed-form distances, geodesics, rays and Busemann functions.

All hyperbolic models use curvature -1, so the disc distance is
``2 * artanh |(z - w) / (1 - conj(w) z)|``.  The Poincare disc and the slit
plane are evaluated through charts onto the upper half-plane, which keeps
points near the boundary representable in floating point.
"""

from __future__ import annotations

import cmath
import logging
import math
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Type

import numpy as np

from .errors import BusemannNotAvailable, ConfigurationError, DomainError, InvalidLabel
from .models import BoundaryAnchor, Point

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
LABEL_ANGLE_TOL = 1e-6
Ray = Callable[[float], Point]


def format_real(value: float) -> str:
    """Canonical text form of a real boundary coordinate."""

    value = round(value, 6) + 0.0
    return f"{value:g}"


def wrap_angle(angle: float) -> float:
    """Representative of ``angle`` in [-pi, pi]."""

    return math.remainder(angle, TWO_PI)


def angle_gap(a: float, b: float) -> float:
    """Arc-length distance on the unit circle, in [0, pi]."""

    return abs(math.remainder(a - b, TWO_PI))


def signed_turn(a: float, b: float) -> float:
    """Shortest signed turn from ``a`` to ``b``; a half turn counts as +pi."""

    turn = math.remainder(b - a, TWO_PI)
    if turn == -math.pi:
        turn = math.pi
    return turn


def _mobius(a: float, b: float, c: float, d: float, x: float, y: float) -> Tuple[float, float]:
    # (a z + b) / (c z + d) for z = x + iy and a d - b c = 1
    cxd = c * x + d
    cy = c * y
    den = cxd * cxd + cy * cy
    return ((a * x + b) * cxd + a * c * y * y) / den, y / den


def _endpoint_rotation(xi: Optional[float]) -> Tuple[float, float, float, float]:
    """Rotation about i sending the endpoint infinity to ``xi``.

    Built from ``(-xi, 1)`` rather than an angle so that ``xi = 0`` is exact.
    """

    if xi is None:
        return 1.0, 0.0, 0.0, 1.0
    r = math.hypot(xi, 1.0)
    cos_phi, sin_phi = -xi / r, 1.0 / r
    return cos_phi, sin_phi, -sin_phi, cos_phi


def _parse_float(label: str) -> float:
    try:
        value = float(label)
    except ValueError as exc:
        raise InvalidLabel(f"unknown boundary label {label!r}") from exc
    if not math.isfinite(value):
        raise InvalidLabel(f"unknown boundary label {label!r}")
    return value


def _direction_label(points: Sequence[Point], coord: int, plus: str, minus: str) -> str:
    last = points[-1][coord]
    ref = points[(3 * len(points)) // 4 if len(points) >= 4 else 0][coord]
    if last > ref:
        return plus
    if last < ref:
        return minus
    return plus if last >= 0 else minus


class ModelSpace:
    """Base class: distances are symmetric because pairs are ordered first."""

    kind = "ModelSpace"
    # default basepoint, in user coordinates
    origin: Tuple[float, ...] = (0.0, 0.0)
    dim = 2
    compactification_equivalent = True
    busemann_horizon = 40.0
    window: Tuple[Tuple[float, float], ...] = ((-1.0, 1.0), (-1.0, 1.0))
    log_axes: Tuple[bool, ...] = (False, False)
    periodic_axes: Tuple[bool, ...] = (False, False)

    def params(self) -> Dict[str, Any]:
        return {}

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, "params": self.params()}

    def __repr__(self) -> str:
        return f"{self.kind}({self.params()})"

    # domain -----------------------------------------------------------------
    def validate(self, p: Sequence[float]) -> Point:
        point = tuple(float(c) for c in p)
        if len(point) != self.dim:
            raise DomainError(f"{self.kind} points have {self.dim} coordinates, got {len(point)}")
        if not all(math.isfinite(c) for c in point):
            raise DomainError(f"non-finite coordinates {point} in {self.kind}")
        self._check_domain(point)
        return point

    def _check_domain(self, p: Point) -> None:
        return None

    def from_user(self, coords: Sequence[float]) -> Point:
        return self.validate(coords)

    def to_user(self, p: Point) -> Tuple[float, ...]:
        return tuple(p)

    # metric -----------------------------------------------------------------
    def distance(self, p: Point, q: Point) -> float:
        if q < p:
            p, q = q, p
        return self._distance(p, q)

    def _distance(self, p: Point, q: Point) -> float:
        raise NotImplementedError

    def geodesic_point(self, p: Point, q: Point, s: float) -> Point:
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"arc fraction {s} outside [0, 1]")
        if self.distance(p, q) == 0.0:
            raise ValueError("geodesic_point needs two distinct endpoints")
        if s == 0.0:
            return p
        if s == 1.0:
            return q
        return self._geodesic_point(p, q, s)

    def _geodesic_point(self, p: Point, q: Point, s: float) -> Point:
        raise NotImplementedError

    # boundary ---------------------------------------------------------------
    def boundary_labels(self) -> List[str]:
        raise NotImplementedError

    def canonical_label(self, label: str) -> str:
        if label not in self.boundary_labels():
            raise InvalidLabel(f"{self.kind} has no boundary label {label!r}")
        return label

    def ray_toward(self, basepoint: Sequence[float], label: str) -> BoundaryAnchor:
        base = self.validate(basepoint)
        canonical = self.canonical_label(label)
        return BoundaryAnchor(label=canonical, basepoint=base, ray=self._ray(base, canonical))

    def _ray(self, base: Point, label: str) -> Ray:
        raise NotImplementedError

    def busemann_exact(self, anchor: BoundaryAnchor, p: Point, x: Point) -> float:
        raise BusemannNotAvailable(f"{self.kind} has no closed form at {anchor.label}")

    def nearest_label(self, x: Point) -> str:
        raise NotImplementedError

    def limit_label(self, points: Sequence[Point]) -> str:
        if not points:
            raise ValueError("limit_label needs at least one point")
        return self.nearest_label(points[-1])

    # sampling ---------------------------------------------------------------
    def sample(self, uniforms: np.ndarray, window: Optional[Sequence[Tuple[float, float]]] = None) -> List[Point]:
        """Map rows of unit-cube samples into the sampling window."""

        box = tuple(window) if window is not None else self.window
        u = np.atleast_2d(np.asarray(uniforms, dtype=float))
        cols = []
        for axis, (lo, hi) in enumerate(box):
            if self.log_axes[axis]:
                cols.append(np.exp(math.log(lo) + u[:, axis] * (math.log(hi) - math.log(lo))))
            else:
                cols.append(lo + u[:, axis] * (hi - lo))
        coords = np.stack(cols, axis=1)
        return [self.validate(row) for row in coords]

    def default_t_grid(self) -> np.ndarray:
        return np.linspace(0.0, 40.0, 81)


class RealLine(ModelSpace):
    kind = "RealLine"
    origin = (0.0,)
    dim = 1
    window = ((-50.0, 50.0),)
    log_axes = (False,)
    periodic_axes = (False,)

    def _distance(self, p: Point, q: Point) -> float:
        return abs(q[0] - p[0])

    def _geodesic_point(self, p: Point, q: Point, s: float) -> Point:
        return (p[0] + s * (q[0] - p[0]),)

    def boundary_labels(self) -> List[str]:
        return ["+inf", "-inf"]

    def _ray(self, base: Point, label: str) -> Ray:
        sign = 1.0 if label == "+inf" else -1.0
        return lambda t: (base[0] + sign * t,)

    def busemann_exact(self, anchor: BoundaryAnchor, p: Point, x: Point) -> float:
        sign = 1.0 if anchor.label == "+inf" else -1.0
        return sign * (p[0] - x[0])

    def nearest_label(self, x: Point) -> str:
        return "+inf" if x[0] >= 0 else "-inf"

    def limit_label(self, points: Sequence[Point]) -> str:
        return _direction_label(points, 0, "+inf", "-inf")


class LogLine(ModelSpace):
    """Positive reals with d(x, y) = |ln(x / y)|."""

    kind = "LogLine"
    origin = (1.0,)
    dim = 1
    window = ((1e-2, 1e2),)
    log_axes = (True,)
    periodic_axes = (False,)

    def _check_domain(self, p: Point) -> None:
        if p[0] <= 0.0:
            raise DomainError(f"LogLine point {p[0]} is not positive")

    def _distance(self, p: Point, q: Point) -> float:
        return abs(math.log(q[0]) - math.log(p[0]))

    def _geodesic_point(self, p: Point, q: Point, s: float) -> Point:
        lp, lq = math.log(p[0]), math.log(q[0])
        return (math.exp(lp + s * (lq - lp)),)

    def boundary_labels(self) -> List[str]:
        return ["+inf", "0"]

    def _ray(self, base: Point, label: str) -> Ray:
        sign = 1.0 if label == "+inf" else -1.0
        return lambda t: (base[0] * math.exp(sign * t),)

    def busemann_exact(self, anchor: BoundaryAnchor, p: Point, x: Point) -> float:
        sign = 1.0 if anchor.label == "+inf" else -1.0
        return sign * (math.log(p[0]) - math.log(x[0]))

    def nearest_label(self, x: Point) -> str:
        return "+inf" if x[0] >= 1.0 else "0"

    def limit_label(self, points: Sequence[Point]) -> str:
        return _direction_label(points, 0, "+inf", "0")


class UpperHalfPlane(ModelSpace):
    """Upper half-plane with ds = |dz| / Im z."""

    kind = "UpperHalfPlane"
    origin = (0.0, 1.0)
    window = ((-5.0, 5.0), (0.05, 20.0))
    log_axes = (False, True)

    def _check_domain(self, p: Point) -> None:
        if p[1] <= 0.0:
            raise DomainError(f"height {p[1]} is not positive")

    @staticmethod
    def _hdist(x1: float, y1: float, x2: float, y2: float) -> float:
        return 2.0 * math.asinh(math.hypot(x2 - x1, y2 - y1) / (2.0 * math.sqrt(y1) * math.sqrt(y2)))

    def _distance(self, p: Point, q: Point) -> float:
        return self._hdist(p[0], p[1], q[0], q[1])

    def _geodesic_point(self, p: Point, q: Point, s: float) -> Point:
        x1, y1 = p
        a = (q[0] - x1) / y1
        b = q[1] / y1
        if a == 0.0:
            rot = _endpoint_rotation(None if b > 1.0 else 0.0)
        else:
            # the geodesic through i and a + ib is a circle centred at c on the real axis
            c = (a * a + b * b - 1.0) / (2.0 * a)
            r = math.hypot(c, 1.0)
            if (a > 0) == (c > 0):
                xi = c + math.copysign(r, a)
            else:
                xi = math.copysign(1.0 / (r + abs(c)), a)
            rot = _endpoint_rotation(xi)
        X, Y = _mobius(*rot, 0.0, math.exp(s * self._distance(p, q)))
        return (x1 + y1 * X, y1 * Y)

    def boundary_labels(self) -> List[str]:
        return ["inf", "0"]

    def canonical_label(self, label: str) -> str:
        if label == "inf":
            return label
        return format_real(_parse_float(label))

    def _chart_label(self, label: str) -> str:
        return label

    def _ray(self, base: Point, label: str) -> Ray:
        chart = self._chart_label(label)
        x1, y1 = base
        if chart == "inf":
            return lambda t: (x1, y1 * math.exp(t))
        cos_phi, sin_phi, _, _ = _endpoint_rotation((float(chart) - x1) / y1)

        def ray(t: float) -> Point:
            # rotated image of i e^t, numerator and denominator divided by e^t
            s = math.exp(-t)
            w = complex(sin_phi * s, cos_phi) / complex(cos_phi * s, -sin_phi)
            return (x1 + y1 * w.real, y1 * w.imag)

        return ray

    def busemann_exact(self, anchor: BoundaryAnchor, p: Point, x: Point) -> float:
        chart = self._chart_label(anchor.label)
        if chart == "inf":
            return math.log(p[1] / x[1])
        xi = float(chart)
        return math.log(((x[0] - xi) ** 2 + x[1] ** 2) / x[1]) - math.log(((p[0] - xi) ** 2 + p[1] ** 2) / p[1])

    @staticmethod
    def _disc_angle(p: Point) -> float:
        u, v = p
        return math.atan2(-2.0 * u, u * u + v * v - 1.0)

    def _chart_nearest(self, p: Point) -> str:
        phi = self._disc_angle(p)
        if abs(phi) < LABEL_ANGLE_TOL:
            return "inf"
        return format_real(-1.0 / math.tan(phi / 2.0))

    def _chart_limit(self, points: Sequence[Point]) -> str:
        last = complex(*points[-1])
        ref = complex(*points[(3 * len(points)) // 4 if len(points) >= 4 else 0])
        if abs(last) > 1.0 and abs(last) > 1.05 * abs(ref):
            return "inf"
        return self._chart_nearest(points[-1])

    def nearest_label(self, x: Point) -> str:
        return self._chart_nearest(x)

    def limit_label(self, points: Sequence[Point]) -> str:
        if not points:
            raise ValueError("limit_label needs at least one point")
        return self._chart_limit(points)


class PoincareDisc(UpperHalfPlane):
    """Unit disc, stored in Cayley-chart coordinates ``i (1 + z) / (1 - z)``.

    User-facing coordinates are ``(Re z, Im z)``; see :meth:`from_user`.
    """

    kind = "PoincareDisc"
    origin = (0.0, 0.0)
    window = ((0.0, 0.99), (0.0, 1.0))
    _NAMED = {"1": "inf", "-1": "0", "i": "-1", "-i": "1"}
    _NAMED_ANGLES = {"-1": math.pi, "i": math.pi / 2.0, "-i": -math.pi / 2.0}

    @staticmethod
    def from_complex(z: complex) -> Point:
        if abs(z) >= 1.0:
            raise DomainError(f"{z} is not inside the unit disc")
        a, b = z.real, z.imag
        den = (1.0 - a) ** 2 + b * b
        return (-2.0 * b / den, (1.0 - a * a - b * b) / den)

    @staticmethod
    def to_complex(p: Point) -> complex:
        u, v = p
        den = u * u + (v + 1.0) ** 2
        return complex((u * u + v * v - 1.0) / den, -2.0 * u / den)

    def from_user(self, coords: Sequence[float]) -> Point:
        if len(coords) != 2:
            raise DomainError("disc points are given as (Re z, Im z)")
        return self.validate(self.from_complex(complex(float(coords[0]), float(coords[1]))))

    def to_user(self, p: Point) -> Tuple[float, ...]:
        z = self.to_complex(p)
        return (z.real, z.imag)

    def boundary_labels(self) -> List[str]:
        return ["1", "-1", "i", "-i"]

    def canonical_label(self, label: str) -> str:
        if label in self._NAMED:
            return label
        if not label.startswith("angle:"):
            raise InvalidLabel(f"PoincareDisc has no boundary label {label!r}")
        return self._angle_label(wrap_angle(_parse_float(label[len("angle:"):])))

    def _angle_label(self, phi: float) -> str:
        if abs(phi) < LABEL_ANGLE_TOL:
            return "1"
        for name, angle in self._NAMED_ANGLES.items():
            if angle_gap(phi, angle) < LABEL_ANGLE_TOL:
                return name
        return f"angle:{format_real(phi)}"

    def _chart_label(self, label: str) -> str:
        if label in self._NAMED:
            return self._NAMED[label]
        phi = float(label[len("angle:"):])
        return format_real(-1.0 / math.tan(phi / 2.0))

    def _disc_label(self, chart: str) -> str:
        if chart == "inf":
            return "1"
        return self._angle_label(wrap_angle(2.0 * math.atan2(1.0, -float(chart))))

    def nearest_label(self, x: Point) -> str:
        return self._disc_label(self._chart_nearest(x))

    def limit_label(self, points: Sequence[Point]) -> str:
        if not points:
            raise ValueError("limit_label needs at least one point")
        return self._disc_label(self._chart_limit(points))

    def sample(self, uniforms: np.ndarray, window: Optional[Sequence[Tuple[float, float]]] = None) -> List[Point]:
        r_max = (window or self.window)[0][1]
        u = np.atleast_2d(np.asarray(uniforms, dtype=float))
        radii = r_max * np.sqrt(u[:, 0])
        angles = TWO_PI * u[:, 1]
        return [self.from_complex(complex(r * math.cos(a), r * math.sin(a))) for r, a in zip(radii, angles)]


class SlitPlane(ModelSpace):
    """C minus the closed negative real axis, pulled back by the principal square root."""

    kind = "SlitPlane"
    origin = (0.0, 1.0)
    window = ((-5.0, 5.0), (-5.0, 5.0))
    log_axes = (False, False)

    def __init__(self) -> None:
        self._plane = UpperHalfPlane()

    def _check_domain(self, p: Point) -> None:
        if p[1] == 0.0 and p[0] <= 0.0:
            raise DomainError(f"{p} lies on the slit")

    @staticmethod
    def chart(p: Point) -> Point:
        w = cmath.sqrt(complex(p[0], p[1]))
        return (-w.imag, w.real)

    @staticmethod
    def unchart(q: Point) -> Point:
        w = complex(q[1], -q[0])
        z = w * w
        return (z.real, z.imag)

    def _distance(self, p: Point, q: Point) -> float:
        return self._plane.distance(self.chart(p), self.chart(q))

    def _geodesic_point(self, p: Point, q: Point, s: float) -> Point:
        return self.unchart(self._plane.geodesic_point(self.chart(p), self.chart(q), s))

    def boundary_labels(self) -> List[str]:
        return ["inf", "0"]

    def canonical_label(self, label: str) -> str:
        if label in ("inf", "0"):
            return label
        if label.startswith("slit+:") or label.startswith("slit-:"):
            value = _parse_float(label[len("slit+:"):])
            if value >= 0:
                raise InvalidLabel(f"slit labels sit on the negative axis, got {label!r}")
            return f"{label[:5]}:{format_real(value)}"
        raise InvalidLabel(f"SlitPlane has no boundary label {label!r}")

    def _chart_label(self, label: str) -> str:
        if label in ("inf", "0"):
            return label
        depth = math.sqrt(-float(label[len("slit+:"):]))
        return format_real(-depth if label.startswith("slit+") else depth)

    def _slit_label(self, chart: str) -> str:
        if chart in ("inf", "0"):
            return chart
        xi = float(chart)
        return f"slit{'+' if xi < 0 else '-'}:{format_real(-xi * xi)}"

    def _ray(self, base: Point, label: str) -> Ray:
        chart_ray = self._plane._ray(self.chart(base), self._chart_label(label))
        return lambda t: self.unchart(chart_ray(t))

    def busemann_exact(self, anchor: BoundaryAnchor, p: Point, x: Point) -> float:
        chart_anchor = BoundaryAnchor(
            label=self._chart_label(anchor.label), basepoint=self.chart(anchor.basepoint), ray=anchor.ray
        )
        return self._plane.busemann_exact(chart_anchor, self.chart(p), self.chart(x))

    def nearest_label(self, x: Point) -> str:
        return self._slit_label(self._plane.nearest_label(self.chart(x)))

    def limit_label(self, points: Sequence[Point]) -> str:
        return self._slit_label(self._plane.limit_label([self.chart(p) for p in points]))


class L1Cylinder(ModelSpace):
    """R x S^1 with the sum metric |dx| + arc distance."""

    kind = "L1Cylinder"
    compactification_equivalent = False
    window = ((-10.0, 10.0), (-math.pi, math.pi))
    periodic_axes = (False, True)

    def _distance(self, p: Point, q: Point) -> float:
        return abs(q[0] - p[0]) + angle_gap(p[1], q[1])

    def _geodesic_point(self, p: Point, q: Point, s: float) -> Point:
        return (p[0] + s * (q[0] - p[0]), wrap_angle(p[1] + s * signed_turn(p[1], q[1])))

    def boundary_labels(self) -> List[str]:
        return ["+inf", "-inf"]

    def _ray(self, base: Point, label: str) -> Ray:
        sign = 1.0 if label == "+inf" else -1.0
        return lambda t: (base[0] + sign * t, base[1])

    def busemann_exact(self, anchor: BoundaryAnchor, p: Point, x: Point) -> float:
        sign = 1.0 if anchor.label == "+inf" else -1.0
        theta_b = anchor.basepoint[1]
        return sign * (p[0] - x[0]) + angle_gap(x[1], theta_b) - angle_gap(p[1], theta_b)

    def nearest_label(self, x: Point) -> str:
        return "+inf" if x[0] >= 0 else "-inf"

    def limit_label(self, points: Sequence[Point]) -> str:
        return _direction_label(points, 0, "+inf", "-inf")


class FlatCylinder(L1Cylinder):
    """R x S^1 with the flat product metric."""

    kind = "FlatCylinder"
    compactification_equivalent = True
    busemann_horizon = 1e8

    def _distance(self, p: Point, q: Point) -> float:
        return math.hypot(q[0] - p[0], angle_gap(p[1], q[1]))

    def busemann_exact(self, anchor: BoundaryAnchor, p: Point, x: Point) -> float:
        sign = 1.0 if anchor.label == "+inf" else -1.0
        return sign * (p[0] - x[0])

    def default_t_grid(self) -> np.ndarray:
        # g(t) approaches its limit like 1/t here
        return np.concatenate(([0.0], np.geomspace(1.0, 1e8, 64)))


class HyperbolicPuncturedCylinder(ModelSpace):
    """(R x (0, inf), (da^2 + dt^2) / t^2) modulo a -> a + 2 pi.

    The end t -> inf is a cusp (label ``+inf``); the end t -> 0 is a circle
    of boundary points ``angle:a``.
    """

    kind = "HyperbolicPuncturedCylinder"
    origin = (0.0, 1.0)
    window = ((-math.pi, math.pi), (0.05, 5.0))
    log_axes = (False, True)
    periodic_axes = (True, False)

    def __init__(self, deck_truncation: int = 8) -> None:
        if deck_truncation < 1:
            raise ConfigurationError("deck_truncation must be at least 1")
        self.deck_truncation = int(deck_truncation)

    def params(self) -> Dict[str, Any]:
        return {"deck_truncation": self.deck_truncation}

    def _check_domain(self, p: Point) -> None:
        if p[1] <= 0.0:
            raise DomainError(f"height {p[1]} is not positive")

    def _deck_order(self) -> List[int]:
        order = [0]
        for k in range(1, self.deck_truncation + 1):
            order.extend((k, -k))
        return order

    def _lift(self, p: Point, q: Point) -> Tuple[float, float]:
        """Offset of the lift of q nearest to p, ties to smallest |k| then k >= 0."""

        base = math.remainder(q[0] - p[0], TWO_PI)
        best_offset, best = base, math.inf
        for k in self._deck_order():
            offset = base + TWO_PI * k
            value = UpperHalfPlane._hdist(p[0], p[1], p[0] + offset, q[1])
            if value < best:
                best_offset, best = offset, value
        return best_offset, best

    def _distance(self, p: Point, q: Point) -> float:
        return self._lift(p, q)[1]

    def _geodesic_point(self, p: Point, q: Point, s: float) -> Point:
        offset, _ = self._lift(p, q)
        x, y = UpperHalfPlane()._geodesic_point(p, (p[0] + offset, q[1]), s)
        return (wrap_angle(x), y)

    def boundary_labels(self) -> List[str]:
        return ["+inf"]

    def canonical_label(self, label: str) -> str:
        if label == "+inf":
            return label
        if label.startswith("angle:"):
            return f"angle:{format_real(wrap_angle(_parse_float(label[len('angle:'):])))}"
        raise InvalidLabel(f"{self.kind} has no boundary label {label!r}")

    def _ray(self, base: Point, label: str) -> Ray:
        if label == "+inf":
            return lambda t: (base[0], base[1] * math.exp(t))
        phi = float(label[len("angle:"):])
        if angle_gap(base[0], phi) > 1e-9:
            raise InvalidLabel(f"rays toward {label} start on the meridian a = {phi}, not at a = {base[0]}")
        return lambda t: (base[0], base[1] * math.exp(-t))

    def _horo_term(self, x: Point, phi: float) -> float:
        base = math.remainder(x[0] - phi, TWO_PI)
        return min(
            math.log(((base + TWO_PI * k) ** 2 + x[1] ** 2) / x[1]) for k in self._deck_order()
        )

    def busemann_exact(self, anchor: BoundaryAnchor, p: Point, x: Point) -> float:
        if anchor.label == "+inf":
            return math.log(p[1] / x[1])
        phi = float(anchor.label[len("angle:"):])
        return self._horo_term(x, phi) - self._horo_term(p, phi)

    def nearest_label(self, x: Point) -> str:
        if x[1] >= 1.0:
            return "+inf"
        return f"angle:{format_real(wrap_angle(x[0]))}"


SPACE_KINDS: Dict[str, Type[ModelSpace]] = {
    cls.kind: cls
    for cls in (
        RealLine,
        LogLine,
        UpperHalfPlane,
        PoincareDisc,
        SlitPlane,
        L1Cylinder,
        FlatCylinder,
        HyperbolicPuncturedCylinder,
    )
}


def build_space(kind: str, params: Optional[Dict[str, Any]] = None) -> ModelSpace:
    """Construct a space from its scenario description."""

    if kind not in SPACE_KINDS:
        raise ConfigurationError(f"unknown space kind {kind!r}; choose from {sorted(SPACE_KINDS)}")
    try:
        return SPACE_KINDS[kind](**(params or {}))
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for {kind}: {exc}") from exc
