"""Non-expanding self-maps of the model spaces and the map catalogue."""

from __future__ import annotations

import cmath
import logging
import math
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from .errors import ConfigurationError
from .models import Point
from .spaces import (
    FlatCylinder,
    HyperbolicPuncturedCylinder,
    L1Cylinder,
    LogLine,
    ModelSpace,
    PoincareDisc,
    RealLine,
    SlitPlane,
    UpperHalfPlane,
    wrap_angle,
)

logger = logging.getLogger(__name__)

PointMap = Callable[[Point], Point]


class MapHandle(BaseModel):
    """A self-map of ``space`` with optional exact inverse and declared boundary fixed points."""

    space: ModelSpace
    name: str
    params: Dict[str, float] = Field(default_factory=dict)
    apply: PointMap
    inverse: Optional[PointMap] = None
    declared_brfps: List[str] = Field(default_factory=list)
    isometry: bool = False

    class Config:
        allow_mutation = False
        arbitrary_types_allowed = True

    def __call__(self, x: Point) -> Point:
        return self.space.validate(self.apply(x))

    def preimage(self, x: Point) -> Point:
        if self.inverse is None:
            raise ConfigurationError(f"map {self.name} has no declared inverse")
        return self.space.validate(self.inverse(x))

    def iterate(self, n: int) -> "MapHandle":
        """The n-th iterate as a map of its own; ``iterate(0)`` is the identity."""

        if n < 0:
            raise ValueError("iterate needs n >= 0")
        if n == 1:
            return self

        def power(x: Point) -> Point:
            for _ in range(n):
                x = self(x)
            return x

        inverse_power = None
        if self.inverse is not None:

            def inverse_power(x: Point) -> Point:
                for _ in range(n):
                    x = self.preimage(x)
                return x

        return MapHandle(
            space=self.space,
            name=f"{self.name}^{n}",
            params=dict(self.params, power=n),
            apply=power,
            inverse=inverse_power,
            declared_brfps=list(self.declared_brfps),
            isometry=self.isometry,
        )

    def residual(self, candidate: Point, target: Point) -> float:
        return self.space.distance(self(candidate), target)

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.name, "params": dict(self.params), "space": self.space.describe()}


def _require(space: ModelSpace, *kinds: type) -> None:
    if not isinstance(space, kinds):
        names = ", ".join(k.kind for k in kinds)
        raise ConfigurationError(f"map needs a space of kind {names}, got {space.kind}")


def _through_disc(space: PoincareDisc, func: Callable[[complex], complex]) -> PointMap:
    def apply(p: Point) -> Point:
        return space.from_complex(func(space.to_complex(p)))

    return apply


def _rotation_about_i(phi: float) -> PointMap:
    cos_phi, sin_phi = math.cos(phi), math.sin(phi)

    def apply(p: Point) -> Point:
        w = complex(*p)
        z = (cos_phi * w + sin_phi) / (-sin_phi * w + cos_phi)
        return (z.real, z.imag)

    return apply


def identity(space: ModelSpace) -> MapHandle:
    return MapHandle(space=space, name="identity", apply=lambda x: x, inverse=lambda x: x, isometry=True)


def disc_automorphism(space: ModelSpace, a: float = 0.5) -> MapHandle:
    """Hyperbolic automorphism ``(z + a) / (1 + a z)`` with attracting point 1."""

    _require(space, PoincareDisc)
    if not -1.0 < a < 1.0:
        raise ConfigurationError("disc_automorphism needs -1 < a < 1")
    # in the Cayley chart this is w -> lam * w
    lam = (1.0 + a) / (1.0 - a)
    return MapHandle(
        space=space,
        name="disc_automorphism",
        params={"a": a},
        apply=lambda p: (lam * p[0], lam * p[1]),
        inverse=lambda p: (p[0] / lam, p[1] / lam),
        declared_brfps=["1", "-1"],
        isometry=True,
    )


def disc_rotation(space: ModelSpace, theta: float = 1.0) -> MapHandle:
    _require(space, PoincareDisc)
    return MapHandle(
        space=space,
        name="disc_rotation",
        params={"theta": theta},
        apply=_rotation_about_i(theta / 2.0),
        inverse=_rotation_about_i(-theta / 2.0),
        isometry=True,
    )


def disc_power(space: ModelSpace, k: int = 2) -> MapHandle:
    _require(space, PoincareDisc)
    if k < 1:
        raise ConfigurationError("disc_power needs k >= 1")
    return MapHandle(
        space=space,
        name="disc_power",
        params={"k": k},
        apply=_through_disc(space, lambda z: z ** k),
        declared_brfps=["1"],
        isometry=k == 1,
    )


def disc_contraction(space: ModelSpace, r: float = 0.5) -> MapHandle:
    _require(space, PoincareDisc)
    if not 0.0 < r <= 1.0:
        raise ConfigurationError("disc_contraction needs 0 < r <= 1")
    return MapHandle(
        space=space,
        name="disc_contraction",
        params={"r": r},
        apply=_through_disc(space, lambda z: r * z),
        isometry=r == 1.0,
    )


def _clamp(x: float) -> float:
    return max(x - 1.0, 0.0) - max(-x - 1.0, 0.0)


def halfplane_clamp(space: ModelSpace) -> MapHandle:
    """``x + iy -> [x-1]_+ - [-x-1]_+ + iy``; fixes the imaginary axis pointwise."""

    _require(space, UpperHalfPlane)
    return MapHandle(
        space=space,
        name="halfplane_clamp",
        apply=lambda p: (_clamp(p[0]), p[1]),
        # right inverse: f(inverse(x)) = x
        inverse=lambda p: (p[0] + 1.0 if p[0] >= 0.0 else p[0] - 1.0, p[1]),
        declared_brfps=["inf", "0"],
    )


def halfplane_sqrt_parabolic(space: ModelSpace) -> MapHandle:
    """``z -> sqrt(z^2 - 1)`` on the branch preserving the upper half-plane."""

    _require(space, UpperHalfPlane)

    def apply(p: Point) -> Point:
        z = complex(*p)
        w = 1j * cmath.sqrt(1.0 - z * z)
        return (w.real, w.imag)

    return MapHandle(space=space, name="halfplane_sqrt_parabolic", apply=apply, declared_brfps=["inf"])


def halfplane_scaling(space: ModelSpace, lam: float = 2.0) -> MapHandle:
    _require(space, UpperHalfPlane)
    if lam <= 0.0:
        raise ConfigurationError("halfplane_scaling needs lam > 0")
    return MapHandle(
        space=space,
        name="halfplane_scaling",
        params={"lam": lam},
        apply=lambda p: (lam * p[0], lam * p[1]),
        inverse=lambda p: (p[0] / lam, p[1] / lam),
        declared_brfps=["inf", "0"],
        isometry=True,
    )


def logline_shift(space: ModelSpace, s: float = 1.0) -> MapHandle:
    _require(space, LogLine)
    if s < 0.0:
        raise ConfigurationError("logline_shift needs s >= 0 to stay non-expanding")
    return MapHandle(
        space=space,
        name="logline_shift",
        params={"s": s},
        apply=lambda p: (p[0] + s,),
        inverse=lambda p: (p[0] - s,),
        declared_brfps=["+inf"],
        isometry=s == 0.0,
    )


def slit_translate(space: ModelSpace, s: float = 1.0) -> MapHandle:
    _require(space, SlitPlane)
    if s < 0.0:
        raise ConfigurationError("slit_translate needs s >= 0 to map the slit plane into itself")
    return MapHandle(
        space=space,
        name="slit_translate",
        params={"s": s},
        apply=lambda p: (p[0] + s, p[1]),
        inverse=lambda p: (p[0] - s, p[1]),
        declared_brfps=["inf"],
        isometry=s == 0.0,
    )


def real_translate(space: ModelSpace, s: float = 1.0) -> MapHandle:
    _require(space, RealLine)
    return MapHandle(
        space=space,
        name="real_translate",
        params={"s": s},
        apply=lambda p: (p[0] + s,),
        inverse=lambda p: (p[0] - s,),
        declared_brfps=["+inf", "-inf"],
        isometry=True,
    )


def cylinder_screw(space: ModelSpace, shift: float = 1.0, theta: float = math.pi / 2.0) -> MapHandle:
    """``(x, a) -> (x + shift, a + theta)`` on either cylinder."""

    _require(space, L1Cylinder, FlatCylinder)
    return MapHandle(
        space=space,
        name="cylinder_screw",
        params={"shift": shift, "theta": theta},
        apply=lambda p: (p[0] + shift, wrap_angle(p[1] + theta)),
        inverse=lambda p: (p[0] - shift, wrap_angle(p[1] - theta)),
        declared_brfps=["+inf", "-inf"],
        isometry=True,
    )


def punctured_dilation(space: ModelSpace, theta: float = 1.0, factor: float = 2.0) -> MapHandle:
    """``(a, t) -> (a + theta, factor * t)``; contracts the angular direction."""

    _require(space, HyperbolicPuncturedCylinder)
    if factor < 1.0:
        raise ConfigurationError("punctured_dilation needs factor >= 1")
    return MapHandle(
        space=space,
        name="punctured_dilation",
        params={"theta": theta, "factor": factor},
        apply=lambda p: (wrap_angle(p[0] + theta), factor * p[1]),
        inverse=lambda p: (wrap_angle(p[0] - theta), p[1] / factor),
        declared_brfps=["+inf"],
        isometry=factor == 1.0,
    )


MAP_KINDS: Dict[str, Callable[..., MapHandle]] = {
    "identity": identity,
    "disc_automorphism": disc_automorphism,
    "disc_rotation": disc_rotation,
    "disc_power": disc_power,
    "disc_contraction": disc_contraction,
    "halfplane_clamp": halfplane_clamp,
    "halfplane_sqrt_parabolic": halfplane_sqrt_parabolic,
    "halfplane_scaling": halfplane_scaling,
    "logline_shift": logline_shift,
    "slit_translate": slit_translate,
    "real_translate": real_translate,
    "cylinder_screw": cylinder_screw,
    "punctured_dilation": punctured_dilation,
}


def build_map(space: ModelSpace, kind: str, params: Optional[Dict[str, Any]] = None) -> MapHandle:
    if kind not in MAP_KINDS:
        raise ConfigurationError(f"unknown map kind {kind!r}; choose from {sorted(MAP_KINDS)}")
    try:
        handle = MAP_KINDS[kind](space, **(params or {}))
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for {kind}: {exc}") from exc
    logger.debug("built map %s on %s", handle.name, space.kind)
    return handle


def sample_pairs(space: ModelSpace, n_pairs: int, seed: int = 0) -> List[Tuple[Point, Point]]:
    """Seeded pairs of points from the space's sampling window."""

    rng = np.random.default_rng(seed)
    uniforms = rng.random((2 * n_pairs, space.dim))
    points = space.sample(uniforms)
    return list(zip(points[::2], points[1::2]))
