"""Busemann functions along rays, horoballs and Julia-type inequalities."""

from __future__ import annotations

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from .errors import BusemannNotAvailable, ConfigurationError, ExactModeUnavailable, MonotonicityViolated, TailNotConverged
from .maps import MapHandle
from .metric import estimate_delta
from .models import BoundaryAnchor, BRFPRecord, JuliaMode, JuliaReport, LabSettings, Point
from .spaces import ModelSpace

logger = logging.getLogger(__name__)


def busemann_trace(
    space: ModelSpace,
    anchor: BoundaryAnchor,
    p: Point,
    x: Point,
    T_max: float,
    n_grid: int = 81,
    monotone_tol: float = 1e-9,
) -> Tuple[np.ndarray, np.ndarray]:
    """Truncations ``g(t) = d(x, g(t)) - d(g(t), p)`` on ``[0, T_max]``.

    Each of ``d(y, g(t)) - t`` for y = x, p is non-increasing in t; this is
    checked on the grid before the difference is returned.
    """

    ts = np.linspace(0.0, T_max, n_grid)
    ray = [anchor(t) for t in ts]
    bx = np.array([space.distance(x, r) for r in ray]) - ts
    bp = np.array([space.distance(p, r) for r in ray]) - ts
    slack = monotone_tol + 1e-14 * ts[1:]
    for name, trace in (("x", bx), ("p", bp)):
        rise = np.diff(trace)
        if np.any(rise > slack):
            k = int(np.argmax(rise - slack))
            raise MonotonicityViolated(
                f"Busemann truncation for {name} increased by {rise[k]:.3e} at t={ts[k + 1]:g}",
                {"t": float(ts[k + 1]), "increase": float(rise[k])},
            )
    return ts, bx - bp


def busemann_value(
    space: ModelSpace,
    anchor: BoundaryAnchor,
    p: Point,
    x: Point,
    T_max: Optional[float] = None,
    tail_tol: float = 1e-6,
    prefer_exact: bool = True,
) -> float:
    """h_{anchor,p}(x), by closed form when the space has one."""

    p, x = space.validate(p), space.validate(x)
    if prefer_exact:
        try:
            return space.busemann_exact(anchor, p, x)
        except BusemannNotAvailable:
            logger.debug("no closed form at %s; using the truncated limit", anchor.label)
    horizon = T_max if T_max is not None else space.busemann_horizon
    ts, g = busemann_trace(space, anchor, p, x, horizon)
    half = int(np.searchsorted(ts, horizon / 2.0))
    gap = abs(g[-1] - g[half])
    if gap > tail_tol:
        raise TailNotConverged(
            f"Busemann tail gap {gap:.3e} exceeds {tail_tol:g} at T={horizon:g}",
            {"g_T": float(g[-1]), "g_half": float(g[half])},
        )
    return float(g[-1])


class HorofunctionHandle(BaseModel):
    """h_{a,p} for a fixed anchor a and normalisation point p."""

    space: ModelSpace
    anchor: BoundaryAnchor
    basepoint: Point
    T_max: Optional[float] = None
    tail_tol: float = 1e-6
    prefer_exact: bool = True

    class Config:
        allow_mutation = False
        arbitrary_types_allowed = True

    @classmethod
    def toward(cls, space: ModelSpace, label: str, p: Point, **kwargs) -> "HorofunctionHandle":
        p = space.validate(p)
        return cls(space=space, anchor=space.ray_toward(p, label), basepoint=p, **kwargs)

    def __call__(self, x: Point) -> float:
        return busemann_value(
            self.space, self.anchor, self.basepoint, x, self.T_max, self.tail_tol, self.prefer_exact
        )

    def along(self, points: Sequence[Point]) -> List[float]:
        return [self(x) for x in points]


def horoball_contains(handle: HorofunctionHandle, c: float, x: Point) -> bool:
    """x lies in the closed horoball {h <= c}."""

    return handle(x) <= c


def first_exit(handle: HorofunctionHandle, c: float, points: Sequence[Point]) -> Optional[int]:
    """Index of the first point outside {h <= c}, or None."""

    for k, x in enumerate(points):
        if handle(x) > c:
            return k
    return None


def verify_julia(
    space: ModelSpace,
    fmap: MapHandle,
    brfp: BRFPRecord,
    p: Point,
    sample_set: Sequence[Point],
    mode: JuliaMode = "delta",
    delta: Optional[float] = None,
    settings: Optional[LabSettings] = None,
    seed: int = 0,
) -> JuliaReport:
    """Check ``h_b(f(x)) <= h_a(x) + log lambda (+ 4 delta)`` on ``sample_set``."""

    settings = settings or LabSettings()
    if not sample_set:
        raise ValueError("verify_julia needs at least one sample point")
    if brfp.log_lambda is None:
        raise ConfigurationError(f"record at {brfp.label} carries no dilation estimate")
    if mode == "exact" and not (space.compactification_equivalent or fmap.isometry):
        raise ExactModeUnavailable(
            f"exact Julia needs equivalent compactifications or an isometry; {space.kind} has neither for {fmap.name}"
        )
    p = space.validate(p)
    a = space.ray_toward(p, brfp.label)
    # image of the anchor under f: the ray from f(p) toward the same label
    b = a if space.compactification_equivalent else space.ray_toward(fmap(p), brfp.label)
    h_a = HorofunctionHandle(space=space, anchor=a, basepoint=p, tail_tol=settings.tail_tol)
    h_b = HorofunctionHandle(space=space, anchor=b, basepoint=p, tail_tol=settings.tail_tol)

    log_lambda = brfp.log_lambda
    max_violation = max(h_b(fmap(x)) - h_a(x) - log_lambda for x in sample_set)

    if mode == "exact":
        delta_used = 0.0
    else:
        delta_used = delta if delta is not None else estimate_delta(space, n_samples=settings.delta_samples, seed=seed).implied_thin_delta
    budget = log_lambda + 4.0 * delta_used
    passed = max_violation <= 4.0 * delta_used + settings.julia_tol
    logger.info(
        "Julia %s at %s: max violation %.3e against slack %.3e (%s)",
        mode,
        brfp.label,
        max_violation,
        4.0 * delta_used,
        "pass" if passed else "fail",
    )
    return JuliaReport(
        samples=len(sample_set),
        max_violation=max_violation,
        error_budget=budget,
        passed=passed,
        mode=mode,
        delta=delta_used,
    )
