"""Space-agnostic metric primitives: Gromov products, four-point sampling,
quasi-geodesic certificates, geodesic regions and sampled Hausdorff distances."""

from __future__ import annotations

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from .models import BoundaryAnchor, DeltaEstimate, GeodesicRegion, Point, QuasiGeodesicCertificate
from .spaces import ModelSpace

logger = logging.getLogger(__name__)

ZERO_GUARD = 1e-12
MAX_REPORTED_VIOLATIONS = 100


def gromov_product(space: ModelSpace, x: Point, y: Point, w: Point) -> float:
    """(x|y)_w = (d(x,w) + d(y,w) - d(x,y)) / 2."""

    x, y, w = space.validate(x), space.validate(y), space.validate(w)
    value = 0.5 * (space.distance(x, w) + space.distance(y, w) - space.distance(x, y))
    if value < 0.0:
        if value < -ZERO_GUARD * (1.0 + space.distance(x, y)):
            logger.warning("negative Gromov product %.3e at %s, %s, %s", value, x, y, w)
        value = 0.0
    return value


def _four_point_defect(space: ModelSpace, quad: Sequence[Point]) -> float:
    w, x, y, z = quad
    sums = sorted(
        (
            space.distance(w, x) + space.distance(y, z),
            space.distance(w, y) + space.distance(x, z),
            space.distance(w, z) + space.distance(x, y),
        )
    )
    defect = 0.5 * (sums[2] - sums[1])
    if defect < ZERO_GUARD * (1.0 + sums[2]):
        return 0.0
    return defect


def estimate_delta(
    space: ModelSpace,
    sample_window: Optional[Sequence[Tuple[float, float]]] = None,
    n_samples: int = 2000,
    seed: int = 0,
) -> DeltaEstimate:
    """Largest four-point defect over seeded random quadruples.

    The result is a lower bound for the hyperbolicity constant on the window.
    Larger ``n_samples`` with the same seed extends the same sample stream.
    """

    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    rng = np.random.default_rng(seed)
    uniforms = rng.random((n_samples, 4, space.dim))
    points = space.sample(uniforms.reshape(-1, space.dim), sample_window)
    best, witness = 0.0, None
    for k in range(n_samples):
        quad = points[4 * k : 4 * k + 4]
        defect = _four_point_defect(space, quad)
        if defect > best:
            best, witness = defect, list(quad)
    logger.debug("four-point constant %.6f on %s from %d quadruples", best, space.kind, n_samples)
    return DeltaEstimate(
        four_point_C=best,
        implied_thin_delta=4.0 * best,
        samples=n_samples,
        seed=seed,
        witness=witness,
    )


def _pairwise(space: ModelSpace, seq: Sequence[Point]) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    n = len(seq)
    ii, jj = np.triu_indices(n, k=1)
    dist = np.array([space.distance(seq[i], seq[j]) for i, j in zip(ii, jj)])
    return ii, jj, (jj - ii).astype(float), dist


def certify_discrete_quasigeodesic(
    seq: Sequence[Point],
    space: ModelSpace,
    A_hint: Optional[float] = None,
    B_hint: Optional[float] = None,
    tol: float = 1e-9,
) -> QuasiGeodesicCertificate:
    """Fit or replay bounds ``|n-m|/A - B <= d(x_n, x_m) <= A|n-m| + B`` on a finite window."""

    if len(seq) < 2:
        raise ValueError("certification needs at least two points")
    ii, jj, gap, dist = _pairwise(space, seq)
    degenerate = bool(np.all(dist == 0.0))
    if degenerate:
        logger.warning("all %d points coincide; certificate is degenerate", len(seq))
        A = 1.0 if A_hint is None else A_hint
        B = 0.0 if B_hint is None else B_hint
    else:
        A = A_hint if A_hint is not None else max(1.0, float(np.max(dist / gap)))
        if B_hint is not None:
            B = B_hint
        else:
            B = max(0.0, float(np.max(dist - A * gap)), float(np.max(gap / A - dist)))
    if A < 1.0 or B < 0.0:
        raise ValueError(f"certificate needs A >= 1 and B >= 0, got A={A}, B={B}")

    bad = (dist > A * gap + B + tol) | (dist < gap / A - B - tol)
    bad_idx = np.flatnonzero(bad)
    violations = [(int(ii[k]), int(jj[k])) for k in bad_idx[:MAX_REPORTED_VIOLATIONS]]

    from_start = ii == 0
    slope = float(np.polyfit(jj[from_start], dist[from_start], 1)[0]) if len(seq) > 2 else float(dist[0])
    return QuasiGeodesicCertificate(
        A=A,
        B=B,
        window=(0, len(seq) - 1),
        violations=violations,
        violation_count=int(bad_idx.size),
        degenerate=degenerate,
        trend_slope=slope,
    )


def geodesic_region_contains(
    space: ModelSpace,
    region: GeodesicRegion,
    x: Point,
    T_max: float = 40.0,
    grid_points: int = 401,
) -> Tuple[bool, float]:
    """Whether ``x`` is within ``region.R`` of the ray trace on [0, T_max]."""

    if T_max <= 0:
        raise ValueError("T_max must be positive")
    x = space.validate(x)
    ts = np.linspace(0.0, T_max, grid_points)

    def to_ray(t: float) -> float:
        return space.distance(x, region.ray(t))

    coarse = np.array([to_ray(t) for t in ts])
    i = int(np.argmin(coarse))
    best = float(coarse[i])
    lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, len(ts) - 1)]
    if hi > lo:
        res = minimize_scalar(to_ray, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        best = min(best, float(res.fun))
    if i == len(ts) - 1:
        logger.warning("closest ray point sits at the grid edge T_max=%g; membership inconclusive", T_max)
    return best < region.R, best


def empirical_hausdorff(space: ModelSpace, trace_a: Sequence[Point], trace_b: Sequence[Point]) -> float:
    """Symmetric sampled Hausdorff distance between two finite traces."""

    if not trace_a or not trace_b:
        raise ValueError("both traces must be non-empty")
    dist = np.array([[space.distance(a, b) for b in trace_b] for a in trace_a])
    return float(max(dist.min(axis=1).max(), dist.min(axis=0).max()))


def sample_ray(anchor: BoundaryAnchor, T: float, n: int = 201) -> List[Point]:
    return [anchor(t) for t in np.linspace(0.0, T, n)]


def shadowing_profile(
    space: ModelSpace,
    first: BoundaryAnchor,
    second: BoundaryAnchor,
    horizons: Sequence[float] = (5.0, 10.0, 20.0),
    n: int = 201,
    growth_tol: float = 1.0,
) -> Tuple[List[float], bool]:
    """Hausdorff distances of two ray traces over growing horizons.

    The second value flags divergence: the distance kept growing by more
    than ``growth_tol`` between the last two horizons.
    """

    values = [
        empirical_hausdorff(space, sample_ray(first, T, n), sample_ray(second, T, n)) for T in horizons
    ]
    divergent = len(values) > 1 and values[-1] - values[-2] > growth_tol
    if divergent:
        logger.info("ray traces toward %s and %s separate: %s", first.label, second.label, values)
    return values, divergent
