"""Backward orbits: construction, step profiles, the horosphere-stopping
synthesizer, the equivalence battery and the backward limit dichotomy."""

from __future__ import annotations

import logging
import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import root

from .dilation import detect_brfp, dilation_iterates
from .errors import (
    ClassificationUndetermined,
    ClustersDiverged,
    DomainError,
    NoRepellingCertificate,
    SolverFailed,
    VerificationFailure,
)
from .forward import calka_dichotomy, forward_orbit, orbit_trace, prefers_logarithmic, rate_from_displacement
from .horofunction import HorofunctionHandle
from .maps import MapHandle
from .metric import certify_discrete_quasigeodesic, geodesic_region_contains
from .models import (
    BackwardLimit,
    BackwardOrbit,
    BatteryReport,
    BRFPRecord,
    ClassificationResult,
    GeodesicRegion,
    LabSettings,
    Point,
    ProximityReport,
    StepProbeReport,
    StepProfile,
    SynthesisResult,
    SynthesizerState,
)
from .spaces import ModelSpace, wrap_angle

logger = logging.getLogger(__name__)

OrbitLike = Union[BackwardOrbit, Sequence[Point]]


def _points(orbit: OrbitLike) -> List[Point]:
    return list(orbit.points) if isinstance(orbit, BackwardOrbit) else list(orbit)


def backward_orbit_via_inverse(fmap: MapHandle, x0: Point, N: int) -> BackwardOrbit:
    """points[n] = f^{-n}(x0) through the declared inverse."""

    if N < 1:
        raise ValueError("N must be at least 1")
    points = [fmap.space.validate(x0)]
    residuals: List[float] = []
    terminated_at = None
    for n in range(1, N + 1):
        try:
            x = fmap.preimage(points[-1])
        except DomainError as exc:
            terminated_at = n - 1
            logger.warning("backward orbit of %s has no preimage after index %d: %s", fmap.name, n - 1, exc)
            break
        residuals.append(fmap.residual(x, points[-1]))
        points.append(x)
    return BackwardOrbit(points=points, construction="inverse", residuals=residuals, terminated_at=terminated_at)


def _residual_vector(fmap: MapHandle, target: np.ndarray):
    space = fmap.space
    periodic = space.periodic_axes

    def F(v: np.ndarray) -> np.ndarray:
        try:
            y = np.asarray(fmap(tuple(float(c) for c in v)))
        except DomainError:
            return np.full(space.dim, 1e6)
        diff = y - target
        for axis, wraps in enumerate(periodic):
            if wraps:
                diff[axis] = math.remainder(diff[axis], 2.0 * math.pi)
        return diff

    return F


def _solver_seeds(space: ModelSpace, points: List[Point], count: int, rng: np.random.Generator) -> List[Point]:
    target = np.asarray(points[-1])
    seeds = [points[-1]]
    if len(points) >= 2:
        seeds.append(tuple(2.0 * target - np.asarray(points[-2])))
    while len(seeds) < count:
        seeds.append(tuple(target + 0.1 * (1.0 + np.abs(target)) * rng.standard_normal(space.dim)))
    valid = []
    for s in seeds:
        try:
            valid.append(space.validate(s))
        except DomainError:
            continue
    return valid


def backward_orbit_via_solver(
    fmap: MapHandle,
    x0: Point,
    N: int,
    seeds_per_step: Optional[int] = None,
    settings: Optional[LabSettings] = None,
    seed: int = 0,
) -> BackwardOrbit:
    """Solve ``f(x_{n+1}) = x_n`` step by step from several seeds.

    Among preimages within ``residual_tol`` the one nearest the previous point
    wins, then the smaller residual. Distinct accepted preimages mark the step
    as ambiguous.
    """

    settings = settings or LabSettings()
    if N < 1:
        raise ValueError("N must be at least 1")
    space = fmap.space
    count = seeds_per_step or settings.solver_seeds
    points = [space.validate(x0)]
    residuals: List[float] = []
    ambiguous: List[int] = []
    for n in range(1, N + 1):
        target = points[-1]
        F = _residual_vector(fmap, np.asarray(target))
        rng = np.random.default_rng(seed + n)
        accepted: List[Tuple[float, float, Point]] = []
        best_residual = math.inf
        for start in _solver_seeds(space, points, count, rng):
            sol = root(F, np.asarray(start, dtype=float), method="hybr", options={"xtol": settings.solver_xtol})
            try:
                cand = space.validate(tuple(float(c) for c in sol.x))
                res = fmap.residual(cand, target)
            except DomainError:
                continue
            best_residual = min(best_residual, res)
            if res <= settings.residual_tol:
                accepted.append((space.distance(cand, target), res, cand))
        if not accepted:
            raise SolverFailed(
                f"no preimage of {target} under {fmap.name} at step {n}; best residual {best_residual:.3e}",
                {"step": n, "best_residual": best_residual},
            )
        accepted.sort(key=lambda item: (item[0], item[1]))
        _, res, chosen = accepted[0]
        if any(space.distance(chosen, other) > settings.cluster_tol for _, _, other in accepted[1:]):
            ambiguous.append(n)
        points.append(chosen)
        residuals.append(res)
    if ambiguous:
        logger.info("solver met %d ambiguous steps for %s", len(ambiguous), fmap.name)
    return BackwardOrbit(points=points, construction="solver", residuals=residuals, ambiguous_steps=ambiguous)


def step_profile(
    orbit: OrbitLike,
    space: ModelSpace,
    m_max: Optional[int] = None,
    settings: Optional[LabSettings] = None,
) -> StepProfile:
    """Tail averages ``sigma[m]`` of ``d(x_{n+m}, x_n)`` and the backward step rate.

    The rate is the Fekete value ``min_m sigma[m]/m`` unless ``sigma`` grows
    logarithmically in m, in which case it is zero.
    """

    settings = settings or LabSettings()
    pts = _points(orbit)
    m_max = m_max or settings.m_max
    if len(pts) < 4 * m_max:
        raise ValueError(f"orbit of length {len(pts)} is too short for m_max={m_max}")
    sigma: Dict[int, float] = {}
    spread: Dict[int, float] = {}
    for m in range(1, m_max + 1):
        d = np.array([space.distance(pts[n + m], pts[n]) for n in range(len(pts) - m)])
        drop = -np.diff(d)
        if np.any(drop > 1e-6 * (1.0 + d[1:])):
            k = int(np.argmax(drop))
            logger.warning("d(x_{n+%d}, x_n) decreases by %.3e at n=%d", m, drop[k], k + 1)
        tail = d[-max(d.size // 4, 1) :]
        sigma[m] = float(tail.mean())
        spread[m] = float(tail.max() - tail.min())
    if max(spread.values()) > settings.spread_tol:
        logger.warning("step profile not settled: spread up to %.3e", max(spread.values()))

    b_fekete = max(0.0, min(s / m for m, s in sigma.items()))
    logarithmic = prefers_logarithmic([sigma[m] for m in range(1, m_max + 1)])
    defect = 0.0
    for m in sigma:
        for k in sigma:
            if m + k in sigma:
                defect = max(defect, sigma[m + k] - sigma[m] - sigma[k])
    return StepProfile(
        sigma=sigma,
        spread=spread,
        m_max=m_max,
        b_fekete=b_fekete,
        b_estimate=0.0 if logarithmic else b_fekete,
        growth_model="logarithmic" if logarithmic else "linear",
        subadditivity_defect=defect,
    )


def backward_divergence_rate(orbit: OrbitLike, space: ModelSpace) -> float:
    """lim d(x_0, x_n)/n along a backward orbit."""

    pts = _points(orbit)
    return rate_from_displacement([space.distance(pts[0], x) for x in pts])


def orbit_proximity(space: ModelSpace, first: Sequence[Point], second: Sequence[Point]) -> ProximityReport:
    """d(x_n, y_n) for two orbits of a common length; ``growing`` flags a clear upward drift."""

    n = min(len(first), len(second))
    if n == 0:
        raise ValueError("orbits must be non-empty")
    dist = [space.distance(first[k], second[k]) for k in range(n)]
    growing = n >= 4 and dist[-1] - dist[n // 2] > 0.5
    return ProximityReport(distances=dist, sup=max(dist), growing=growing)


def _default_threshold(fmap: MapHandle, h: HorofunctionHandle, p: Point) -> float:
    probe = forward_orbit(fmap, p, 50)
    tail = probe.points[-max(len(probe.points) // 4, 1) :]
    return min(0.0, min(h(x) for x in tail) - 1.0)


def _stop_family(
    fmap: MapHandle,
    h: HorofunctionHandle,
    anchor_point: Point,
    m: int,
    c: float,
    depth: int,
    max_steps: int,
) -> Optional[Tuple[int, List[Point]]]:
    """Stop index n and the points ``f^{mn - nu}(x)``, nu = 0..depth, for one start point."""

    x = anchor_point
    if h(x) > c:
        return None
    window = deque([x], maxlen=depth + 1)
    n, steps = 0, 0
    while steps <= max_steps:
        chunk = []
        y = x
        for _ in range(m):
            y = fmap(y)
            chunk.append(y)
        steps += m
        if h(y) > c:
            return n, list(reversed(window))
        window.extend(chunk)
        x = y
        n += 1
    return None


def synthesize_backward_orbit(
    fmap: MapHandle,
    repelling: BRFPRecord,
    p: Optional[Point] = None,
    c: Optional[float] = None,
    t_grid: Optional[Sequence[float]] = None,
    m: Optional[int] = None,
    depth: Optional[int] = None,
    cluster_tol: Optional[float] = None,
    settings: Optional[LabSettings] = None,
) -> SynthesisResult:
    """Build a backward orbit converging to a repelling point by stopping forward orbits at a horosphere.

    Points far out on the ray to the repelling point are pushed forward by
    f^m until they leave the horoball ``{h <= c}``; the last ``depth`` points
    before the exit are read backwards as a candidate orbit. Candidates are
    grouped at the horosphere and the orbit of the best-supported group is
    returned. A group needs at least two members that stay within
    ``cluster_tol`` of each other at every depth; otherwise
    :class:`ClustersDiverged` is raised with the group and cluster sizes.
    On isometric screws the stop points of different start points only
    coincide when the grid spacing is a multiple of the screw period.
    """

    settings = settings or LabSettings()
    if repelling.classification != "repelling":
        raise NoRepellingCertificate(
            f"{repelling.label} is classified {repelling.classification}, not repelling"
        )
    space = fmap.space
    p = space.validate(p if p is not None else repelling.anchor.basepoint)
    anchor = space.ray_toward(p, repelling.label)
    h = HorofunctionHandle(space=space, anchor=anchor, basepoint=p, tail_tol=settings.tail_tol)
    depth = depth or settings.synth_depth
    cluster_tol = cluster_tol or settings.cluster_tol

    table = repelling.dilation_table or dilation_iterates(fmap, anchor, p, settings=settings)
    if m is None:
        m = next((e.n for e in table.entries if e.value > settings.tol_super), None)
        if m is None:
            raise NoRepellingCertificate(f"no iterate of {fmap.name} has positive dilation at {repelling.label}")
    if c is None:
        c = _default_threshold(fmap, h, p)
    if t_grid is None:
        per_step = max(space.distance(p, fmap(p)), repelling.displacement_limsup)
        t_grid = [t + depth * per_step + abs(c) for t in settings.synth_t_grid]
    t_grid = sorted(float(t) for t in t_grid)

    def run(t: float):
        return _stop_family(fmap, h, anchor(t), m, c, depth, settings.synth_max_steps)

    with ThreadPoolExecutor(max_workers=settings.threads) as pool:
        families = list(pool.map(run, t_grid))
    found = [(t, fam) for t, fam in zip(t_grid, families) if fam is not None]
    if not found:
        raise ClustersDiverged(
            f"no start point on the ray to {repelling.label} left the horoball h <= {c:g}",
            {"t_grid": t_grid, "c": c},
        )

    # group the stop points; ties between groups go to the one reaching furthest out
    groups: List[List[int]] = []
    for k, (_, (_, fam)) in enumerate(found):
        for group in groups:
            if space.distance(fam[0], found[group[0]][1][1][0]) <= cluster_tol:
                group.append(k)
                break
        else:
            groups.append([k])
    best = max(groups, key=lambda g: (len(g), max(found[k][0] for k in g)))
    if len(best) < 2:
        raise ClustersDiverged(
            f"no two start points on the ray to {repelling.label} stop within {cluster_tol:g} of each other",
            {"t_grid": t_grid, "group_sizes": [len(g) for g in groups], "m": m, "c": c},
        )
    rep = max(best, key=lambda k: found[k][0])
    rep_t, (rep_n, chain) = found[rep]
    if len(chain) < depth + 1:
        raise ClustersDiverged(
            f"start point t={rep_t:g} left the horoball after {m * rep_n} steps, fewer than depth {depth}",
            {"stop_index": rep_n, "m": m},
        )
    cluster_sizes = []
    for nu in range(depth + 1):
        cluster_sizes.append(
            sum(
                1
                for k in best
                if len(found[k][1][1]) > nu and space.distance(found[k][1][1][nu], chain[nu]) <= cluster_tol
            )
        )
    if min(cluster_sizes) < 2:
        shrunk = next(nu for nu, size in enumerate(cluster_sizes) if size < 2)
        raise ClustersDiverged(
            f"pulled-back families toward {repelling.label} separate at depth {shrunk}",
            {"cluster_sizes": cluster_sizes, "t_grid": t_grid, "m": m, "c": c},
        )

    residuals = [fmap.residual(chain[nu + 1], chain[nu]) for nu in range(depth)]
    orbit = BackwardOrbit(points=chain, construction="synthesized", residuals=residuals)
    profile = step_profile(orbit, space, min(settings.m_max, len(chain) // 4), settings)

    proximity = None
    if fmap.inverse is not None:
        level = h(chain[0])
        reference = backward_orbit_via_inverse(fmap, anchor(max(-level, 0.0)), depth)
        proximity = orbit_proximity(space, chain, reference.points).sup

    if abs(profile.b_estimate - table.stable) > 1e-2:
        logger.warning(
            "synthesized step rate %.4f differs from stable dilation %.4f at %s",
            profile.b_estimate,
            table.stable,
            repelling.label,
        )
    state = SynthesizerState(
        m=m,
        c=c,
        t_grid=t_grid,
        stop_indices=[fam[0] if fam is not None else -1 for fam in families],
        cluster_sizes=cluster_sizes,
        cluster_tol=cluster_tol,
        depth=depth,
        representative_t=rep_t,
    )
    return SynthesisResult(orbit=orbit, state=state, profile=profile, stable=table.stable, proximity_sup=proximity)


def _tail_in_region(space: ModelSpace, pts: Sequence[Point], label: str, radius: float) -> bool:
    anchor = space.ray_toward(pts[0], label)
    region = GeodesicRegion(ray=anchor, R=radius)
    reach = max(space.distance(pts[0], x) for x in pts)
    T = max(40.0, 1.5 * reach + radius)
    tail = pts[-max(len(pts) // 4, 1) :]
    return all(geodesic_region_contains(space, region, x, T)[0] for x in tail)


def equivalence_battery(
    orbit: OrbitLike,
    fmap: MapHandle,
    space: Optional[ModelSpace] = None,
    settings: Optional[LabSettings] = None,
    profile: Optional[StepProfile] = None,
) -> BatteryReport:
    """Evaluate seven finite-sample conditions that agree for escaping backward orbits with bounded step."""

    settings = settings or LabSettings()
    space = space or fmap.space
    pts = _points(orbit)
    profile = profile or step_profile(pts, space, min(settings.m_max, len(pts) // 4), settings)
    b = profile.b_estimate
    label = space.limit_label(pts)
    x0 = pts[0]
    record = detect_brfp(fmap, space.ray_toward(x0, label), settings=settings, with_table=True)
    h = HorofunctionHandle.toward(space, label, x0, tail_tol=settings.tail_tol)
    hs = np.array(h.along(pts))
    cert = certify_discrete_quasigeodesic(pts, space, B_hint=settings.quasi_b_max)

    half = len(hs) // 2
    quarter = max(len(hs) // 4, 1)
    slope = float(np.polyfit(np.arange(len(hs) - half, dtype=float), hs[half:], 1)[0])
    stable = record.stable if record.stable is not None else math.nan
    repelling = record.classification == "repelling"
    verdicts = {
        "positive_step_rate": b > settings.eps_b,
        "quasi_geodesic": cert.valid,
        "converges_in_region": record.is_brfp and _tail_in_region(space, pts, label, settings.region_radius),
        "horofunction_to_minus_infinity": record.is_brfp and slope <= -settings.eps_b,
        "horofunction_liminf": record.is_brfp
        and float(hs[-quarter:].min()) <= float(hs[: half + 1].min()) - settings.eps_b * len(hs) / 2.0,
        "repelling_limit": repelling,
        "rate_matches_stable_dilation": repelling and abs(b - stable) <= 1e-2,
    }
    unanimous = len(set(verdicts.values())) == 1
    if not unanimous:
        logger.warning("equivalence battery disagrees on %s orbit: %s", label, verdicts)
    return BatteryReport(
        verdicts=verdicts,
        values={"b": b, "stable": stable, "A": cert.A, "B": cert.B, "h_slope": slope},
        limit_label=label,
        unanimous=unanimous,
        alarm=not unanimous,
    )


def classify_backward_limit(
    orbit: OrbitLike,
    fmap: MapHandle,
    classification: ClassificationResult,
    profile: Optional[StepProfile] = None,
    settings: Optional[LabSettings] = None,
) -> BackwardLimit:
    """Where a backward orbit with bounded step goes, and whether that agrees with the map's class."""

    settings = settings or LabSettings()
    space = fmap.space
    pts = _points(orbit)
    verdict = calka_dichotomy(orbit_trace(space, pts, "backward", None), settings)
    if verdict == "Undetermined":
        raise ClassificationUndetermined("backward orbit neither stays bounded nor escapes")
    if verdict == "Bounded":
        if classification.map_class != "Elliptic":
            raise VerificationFailure(f"non-escaping backward orbit for a {classification.map_class} map")
        return BackwardLimit(kind="NonEscaping")

    profile = profile or step_profile(pts, space, min(settings.m_max, len(pts) // 4), settings)
    b = profile.b_estimate
    label = space.limit_label(pts)
    if b > settings.eps_b:
        record = detect_brfp(fmap, space.ray_toward(pts[0], label), settings=settings, with_table=True)
        consistent = record.classification == "repelling" and record.stable is not None and abs(b - record.stable) <= 1e-2
        return BackwardLimit(kind="RepellingBRFP", label=label, b_estimate=b, consistent=consistent)
    if classification.map_class == "Parabolic":
        return BackwardLimit(
            kind="ParabolicDW", label=label, b_estimate=b, consistent=label == classification.dw_label
        )
    if classification.map_class == "Elliptic" and classification.elliptic_kind == "weak":
        return BackwardLimit(kind="WeaklyEllipticUndetermined", label=label, b_estimate=b)
    raise VerificationFailure(
        f"escaping backward orbit with zero step rate for a {classification.map_class} map",
        {"b": b, "label": label, "elliptic_kind": classification.elliptic_kind},
    )


def unbounded_step_probe(
    fmap: MapHandle,
    orbit: OrbitLike,
    cells: int = 16,
    angular_samples: int = 2000,
    angle_axis: int = 0,
) -> StepProbeReport:
    """Step growth and angular spread of a backward orbit on a quotient space.

    Step growth and the tail labels are read from the orbit's own points.
    When the map has an inverse, the angular histogram does not use the
    orbit: it measures a separate walk that starts at the orbit's first
    angle and applies the inverse ``angular_samples`` times with every
    non-angular coordinate reset to 1. Without an inverse the orbit's own
    angles are binned.
    """

    space = fmap.space
    pts = _points(orbit)
    steps = [space.distance(a, b) for a, b in zip(pts, pts[1:])]
    growth = len(steps) >= 2 and float(np.polyfit(np.arange(len(steps), dtype=float), steps, 1)[0]) > 0.1

    angles = [pts[0][angle_axis]]
    if fmap.inverse is not None:
        x = pts[0]
        for _ in range(angular_samples):
            x = fmap.inverse(tuple(1.0 if axis != angle_axis else c for axis, c in enumerate(x)))
            angles.append(x[angle_axis])
    else:
        angles.extend(x[angle_axis] for x in pts[1:])
    wrapped = np.array([wrap_angle(a) for a in angles])
    counts, _ = np.histogram(wrapped, bins=cells, range=(-math.pi, math.pi))
    tail = pts[-max(len(pts) // 4, 1) :]
    labels = sorted({space.nearest_label(x) for x in tail})
    return StepProbeReport(
        steps=steps,
        step_growth=growth,
        cells=cells,
        cells_occupied=int(np.count_nonzero(counts)),
        angular_samples=len(angles) - 1,
        limit_labels=labels,
    )
