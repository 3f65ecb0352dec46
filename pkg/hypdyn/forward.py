"""Forward orbits: non-expansion checks, Calka dichotomy, divergence rate,
classification and limit-retract sampling."""

from __future__ import annotations

import itertools
import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ClassificationUndetermined, DomainError, NotElliptic, NotNonExpanding
from .maps import MapHandle, sample_pairs
from .models import (
    CalkaVerdict,
    ClassificationResult,
    EllipticKind,
    LabSettings,
    NonExpansionReport,
    OrbitTrace,
    Point,
    RetractSample,
)
from .spaces import ModelSpace

logger = logging.getLogger(__name__)

PairSampler = Callable[[int, int], Sequence[Tuple[Point, Point]]]


def check_nonexpanding(
    fmap: MapHandle,
    sampler: Optional[PairSampler] = None,
    n_pairs: int = 1000,
    seed: int = 0,
    tol: float = 1e-9,
    strict: bool = False,
) -> NonExpansionReport:
    """Largest sampled excess ``d(f(p), f(q)) - d(p, q)``.

    With ``strict`` a failing pair raises :class:`NotNonExpanding`.
    """

    if n_pairs < 1:
        raise ValueError("n_pairs must be at least 1")
    space = fmap.space
    pairs = sampler(n_pairs, seed) if sampler else sample_pairs(space, n_pairs, seed)
    worst, witness, passed = float("-inf"), None, True
    for p, q in pairs:
        d_pq = space.distance(p, q)
        excess = space.distance(fmap(p), fmap(q)) - d_pq
        if excess > worst:
            worst, witness = excess, (p, q)
        if excess > tol + 1e-12 * d_pq:
            passed = False
    report = NonExpansionReport(pairs=len(pairs), max_excess=worst, witness=witness, passed=passed)
    if not passed:
        logger.warning("%s expands distances: excess %.3e at %s", fmap.name, worst, witness)
        if strict:
            raise NotNonExpanding(
                f"{fmap.name} is not non-expanding: excess {worst:.3e} at {witness}",
                {"witness": witness, "excess": worst},
            )
    return report


def orbit_trace(space: ModelSpace, points: List[Point], direction: str, terminated_at: Optional[int]) -> OrbitTrace:
    steps = [space.distance(a, b) for a, b in zip(points, points[1:])]
    displacement = [space.distance(points[0], x) for x in points]
    return OrbitTrace(
        points=points,
        step_distances=steps,
        displacement=displacement,
        direction=direction,
        terminated_at=terminated_at,
    )


def forward_orbit(fmap: MapHandle, x0: Point, N: int) -> OrbitTrace:
    """points[n] = f^n(x0) for n <= N, cut short when the orbit leaves the domain."""

    if N < 1:
        raise ValueError("N must be at least 1")
    points = [fmap.space.validate(x0)]
    terminated_at = None
    for n in range(1, N + 1):
        try:
            points.append(fmap(points[-1]))
        except DomainError as exc:
            terminated_at = n - 1
            logger.warning("forward orbit of %s left the domain after index %d: %s", fmap.name, n - 1, exc)
            break
    return orbit_trace(fmap.space, points, "forward", terminated_at)


def _slope(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(np.polyfit(np.arange(values.size, dtype=float), values, 1)[0])


def calka_dichotomy(trace: OrbitTrace, settings: Optional[LabSettings] = None) -> CalkaVerdict:
    """Bounded, Escaping or Undetermined from the running-maximum displacement."""

    settings = settings or LabSettings()
    disp = np.asarray(trace.displacement, dtype=float)
    if disp.size - 1 < settings.calka_min_steps:
        raise ValueError(f"trace has {disp.size - 1} steps; at least {settings.calka_min_steps} needed")
    envelope = np.maximum.accumulate(disp)
    tail = envelope[-max(disp.size // 4, 2) :]
    slope = _slope(tail)
    top = float(envelope[-1])
    if slope >= settings.slope_escape:
        return "Escaping"
    if slope <= settings.slope_bounded and top < settings.r_bound:
        return "Bounded"
    if top > settings.r_escape:
        return "Escaping"
    return "Undetermined"


def _least_squares_rss(design: np.ndarray, y: np.ndarray) -> float:
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    r = y - design @ coef
    return float(r @ r)


def prefers_logarithmic(values: Sequence[float]) -> bool:
    """True when ``beta log(1+n) + gamma`` fits strictly better than ``alpha n + gamma``."""

    y = np.asarray(values, dtype=float)
    n = np.arange(1, y.size + 1, dtype=float)
    ones = np.ones_like(n)
    rss_lin = _least_squares_rss(np.column_stack([n, ones]), y)
    rss_log = _least_squares_rss(np.column_stack([np.log1p(n), ones]), y)
    return rss_log < rss_lin


def rate_from_displacement(displacement: Sequence[float]) -> float:
    """Rate of linear growth of ``D[n] = d(x0, f^n(x0))``.

    The Fekete estimate ``min_n D[n]/n`` approaches the limit from above
    with an O(1/n) offset, so it is refined by the least-squares slope of
    the last half of the sequence: the result is ``max(0, min(inf, slope))``.
    Logarithmic growth gives zero. ``displacement[0]`` is the distance of
    x0 to itself and is skipped.
    """

    d = np.asarray(displacement[1:], dtype=float)
    if d.size == 0:
        return 0.0
    if prefers_logarithmic(d):
        return 0.0
    n = np.arange(1, d.size + 1, dtype=float)
    fekete = float(np.min(d / n))
    half = d.size // 2
    if d.size - half < 2:
        return max(fekete, 0.0)
    slope = float(np.polyfit(n[half:], d[half:], 1)[0])
    return max(min(fekete, slope), 0.0)


def divergence_rate(
    fmap: MapHandle, x0: Point, N: int = 500, trace: Optional[OrbitTrace] = None
) -> float:
    """c(f) = lim d(x0, f^n(x0)) / n."""

    if N < 10:
        raise ValueError("divergence_rate needs N >= 10")
    trace = trace or forward_orbit(fmap, x0, N)
    return rate_from_displacement(trace.displacement)


def _max_pairwise(space: ModelSpace, points: Sequence[Point]) -> Tuple[float, List[float]]:
    ecc = [0.0] * len(points)
    for i, j in itertools.combinations(range(len(points)), 2):
        d = space.distance(points[i], points[j])
        ecc[i] = max(ecc[i], d)
        ecc[j] = max(ecc[j], d)
    return max(ecc, default=0.0), ecc


def _leaders(space: ModelSpace, points: Sequence[Point], radius: float) -> List[Point]:
    leaders: List[Point] = []
    for x in points:
        if all(space.distance(x, y) > radius for y in leaders):
            leaders.append(x)
    return leaders


def limit_retract_sample(
    fmap: MapHandle,
    seeds: Sequence[Point],
    N: Optional[int] = None,
    settings: Optional[LabSettings] = None,
    traces: Optional[Sequence[OrbitTrace]] = None,
) -> RetractSample:
    """Cluster the orbit tails of ``seeds`` into a sample of the limit retract."""

    settings = settings or LabSettings()
    space = fmap.space
    N = N or settings.classify_steps
    traces = traces or [forward_orbit(fmap, s, N) for s in seeds]
    verdicts = [calka_dichotomy(tr, settings) for tr in traces]
    if "Escaping" in verdicts:
        raise NotElliptic(f"{fmap.name} has escaping orbits; the limit retract is empty")

    tails: List[Point] = []
    for tr in traces:
        keep = max(int(len(tr.points) * settings.tail_fraction), 1)
        tails.extend(tr.points[-keep:])
    leaders = _leaders(space, tails, settings.cluster_tol)
    spread, ecc = _max_pairwise(space, leaders)
    seed_spread, _ = _max_pairwise(space, [tr.points[0] for tr in traces])

    bounded = seed_spread == 0.0 or spread < settings.edge_fraction * seed_spread
    touched: List[str] = []
    if not bounded and spread > 0.0:
        shell = [x for x, e in zip(leaders, ecc) if e >= settings.edge_fraction * spread]
        touched = sorted({space.nearest_label(x) for x in shell})
    logger.debug("retract sample: %d clusters, spread %.3f against seed spread %.3f", len(leaders), spread, seed_spread)
    return RetractSample(
        points=leaders,
        bounded=bounded,
        boundary_labels_touched=touched,
        spread=spread,
        seed_spread=seed_spread,
    )


def elliptic_kind(sample: RetractSample, settings: Optional[LabSettings] = None) -> EllipticKind:
    settings = settings or LabSettings()
    if sample.seed_spread == 0.0:
        return "undetermined"
    if sample.spread >= settings.edge_fraction * sample.seed_spread:
        return "weak"
    if sample.spread <= (1.0 - settings.edge_fraction) * sample.seed_spread:
        return "strong"
    return "undetermined"


def classify(
    fmap: MapHandle,
    seeds: Sequence[Point],
    N: Optional[int] = None,
    settings: Optional[LabSettings] = None,
) -> ClassificationResult:
    """Elliptic, Parabolic or Hyperbolic from forward orbits of ``seeds``."""

    if not seeds:
        raise ValueError("classify needs at least one seed")
    settings = settings or LabSettings()
    N = N or settings.classify_steps
    space = fmap.space
    traces = [forward_orbit(fmap, s, N) for s in seeds]
    verdicts = [calka_dichotomy(tr, settings) for tr in traces]
    diagnostics = {"calka": verdicts, "steps": N, "seeds": len(seeds)}

    if all(v == "Bounded" for v in verdicts):
        sample = limit_retract_sample(fmap, seeds, N, settings, traces=traces)
        kind = elliptic_kind(sample, settings)
        diagnostics.update(
            retract_spread=sample.spread,
            seed_spread=sample.seed_spread,
            labels_touched=sample.boundary_labels_touched,
        )
        logger.info("%s is elliptic (%s)", fmap.name, kind)
        return ClassificationResult(map_class="Elliptic", elliptic_kind=kind, c_estimate=0.0, diagnostics=diagnostics)

    if "Escaping" not in verdicts:
        raise ClassificationUndetermined(f"orbits of {fmap.name} neither stay bounded nor escape", diagnostics)
    if "Bounded" in verdicts:
        raise ClassificationUndetermined(f"seeds of {fmap.name} disagree on boundedness", diagnostics)

    escaping = [tr for tr, v in zip(traces, verdicts) if v == "Escaping"]
    rates = [rate_from_displacement(tr.displacement) for tr in escaping]
    labels = [space.limit_label(tr.points) for tr in escaping]
    rate_spread = max(rates) - min(rates)
    diagnostics.update(
        rates=rates,
        rate_spread=rate_spread,
        limit_labels=labels,
        logarithmic=prefers_logarithmic(escaping[0].displacement[1:]),
    )
    if len(set(labels)) > 1:
        logger.warning("escaping seeds of %s head to different boundary points: %s", fmap.name, labels)
        raise ClassificationUndetermined(f"escaping seeds of {fmap.name} disagree on the limit point {labels}", diagnostics)
    if rate_spread > settings.rate_agreement_tol:
        logger.warning("escaping seeds of %s disagree on the rate: %s", fmap.name, rates)
        raise ClassificationUndetermined(
            f"escaping seeds of {fmap.name} disagree on the divergence rate (spread {rate_spread:.3e})", diagnostics
        )
    c = max(float(np.median(rates)), 0.0)
    map_class = "Hyperbolic" if c > settings.eps_c else "Parabolic"
    logger.info("%s is %s with c=%.6f toward %s", fmap.name, map_class, c, labels[0])
    return ClassificationResult(map_class=map_class, c_estimate=c, dw_label=labels[0], diagnostics=diagnostics)
