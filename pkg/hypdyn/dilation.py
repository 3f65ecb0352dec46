"""Dilations at boundary points, iterate tables and BRFP bookkeeping."""

from __future__ import annotations

import logging
from typing import List, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, MonotonicityViolated, NumericalError, TailNotConverged
from .maps import MapHandle
from .metric import estimate_delta
from .models import (
    BoundaryAnchor,
    BRFPClass,
    BRFPRecord,
    ClassificationResult,
    DilationEntry,
    DilationTable,
    LabSettings,
    Point,
    RayDilation,
    RelationReport,
)

logger = logging.getLogger(__name__)


def _grid(fmap: MapHandle, t_grid: Optional[Sequence[float]]) -> np.ndarray:
    ts = np.asarray(t_grid if t_grid is not None else fmap.space.default_t_grid(), dtype=float)
    if ts.size < 2 or np.any(np.diff(ts) <= 0):
        raise ConfigurationError("t_grid must be strictly increasing with at least two points")
    if ts[-1] < 20.0:
        raise ConfigurationError(f"t_grid must reach at least 20, got {ts[-1]:g}")
    return ts


def _rebase(fmap: MapHandle, anchor: BoundaryAnchor, p: Optional[Point]) -> BoundaryAnchor:
    if p is None:
        return anchor
    p = fmap.space.validate(p)
    if p == anchor.basepoint:
        return anchor
    return fmap.space.ray_toward(p, anchor.label)


def _tail_gap(ts: np.ndarray, g: np.ndarray) -> float:
    half = int(np.argmin(np.abs(ts - ts[-1] / 2.0)))
    return float(abs(g[-1] - g[half]))


def dilation_along_ray(
    fmap: MapHandle,
    anchor: BoundaryAnchor,
    p: Optional[Point] = None,
    t_grid: Optional[Sequence[float]] = None,
    settings: Optional[LabSettings] = None,
) -> RayDilation:
    """log lambda along the ray: the last value of ``g(t) = d(g(t), p) - d(f(g(t)), p)``.

    ``g`` must be non-decreasing on the grid and settled over its last half.
    """

    settings = settings or LabSettings()
    space = fmap.space
    ts = _grid(fmap, t_grid)
    anchor = _rebase(fmap, anchor, p)
    base = anchor.basepoint
    g = np.empty_like(ts)
    for k, t in enumerate(ts):
        x = anchor(t)
        g[k] = space.distance(x, base) - space.distance(fmap(x), base)

    drop = -np.diff(g)
    slack = settings.monotone_tol + 1e-14 * ts[1:]
    if np.any(drop > slack):
        k = int(np.argmax(drop - slack))
        raise MonotonicityViolated(
            f"dilation trace of {fmap.name} at {anchor.label} decreased by {drop[k]:.3e} at t={ts[k + 1]:g}",
            {"t": float(ts[k + 1]), "decrease": float(drop[k])},
        )
    gap = _tail_gap(ts, g)
    if gap > settings.tail_tol:
        raise TailNotConverged(
            f"dilation of {fmap.name} at {anchor.label} still moving by {gap:.3e} at t={ts[-1]:g}",
            {"g_last": float(g[-1]), "tail_gap": gap},
        )
    return RayDilation(
        value=float(g[-1]),
        t_grid=ts.tolist(),
        trace=g.tolist(),
        tail_gap=gap,
        regime="exact" if space.compactification_equivalent else "ray-estimate",
    )


def _superadditivity_defect(values: dict) -> float:
    worst = 0.0
    for n, a_n in values.items():
        for m, a_m in values.items():
            if m < n or n + m not in values:
                continue
            worst = max(worst, a_n + a_m - values[n + m])
    return worst


def dilation_iterates(
    fmap: MapHandle,
    anchor: BoundaryAnchor,
    p: Optional[Point] = None,
    n_max: Optional[int] = None,
    t_grid: Optional[Sequence[float]] = None,
    settings: Optional[LabSettings] = None,
    delta: Optional[float] = None,
) -> DilationTable:
    """Entries ``log lambda(f^n)`` for n = 1..n_max and the stable dilation ``max_n entries[n] / n``.

    Entry n evaluates on the grid shifted by ``n d(p, f(p))`` so that the
    ray has left the region moved by f^n. A failing entry truncates the table.
    """

    settings = settings or LabSettings()
    n_max = n_max or settings.n_max
    if n_max < 2:
        raise ConfigurationError("n_max must be at least 2")
    space = fmap.space
    ts = _grid(fmap, t_grid)
    anchor = _rebase(fmap, anchor, p)
    base = anchor.basepoint
    step = space.distance(base, fmap(base))

    entries: List[DilationEntry] = []
    truncated = None
    for n in range(1, n_max + 1):
        shifted = ts + n * step
        try:
            ray = dilation_along_ray(fmap.iterate(n), anchor, None, shifted, settings)
        except (TailNotConverged, DomainError) as exc:
            if n == 1:
                raise
            truncated = f"n={n}: {exc}"
            logger.warning("dilation table at %s truncated: %s", anchor.label, truncated)
            break
        entries.append(DilationEntry(n=n, value=ray.value, tail_gap=ray.tail_gap, t_last=float(shifted[-1])))

    values = {e.n: e.value for e in entries}
    stable = max(v / n for n, v in values.items())
    if delta is None:
        delta = 0.0 if space.compactification_equivalent else estimate_delta(space, n_samples=settings.delta_samples).implied_thin_delta
    a1 = values[1]
    ceiling = [n * (abs(a1) + 8.0 * delta + step) for n in values]
    for (n, v), cap in zip(values.items(), ceiling):
        if v > cap + settings.tol_super:
            logger.warning("entry %d at %s exceeds its ceiling: %.6f > %.6f", n, anchor.label, v, cap)
    defect = _superadditivity_defect(values)
    if defect > settings.tol_super:
        logger.warning("superadditivity defect %.3e at %s", defect, anchor.label)
    return DilationTable(
        label=anchor.label,
        basepoint=base,
        entries=entries,
        stable=stable,
        horizon=len(entries),
        t_grid=ts.tolist(),
        regime="exact" if space.compactification_equivalent else "ray-estimate",
        superadditivity_defect=defect,
        ceiling=ceiling,
        truncated_reason=truncated,
    )


def classify_brfp(table: DilationTable, settings: Optional[LabSettings] = None) -> BRFPClass:
    """Attracting, indifferent or repelling from the stable dilation.

    One positive entry already certifies repelling.
    """

    settings = settings or LabSettings()
    if any(e.value > settings.tol_super for e in table.entries):
        return "repelling"
    if table.stable < -settings.eps_lambda:
        return "attracting"
    if abs(table.stable) <= settings.eps_lambda:
        return "indifferent"
    return "repelling"


def detect_brfp(
    fmap: MapHandle,
    anchor: BoundaryAnchor,
    t_grid: Optional[Sequence[float]] = None,
    settings: Optional[LabSettings] = None,
    with_table: bool = False,
    n_max: Optional[int] = None,
) -> BRFPRecord:
    """Decide whether ``anchor`` is a boundary regular fixed point from ``d(g(t), f(g(t)))``."""

    settings = settings or LabSettings()
    space = fmap.space
    ts = _grid(fmap, t_grid)
    disp = np.array([space.distance(anchor(t), fmap(anchor(t))) for t in ts])
    tail = disp[ts >= ts[-1] / 2.0]
    lo, hi = float(tail.min()), float(tail.max())
    is_brfp = bool(np.all(np.isfinite(tail)) and hi - lo <= settings.disp_flat_tol)

    log_lambda = None
    try:
        log_lambda = dilation_along_ray(fmap, anchor, None, ts, settings).value
    except NumericalError as exc:
        logger.info("no dilation at %s: %s", anchor.label, exc)

    c_emp, bracketing = None, False
    if log_lambda is not None and is_brfp:
        c_emp = hi - abs(log_lambda)
        bracketing = abs(log_lambda) <= lo + settings.tail_tol and lo <= hi

    table, label_class = None, "unknown"
    if with_table and is_brfp and log_lambda is not None:
        table = dilation_iterates(fmap, anchor, None, n_max, ts, settings)
        label_class = classify_brfp(table, settings)
    logger.debug("anchor %s: brfp=%s log_lambda=%s displacement [%.4f, %.4f]", anchor.label, is_brfp, log_lambda, lo, hi)
    return BRFPRecord(
        anchor=anchor,
        is_brfp=is_brfp,
        log_lambda=log_lambda,
        displacement_liminf=lo,
        displacement_limsup=hi,
        c_emp=c_emp,
        bracketing_ok=bracketing,
        dilation_table=table,
        classification=label_class,
    )


def scan_brfps(
    fmap: MapHandle,
    p: Point,
    labels: Optional[Sequence[str]] = None,
    settings: Optional[LabSettings] = None,
    n_max: Optional[int] = None,
) -> List[BRFPRecord]:
    """Records for the declared BRFPs of ``fmap``, or every canonical label of its space."""

    space = fmap.space
    labels = list(labels or fmap.declared_brfps or space.boundary_labels())
    return [
        detect_brfp(fmap, space.ray_toward(p, label), settings=settings, with_table=True, n_max=n_max)
        for label in labels
    ]


def global_dilation_relations(
    fmap: MapHandle,
    brfps: Sequence[BRFPRecord],
    classification: ClassificationResult,
    settings: Optional[LabSettings] = None,
) -> RelationReport:
    """Check the identities tying stable dilations to c(f) and to the Denjoy-Wolff point."""

    settings = settings or LabSettings()
    messages: List[str] = []
    failed: List[str] = []
    values = {f"stable:{r.label}": r.stable for r in brfps if r.stable is not None}

    if classification.map_class == "Elliptic":
        if fmap.isometry:
            loud = [r.label for r in brfps if r.stable is not None and r.classification != "indifferent"]
            if loud:
                failed.append("isometry_indifferent")
                messages.append(f"Isometry has non-indifferent boundary points: {', '.join(loud)}.")
            else:
                messages.append("Every boundary record of the isometry is indifferent.")
        touched = set(classification.diagnostics.get("labels_touched", []))
        for r in brfps:
            if not r.is_brfp or r.label not in touched:
                continue
            if r.classification == "repelling":
                failed.append("retract_closure")
                messages.append(f"Repelling point {r.label} lies in the closure of the limit retract.")
            elif r.classification == "indifferent":
                messages.append(f"Retract reaches {r.label}, which is indifferent.")
        return RelationReport(passed=not failed, messages=messages, failed_rules=failed, values=values)

    c = classification.c_estimate
    values["c"] = c
    dw = next((r for r in brfps if r.label == classification.dw_label and r.stable is not None), None)
    if dw is None:
        failed.append("dw_anchor_missing")
        messages.append(f"No dilation record at the Denjoy-Wolff point {classification.dw_label}.")
        return RelationReport(passed=False, messages=messages, failed_rules=failed, values=values)

    if abs(dw.stable + c) <= settings.tol_rel:
        messages.append(f"Stable dilation at {dw.label} equals -c(f) = {-c:.6f}.")
    else:
        failed.append("stable_dw_equals_minus_c")
        messages.append(f"Stable dilation at {dw.label} is {dw.stable:.6f}, expected {-c:.6f}.")

    for r in brfps:
        if r is dw or not r.is_brfp or r.stable is None:
            continue
        if r.stable < -dw.stable - settings.tol_rel:
            failed.append("stable_lower_bound")
            messages.append(f"Stable dilation at {r.label} is {r.stable:.6f}, below {-dw.stable:.6f}.")
        else:
            messages.append(f"Stable dilation at {r.label} is at least {-dw.stable:.6f}.")
        if r.classification in ("attracting", "indifferent"):
            failed.append("dw_uniqueness")
            messages.append(f"{r.label} is {r.classification} but is not the Denjoy-Wolff point.")
    return RelationReport(passed=not failed, messages=messages, failed_rules=failed, values=values)
