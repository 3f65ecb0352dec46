"""Scenario tasks: build the space and map, run one pipeline, collect the report."""

from __future__ import annotations

import logging
import math
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from .backward import (
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
from .dilation import detect_brfp, global_dilation_relations, scan_brfps
from .errors import ConfigurationError, HypdynError
from .forward import calka_dichotomy, check_nonexpanding, classify, divergence_rate, forward_orbit
from .horofunction import HorofunctionHandle, verify_julia
from .io_schema import Scenario, TaskParams
from .maps import MapHandle, build_map
from .metric import estimate_delta
from .models import BackwardOrbit, BRFPRecord, LabSettings, Point
from .spaces import ModelSpace, build_space

logger = logging.getLogger(__name__)


class Trace(BaseModel):
    """An orbit to export, with the horofunctions sampled along it."""

    points: List[Point]
    horofunctions: List[HorofunctionHandle] = Field(default_factory=list)


class TaskOutcome(BaseModel):
    report: Dict[str, Any]
    passed: bool = True
    traces: Dict[str, Trace] = Field(default_factory=dict)


def build_settings(overrides: Dict[str, Any], base: Optional[LabSettings] = None) -> LabSettings:
    base = base or LabSettings()
    unknown = set(overrides) - set(base.__fields__)
    if unknown:
        raise ConfigurationError(f"unknown settings: {sorted(unknown)}")
    try:
        return LabSettings(**{**base.dict(), **overrides})
    except ValidationError as exc:
        raise ConfigurationError(f"Settings invalid: {exc}") from exc


def _point(space: ModelSpace, coords: Optional[List[float]]) -> Point:
    return space.from_user(coords if coords is not None else space.origin)


def _record_summary(record: BRFPRecord) -> Dict[str, Any]:
    summary: Dict[str, Any] = {
        "is_brfp": record.is_brfp,
        "log_lambda": record.log_lambda,
        "displacement_liminf": record.displacement_liminf,
        "displacement_limsup": record.displacement_limsup,
        "c_emp": record.c_emp,
        "bracketing_ok": record.bracketing_ok,
        "classification": record.classification,
        "stable": record.stable,
    }
    table = record.dilation_table
    if table is not None:
        summary["entries"] = {str(n): v for n, v in table.values().items()}
        summary["horizon"] = table.horizon
        summary["superadditivity_defect"] = table.superadditivity_defect
        summary["truncated_reason"] = table.truncated_reason
        summary["regime"] = table.regime
    return summary


def _trace(space: ModelSpace, points: List[Point], labels: List[str], settings: LabSettings) -> Trace:
    handles = []
    for label in labels:
        try:
            handles.append(HorofunctionHandle.toward(space, label, points[0], tail_tol=settings.tail_tol))
        except HypdynError as exc:
            logger.warning("no horofunction toward %s from %s: %s", label, points[0], exc)
    return Trace(points=points, horofunctions=handles)


def _seeds(space: ModelSpace, params: TaskParams) -> List[Point]:
    if params.seeds:
        return [space.from_user(s) for s in params.seeds]
    return [_point(space, params.x0 if params.x0 is not None else params.p)]


def _backward(fmap: MapHandle, params: TaskParams, settings: LabSettings, seed: int) -> BackwardOrbit:
    x0 = _point(fmap.space, params.x0)
    if params.method == "solver":
        return backward_orbit_via_solver(fmap, x0, params.N, settings=settings, seed=seed)
    return backward_orbit_via_inverse(fmap, x0, params.N)


def task_classify(fmap, params, settings, seed) -> TaskOutcome:
    space = fmap.space
    seeds = _seeds(space, params)
    result = classify(fmap, seeds, params.N if params.N >= settings.calka_min_steps else None, settings)
    report: Dict[str, Any] = {"classification": result.dict()}
    trace = forward_orbit(fmap, seeds[0], params.N)
    passed = True
    if params.relations and result.map_class != "Elliptic":
        labels = params.labels or fmap.declared_brfps
        if labels:
            records = scan_brfps(fmap, seeds[0], labels, settings, params.n_max)
            relations = global_dilation_relations(fmap, records, result, settings)
            report["relations"] = relations.dict()
            report["records"] = {r.label: _record_summary(r) for r in records}
            passed = relations.passed
    anchors = params.anchors or ([result.dw_label] if result.dw_label else [])
    return TaskOutcome(report=report, passed=passed, traces={"forward": _trace(space, trace.points, anchors, settings)})


def task_nonexpansion(fmap, params, settings, seed) -> TaskOutcome:
    report = check_nonexpanding(fmap, n_pairs=params.pairs, seed=seed, tol=settings.metric_tol)
    return TaskOutcome(report={"nonexpansion": report.dict()}, passed=report.passed)


def task_dilation(fmap, params, settings, seed) -> TaskOutcome:
    space = fmap.space
    p = _point(space, params.p)
    label = params.label or (fmap.declared_brfps or space.boundary_labels())[0]
    record = detect_brfp(fmap, space.ray_toward(p, label), params.t_grid, settings)
    return TaskOutcome(report={"label": record.label, "record": _record_summary(record)}, passed=record.is_brfp)


def task_stable_dilation(fmap, params, settings, seed) -> TaskOutcome:
    space = fmap.space
    p = _point(space, params.p)
    records = scan_brfps(fmap, p, params.labels, settings, params.n_max)
    report: Dict[str, Any] = {"records": {r.label: _record_summary(r) for r in records}}
    passed = True
    if params.relations:
        result = classify(fmap, _seeds(space, params), settings=settings)
        relations = global_dilation_relations(fmap, records, result, settings)
        report["classification"] = result.dict()
        report["relations"] = relations.dict()
        passed = relations.passed
    return TaskOutcome(report=report, passed=passed)


def task_forward_orbit(fmap, params, settings, seed) -> TaskOutcome:
    space = fmap.space
    trace = forward_orbit(fmap, _point(space, params.x0), params.N)
    report: Dict[str, Any] = {
        "terminated_at": trace.terminated_at,
        "last_displacement": trace.displacement[-1],
        "limit_label": space.limit_label(trace.points),
    }
    if len(trace.points) - 1 >= settings.calka_min_steps:
        report["calka"] = calka_dichotomy(trace, settings)
        report["divergence_rate"] = divergence_rate(fmap, trace.points[0], trace=trace)
    anchors = params.anchors or [report["limit_label"]]
    return TaskOutcome(report=report, traces={"forward": _trace(space, trace.points, anchors, settings)})


def _profile_or_none(orbit: BackwardOrbit, space: ModelSpace, params: TaskParams, settings: LabSettings):
    m_max = params.m_max or settings.m_max
    if len(orbit.points) < 4 * m_max:
        logger.info("backward orbit of length %d too short for a step profile with m_max=%d", len(orbit.points), m_max)
        return None
    return step_profile(orbit, space, m_max, settings)


def task_backward_orbit(fmap, params, settings, seed) -> TaskOutcome:
    space = fmap.space
    orbit = _backward(fmap, params, settings, seed)
    report: Dict[str, Any] = {
        "construction": orbit.construction,
        "length": len(orbit.points),
        "terminated_at": orbit.terminated_at,
        "max_residual": orbit.max_residual,
        "ambiguous_steps": orbit.ambiguous_steps,
        "limit_label": space.limit_label(orbit.points),
        "points": [list(space.to_user(x)) for x in orbit.points],
    }
    passed = orbit.max_residual <= settings.residual_tol
    profile = _profile_or_none(orbit, space, params, settings)
    if profile is not None:
        rate = backward_divergence_rate(orbit, space)
        report["profile"] = profile.dict()
        report["divergence_rate"] = rate
        report["rate_gap"] = abs(rate - profile.b_estimate)
    traces = {"backward": _trace(space, orbit.points, params.anchors or [report["limit_label"]], settings)}
    if params.companion is not None:
        companion = backward_orbit_via_inverse(fmap, space.from_user(params.companion), params.N)
        proximity = orbit_proximity(space, orbit.points, companion.points)
        report["proximity"] = {**proximity.dict(), "last": proximity.distances[-1]}
        traces["companion"] = Trace(points=companion.points)
    if params.limit and profile is not None:
        classification = classify(fmap, _seeds(space, params), settings=settings)
        limit = classify_backward_limit(orbit, fmap, classification, profile, settings)
        report["classification"] = classification.dict()
        report["limit"] = limit.dict()
        passed = passed and limit.consistent
    return TaskOutcome(report=report, passed=passed, traces=traces)


def task_synthesize(fmap, params, settings, seed) -> TaskOutcome:
    space = fmap.space
    p = _point(space, params.p)
    label = params.label or (fmap.declared_brfps or space.boundary_labels())[-1]
    record = detect_brfp(fmap, space.ray_toward(p, label), settings=settings, with_table=True, n_max=params.n_max)
    result = synthesize_backward_orbit(
        fmap, record, p, c=params.threshold, m=params.synth_m, depth=params.depth, settings=settings
    )
    report = {
        "label": record.label,
        "record": _record_summary(record),
        "state": result.state.dict(),
        "profile": result.profile.dict(),
        "b_estimate": result.profile.b_estimate,
        "first_step": result.profile.sigma[1],
        "stable": result.stable,
        "rate_gap": abs(result.profile.b_estimate - result.stable),
        "proximity_sup": result.proximity_sup,
        "max_residual": result.orbit.max_residual,
    }
    passed = report["rate_gap"] <= 1e-2 and result.orbit.max_residual <= settings.residual_tol
    orbit_points = result.orbit.points
    return TaskOutcome(report=report, passed=passed, traces={"synthesized": _trace(space, orbit_points, [record.label], settings)})


def task_battery(fmap, params, settings, seed) -> TaskOutcome:
    orbit = _backward(fmap, params, settings, seed)
    battery = equivalence_battery(orbit, fmap, settings=settings)
    verdicts = set(battery.verdicts.values())
    report = {
        "battery": battery.dict(),
        "all_true": verdicts == {True},
        "all_false": verdicts == {False},
        "max_residual": orbit.max_residual,
    }
    return TaskOutcome(report=report, passed=battery.unanimous)


def task_delta_estimate(fmap, params, settings, seed) -> TaskOutcome:
    estimate = estimate_delta(fmap.space, n_samples=params.samples, seed=seed)
    return TaskOutcome(report={"delta": estimate.dict(exclude={"witness"}), "witness": estimate.witness})


def task_julia_verify(fmap, params, settings, seed) -> TaskOutcome:
    space = fmap.space
    p = _point(space, params.p)
    label = params.label or (fmap.declared_brfps or space.boundary_labels())[0]
    record = detect_brfp(fmap, space.ray_toward(p, label), params.t_grid, settings)
    rng = np.random.default_rng(seed)
    sample_set = space.sample(rng.random((params.samples, space.dim)))
    report = verify_julia(space, fmap, record, p, sample_set, params.mode, params.delta, settings, seed)
    return TaskOutcome(
        report={"label": record.label, "log_lambda": record.log_lambda, "julia": report.dict()}, passed=report.passed
    )


def task_step_probe(fmap, params, settings, seed) -> TaskOutcome:
    orbit = backward_orbit_via_inverse(fmap, _point(fmap.space, params.x0), params.N)
    probe = unbounded_step_probe(fmap, orbit, params.cells, params.angular_samples)
    report = {
        "probe": probe.dict(),
        "last_step": probe.steps[-1] if probe.steps else 0.0,
        "cells_occupied": probe.cells_occupied,
    }
    return TaskOutcome(report=report, traces={"backward": Trace(points=orbit.points)})


TaskRunner = Callable[[MapHandle, TaskParams, LabSettings, int], TaskOutcome]

TASKS: Dict[str, TaskRunner] = {
    "classify": task_classify,
    "nonexpansion": task_nonexpansion,
    "dilation": task_dilation,
    "stable-dilation": task_stable_dilation,
    "forward-orbit": task_forward_orbit,
    "backward-orbit": task_backward_orbit,
    "synthesize": task_synthesize,
    "battery": task_battery,
    "delta-estimate": task_delta_estimate,
    "julia-verify": task_julia_verify,
    "step-probe": task_step_probe,
}


def _clean(value: Any) -> Any:
    """Replace non-finite floats so reports stay valid JSON."""

    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def run_scenario(scenario: Scenario, settings: Optional[LabSettings] = None) -> Tuple[MapHandle, TaskOutcome]:
    """Execute one non-reproduce scenario task."""

    if scenario.task not in TASKS:
        raise ConfigurationError(f"task {scenario.task!r} is not run directly")
    settings = build_settings(scenario.settings, settings)
    space = build_space(scenario.space.kind, scenario.space.params)
    fmap = build_map(space, scenario.map.kind, scenario.map.params)
    logger.info("running %s for %s on %s", scenario.task, fmap.name, space.kind)
    outcome = TASKS[scenario.task](fmap, scenario.task_params, settings, scenario.seed)
    outcome.report = _clean(
        {
            "task": scenario.task,
            "space": space.describe(),
            "map": {"kind": scenario.map.kind, "params": dict(fmap.params)},
            "seed": scenario.seed,
            "passed": outcome.passed,
            **outcome.report,
        }
    )
    return fmap, outcome
