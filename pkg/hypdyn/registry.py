"""Registry of worked examples with expected values, and the reproduce harness."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Literal, Optional, Sequence

from pydantic import BaseModel, Field

from .errors import ConfigurationError, HypdynError
from .io_schema import lookup, parse_scenario
from .models import LabSettings
from .tasks import run_scenario

logger = logging.getLogger(__name__)

LOG3 = math.log(3.0)
SQRT_I = [math.sqrt(0.5), math.sqrt(0.5)]


class ExpectedValue(BaseModel):
    key: str
    value: Any
    tolerance: float = 0.0
    comparison: Literal["approx", "le", "ge", "equal"] = "approx"
    provenance: Literal["closed-form", "derived", "trivial"] = "closed-form"

    def check(self, computed: Any) -> bool:
        if self.comparison == "equal":
            return computed == self.value
        if computed is None:
            return False
        if self.comparison == "approx":
            return abs(computed - self.value) <= self.tolerance
        if self.comparison == "le":
            return computed <= self.value + self.tolerance
        return computed >= self.value - self.tolerance


class RegistryEntry(BaseModel):
    id: str
    tags: List[str]
    description: str
    scenario: Dict[str, Any]
    expected: List[ExpectedValue]
    aliases: List[str] = Field(default_factory=list)

    def answers_to(self, example_id: str) -> bool:
        return example_id == self.id or example_id in self.aliases

    def matches(self, needle: Optional[str]) -> bool:
        if not needle:
            return True
        return needle in self.id or needle in self.tags or any(needle in alias for alias in self.aliases)


class CheckResult(BaseModel):
    key: str
    expected: Any
    computed: Any = None
    tolerance: float
    comparison: str
    provenance: str
    passed: bool


class EntryResult(BaseModel):
    id: str
    passed: bool
    checks: List[CheckResult] = Field(default_factory=list)
    error: Optional[str] = None
    exit_code: int = 0


def _cylinder(kind: str, theta: float) -> Dict[str, Any]:
    return {
        "space": {"kind": kind},
        "map": {"kind": "cylinder_screw", "params": {"shift": 1.0, "theta": theta}},
    }


DISC_AUTOMORPHISM = {
    "space": {"kind": "PoincareDisc"},
    "map": {"kind": "disc_automorphism", "params": {"a": 0.5}},
}
SQRT_PARABOLIC = {
    "space": {"kind": "UpperHalfPlane"},
    "map": {"kind": "halfplane_sqrt_parabolic"},
}
CLAMP = {
    "space": {"kind": "UpperHalfPlane"},
    "map": {"kind": "halfplane_clamp"},
}


def _ev(key: str, value: Any, tolerance: float = 0.0, comparison: str = "approx", provenance: str = "closed-form"):
    return ExpectedValue(key=key, value=value, tolerance=tolerance, comparison=comparison, provenance=provenance)


REGISTRY: List[RegistryEntry] = [
    RegistryEntry(
        id="l1-cylinder-quarter-turn",
        aliases=["ex-4.2"],
        tags=["dilation"],
        description="Screw motion on the L1 cylinder: one-step dilation 1 - theta at -inf, stable dilations +1 and -1.",
        scenario={
            **_cylinder("L1Cylinder", math.pi / 2.0),
            "task": "stable-dilation",
            "task_params": {"labels": ["-inf", "+inf"], "n_max": 64},
        },
        expected=[
            _ev("records.-inf.log_lambda", 1.0 - math.pi / 2.0, 1e-6),
            _ev("records.-inf.stable", 1.0, 1e-3),
            _ev("records.+inf.stable", -1.0, 1e-3),
            _ev("records.-inf.classification", "repelling", comparison="equal", provenance="derived"),
            _ev("relations.passed", True, comparison="equal", provenance="derived"),
        ],
    ),
    RegistryEntry(
        id="l1-cylinder-half-turn",
        tags=["dilation"],
        description="Half-turn screw on the L1 cylinder: the second iterate already shows dilation 2 at -inf.",
        scenario={
            **_cylinder("L1Cylinder", math.pi),
            "task": "stable-dilation",
            "task_params": {"labels": ["-inf", "+inf"], "n_max": 16},
        },
        expected=[
            _ev("records.-inf.log_lambda", 1.0 - math.pi, 1e-6),
            _ev("records.-inf.entries.2", 2.0, 1e-6),
            _ev("records.-inf.stable", 1.0, 1e-3),
            _ev("records.+inf.stable", -1.0, 1e-3),
        ],
    ),
    RegistryEntry(
        id="l1-cylinder-no-turn",
        tags=["dilation"],
        description="Pure translation of the L1 cylinder: dilation 1 at -inf from the first step on.",
        scenario={
            **_cylinder("L1Cylinder", 0.0),
            "task": "stable-dilation",
            "task_params": {"labels": ["-inf", "+inf"], "n_max": 64},
        },
        expected=[
            _ev("records.-inf.log_lambda", 1.0, 1e-6),
            _ev("records.-inf.stable", 1.0, 1e-3),
            _ev("records.+inf.stable", -1.0, 1e-3),
        ],
    ),
    RegistryEntry(
        id="l1-cylinder-unit-turn",
        tags=["dilation"],
        description="Screw by one radian on the L1 cylinder: one-step dilation 0 at -inf, stable dilations +1 and -1.",
        scenario={
            **_cylinder("L1Cylinder", 1.0),
            "task": "stable-dilation",
            "task_params": {"labels": ["-inf", "+inf"], "n_max": 64},
        },
        expected=[
            _ev("records.-inf.log_lambda", 0.0, 1e-6),
            _ev("records.-inf.stable", 1.0, 1e-3),
            _ev("records.+inf.stable", -1.0, 1e-3),
        ],
    ),
    RegistryEntry(
        id="l1-cylinder-turn-3",
        tags=["dilation"],
        description="Screw by three radians on the L1 cylinder: one-step dilation -2 at -inf. The ratio "
        "entry(n)/n first comes within 1e-3 of the stable dilation at n = 67, so the table runs to 128.",
        scenario={
            **_cylinder("L1Cylinder", 3.0),
            "task": "stable-dilation",
            "task_params": {"labels": ["-inf", "+inf"], "n_max": 128},
        },
        expected=[
            _ev("records.-inf.log_lambda", -2.0, 1e-6),
            _ev("records.-inf.stable", 1.0, 1e-3),
            _ev("records.+inf.stable", -1.0, 1e-3),
        ],
    ),
    RegistryEntry(
        id="flat-cylinder-screw",
        aliases=["ex-cylinder"],
        tags=["dilation"],
        description="Shift with half rotation on the flat cylinder: displacement sqrt(1 + pi^2) everywhere, dilation -1.",
        scenario={**_cylinder("FlatCylinder", math.pi), "task": "dilation", "task_params": {"label": "+inf"}},
        expected=[
            _ev("record.displacement_liminf", math.sqrt(1.0 + math.pi ** 2), 1e-9),
            _ev("record.displacement_limsup", math.sqrt(1.0 + math.pi ** 2), 1e-9),
            _ev("record.log_lambda", -1.0, 1e-6),
        ],
    ),
    RegistryEntry(
        id="disc-automorphism",
        tags=["dilation", "forward"],
        description="Hyperbolic disc automorphism with translation length log 3.",
        scenario={
            **DISC_AUTOMORPHISM,
            "task": "stable-dilation",
            "task_params": {"labels": ["1", "-1"], "n_max": 16},
        },
        expected=[
            _ev("records.1.log_lambda", -LOG3, 1e-4),
            _ev("records.-1.log_lambda", LOG3, 1e-4),
            _ev("records.1.stable", -LOG3, 1e-4),
            _ev("records.-1.stable", LOG3, 1e-4),
            _ev("records.-1.entries.16", 16.0 * LOG3, 1e-4),
            _ev("classification.c_estimate", LOG3, 1e-4),
            _ev("relations.passed", True, comparison="equal", provenance="derived"),
        ],
    ),
    RegistryEntry(
        id="sqrt-parabolic-backward",
        tags=["backward"],
        description="Solver backward orbit sqrt(n + i) of z -> sqrt(z^2 - 1): bounded step, zero rate, parabolic limit.",
        scenario={
            **SQRT_PARABOLIC,
            "task": "backward-orbit",
            "task_params": {"N": 400, "x0": SQRT_I, "method": "solver", "limit": True, "m_max": 20},
        },
        expected=[
            _ev("max_residual", 1e-8, comparison="le", provenance="derived"),
            _ev("profile.b_estimate", 0.05, comparison="le", provenance="derived"),
            _ev("classification.map_class", "Parabolic", comparison="equal"),
            _ev("limit.kind", "ParabolicDW", comparison="equal"),
            _ev("limit.label", "inf", comparison="equal"),
            _ev("rate_gap", 1e-2, comparison="le", provenance="derived"),
        ],
    ),
    RegistryEntry(
        id="disc-backward",
        tags=["backward"],
        description="Inverse backward orbit of the disc automorphism converges to the repelling point -1.",
        scenario={
            **DISC_AUTOMORPHISM,
            "task": "backward-orbit",
            "task_params": {"N": 200, "x0": [0.0, 0.0], "limit": True},
        },
        expected=[
            _ev("profile.b_estimate", LOG3, 1e-3),
            _ev("limit.kind", "RepellingBRFP", comparison="equal"),
            _ev("limit.label", "-1", comparison="equal"),
            _ev("limit.consistent", True, comparison="equal", provenance="derived"),
            _ev("rate_gap", 1e-2, comparison="le", provenance="derived"),
        ],
    ),
    RegistryEntry(
        id="logline-backward",
        tags=["backward"],
        description="t -> t + 1 on the log line has no backward orbit toward +inf: the inverse run leaves the domain.",
        scenario={
            "space": {"kind": "LogLine"},
            "map": {"kind": "logline_shift", "params": {"s": 1.0}},
            "task": "backward-orbit",
            "task_params": {"N": 20, "x0": [10.0]},
        },
        expected=[
            _ev("terminated_at", 9, comparison="equal", provenance="trivial"),
            _ev("length", 10, comparison="equal", provenance="trivial"),
        ],
    ),
    RegistryEntry(
        id="slit-plane-companions",
        tags=["backward"],
        description="Backward orbits of z -> z + 1 on the slit plane from i and -i drift apart without bound.",
        scenario={
            "space": {"kind": "SlitPlane"},
            "map": {"kind": "slit_translate", "params": {"s": 1.0}},
            "task": "backward-orbit",
            "task_params": {"N": 100, "x0": [0.0, 1.0], "companion": [0.0, -1.0]},
        },
        expected=[
            _ev("proximity.last", 10.0, comparison="ge", provenance="derived"),
            _ev("proximity.growing", True, comparison="equal", provenance="derived"),
        ],
    ),
    RegistryEntry(
        id="halfplane-clamp",
        tags=["forward"],
        description="The clamp map is weakly elliptic: its limit retract is the imaginary axis.",
        scenario={
            **CLAMP,
            "task": "classify",
            "task_params": {
                "N": 500,
                "seeds": [[0.0, math.exp(-4.0)], [0.0, 1.0], [0.0, math.exp(4.0)], [3.0, 1.0], [-2.0, 0.5]],
            },
        },
        expected=[
            _ev("classification.map_class", "Elliptic", comparison="equal"),
            _ev("classification.elliptic_kind", "weak", comparison="equal"),
        ],
    ),
    RegistryEntry(
        id="halfplane-clamp-battery",
        tags=["backward"],
        description="The backward orbit n + i of the clamp map fails every condition of the battery.",
        scenario={**CLAMP, "task": "battery", "task_params": {"N": 200, "x0": [0.0, 1.0]}},
        expected=[
            _ev("all_false", True, comparison="equal", provenance="derived"),
            _ev("battery.values.b", 0.05, comparison="le", provenance="derived"),
        ],
    ),
    RegistryEntry(
        id="sqrt-parabolic-battery",
        tags=["backward"],
        description="The battery rejects the parabolic backward orbit sqrt(n + i) on every condition.",
        scenario={
            **SQRT_PARABOLIC,
            "task": "battery",
            "task_params": {"N": 400, "x0": SQRT_I, "method": "solver"},
        },
        expected=[_ev("all_false", True, comparison="equal", provenance="derived")],
    ),
    RegistryEntry(
        id="disc-battery",
        tags=["backward"],
        description="The battery accepts the backward orbit of the disc automorphism on every condition.",
        scenario={**DISC_AUTOMORPHISM, "task": "battery", "task_params": {"N": 200, "x0": [0.0, 0.0]}},
        expected=[
            _ev("all_true", True, comparison="equal", provenance="derived"),
            _ev("battery.values.b", LOG3, 1e-3),
        ],
    ),
    RegistryEntry(
        id="disc-synthesize",
        tags=["backward", "synthesize"],
        description="Synthesized backward orbit toward -1 shadows the exact inverse orbit.",
        scenario={**DISC_AUTOMORPHISM, "task": "synthesize", "task_params": {"label": "-1", "p": [0.0, 0.0]}},
        expected=[
            _ev("b_estimate", LOG3, 1e-2),
            _ev("proximity_sup", 0.5, comparison="le", provenance="derived"),
        ],
    ),
    RegistryEntry(
        id="l1-synthesize",
        tags=["backward", "synthesize"],
        description="On the L1 cylinder the synthesized orbit has rate 1 while every single step costs 1 + pi/2.",
        scenario={
            **_cylinder("L1Cylinder", math.pi / 2.0),
            "task": "synthesize",
            "task_params": {"label": "-inf", "p": [0.0, 0.0]},
            # start points 12 apart share the phase of the f^3 screw
            "settings": {"synth_t_grid": [10.0, 22.0, 34.0, 46.0]},
        },
        expected=[
            _ev("b_estimate", 1.0, 1e-2),
            _ev("first_step", 1.0 + math.pi / 2.0, 1e-3, comparison="ge"),
            _ev("state.cluster_sizes.0", 4, comparison="equal", provenance="derived"),
        ],
    ),
    RegistryEntry(
        id="punctured-cylinder-probe",
        tags=["backward"],
        description="Backward orbit on the punctured cylinder: unbounded step and the whole circle as limit set.",
        scenario={
            "space": {"kind": "HyperbolicPuncturedCylinder"},
            "map": {"kind": "punctured_dilation", "params": {"theta": 1.0, "factor": 2.0}},
            "task": "step-probe",
            "task_params": {"N": 20, "x0": [0.0, 1.0], "cells": 16, "angular_samples": 2000},
        },
        expected=[
            _ev("last_step", 20.0, comparison="ge", provenance="derived"),
            _ev("cells_occupied", 16, comparison="equal", provenance="derived"),
            _ev("probe.step_growth", True, comparison="equal", provenance="derived"),
        ],
    ),
    RegistryEntry(
        id="disc-julia",
        tags=["horofunction"],
        description="Julia inequality at the attracting point of the disc automorphism, exact mode.",
        scenario={
            **DISC_AUTOMORPHISM,
            "task": "julia-verify",
            "task_params": {"label": "1", "mode": "exact", "samples": 1000},
        },
        expected=[
            _ev("julia.passed", True, comparison="equal"),
            _ev("julia.max_violation", 1e-6, comparison="le"),
        ],
    ),
    RegistryEntry(
        id="l1-julia",
        tags=["horofunction"],
        description="Julia inequality for the L1 screw isometry at -inf, exact mode.",
        scenario={
            **_cylinder("L1Cylinder", math.pi / 2.0),
            "task": "julia-verify",
            "task_params": {"label": "-inf", "mode": "exact", "samples": 1000},
        },
        expected=[
            _ev("julia.passed", True, comparison="equal"),
            _ev("julia.max_violation", 1e-6, comparison="le"),
        ],
    ),
    RegistryEntry(
        id="real-line-delta",
        tags=["metric"],
        description="The real line is a tree: every sampled four-point defect vanishes.",
        scenario={
            "space": {"kind": "RealLine"},
            "map": {"kind": "real_translate"},
            "task": "delta-estimate",
            "task_params": {"samples": 500},
        },
        expected=[_ev("delta.four_point_C", 0.0, 1e-12, provenance="trivial")],
    ),
]


def entry_ids(entries: Sequence[RegistryEntry] = REGISTRY) -> List[str]:
    return [e.id for e in entries]


def find_entry(example_id: str, entries: Sequence[RegistryEntry] = REGISTRY) -> RegistryEntry:
    for entry in entries:
        if entry.answers_to(example_id):
            return entry
    raise ConfigurationError(f"unknown example {example_id!r}; choose from {entry_ids(entries)}")


def run_entry(entry: RegistryEntry, settings: Optional[LabSettings] = None) -> EntryResult:
    """Run one entry's scenario and compare the report with its expected values."""

    scenario = parse_scenario(entry.scenario)
    try:
        _, outcome = run_scenario(scenario, settings)
    except HypdynError as exc:
        logger.error("example %s failed: %s", entry.id, exc)
        return EntryResult(id=entry.id, passed=False, error=f"{type(exc).__name__}: {exc}", exit_code=exc.exit_code)

    checks: List[CheckResult] = []
    for ev in entry.expected:
        try:
            computed = lookup(outcome.report, ev.key)
        except (KeyError, IndexError, ValueError):
            computed = None
            ok = False
        else:
            ok = ev.check(computed)
        checks.append(
            CheckResult(
                key=ev.key,
                expected=ev.value,
                computed=computed,
                tolerance=ev.tolerance,
                comparison=ev.comparison,
                provenance=ev.provenance,
                passed=ok,
            )
        )
    passed = all(c.passed for c in checks)
    if not passed:
        logger.warning("example %s: %d of %d checks failed", entry.id, sum(not c.passed for c in checks), len(checks))
    return EntryResult(id=entry.id, passed=passed, checks=checks, exit_code=0 if passed else 1)


def reproduce_all(
    needle: Optional[str] = None,
    entries: Sequence[RegistryEntry] = REGISTRY,
    settings: Optional[LabSettings] = None,
) -> List[EntryResult]:
    """Run every entry whose id or tags match ``needle``, in parallel."""

    settings = settings or LabSettings()
    selected = [e for e in entries if e.matches(needle)]
    if not selected:
        raise ConfigurationError(f"no example matches {needle!r}")
    with ThreadPoolExecutor(max_workers=settings.threads) as pool:
        return list(pool.map(lambda e: run_entry(e, settings), selected))


def summary_rows(results: Sequence[EntryResult]) -> List[List[Any]]:
    """Rows (id, key, expected, computed, tolerance, verdict) for the summary table."""

    rows: List[List[Any]] = []
    for result in results:
        if result.error:
            rows.append([result.id, "-", "-", result.error, "-", "FAIL"])
            continue
        for c in result.checks:
            tol = f"{c.comparison} {c.tolerance:g}" if c.comparison != "equal" else "equal"
            rows.append([result.id, c.key, c.expected, c.computed, tol, "pass" if c.passed else "FAIL"])
    return rows
