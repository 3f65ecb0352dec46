"""Scenario files, JSON reports and CSV trace export."""

from __future__ import annotations

import csv
import json
import logging
import math
from io import StringIO
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence

from pydantic import BaseModel, Field, ValidationError, root_validator

from .errors import ConfigurationError, HypdynError
from .horofunction import HorofunctionHandle
from .models import JuliaMode, Point
from .spaces import ModelSpace

logger = logging.getLogger(__name__)

TaskName = Literal[
    "classify",
    "nonexpansion",
    "dilation",
    "stable-dilation",
    "forward-orbit",
    "backward-orbit",
    "synthesize",
    "battery",
    "delta-estimate",
    "julia-verify",
    "step-probe",
    "reproduce",
]

TRACE_COLUMNS = ["n", "t", "coord_0", "coord_1", "step", "displacement"]


def _finite(value: Any, path: str) -> None:
    if isinstance(value, float) and not math.isfinite(value):
        raise ValueError(f"{path} must be finite, got {value}")
    if isinstance(value, (list, tuple)):
        for k, item in enumerate(value):
            _finite(item, f"{path}[{k}]")
    if isinstance(value, dict):
        for key, item in value.items():
            _finite(item, f"{path}.{key}")


class Component(BaseModel):
    kind: str
    params: Dict[str, Any] = Field(default_factory=dict)

    @root_validator(skip_on_failure=True)
    def _params_finite(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        _finite(values.get("params"), "params")
        return values


class TaskParams(BaseModel):
    """Parameters shared by the scenario tasks; points are in user coordinates."""

    N: int = Field(200, ge=1)
    x0: Optional[List[float]] = None
    p: Optional[List[float]] = None
    companion: Optional[List[float]] = None
    seeds: Optional[List[List[float]]] = None
    label: Optional[str] = None
    labels: Optional[List[str]] = None
    anchors: List[str] = Field(default_factory=list)
    method: Literal["inverse", "solver"] = "inverse"
    n_max: Optional[int] = Field(None, ge=2)
    m_max: Optional[int] = Field(None, ge=1)
    t_grid: Optional[List[float]] = None
    pairs: int = Field(1000, ge=1)
    samples: int = Field(1000, ge=1)
    mode: JuliaMode = "exact"
    delta: Optional[float] = Field(None, ge=0)
    relations: bool = True
    limit: bool = False
    synth_m: Optional[int] = Field(None, ge=1)
    threshold: Optional[float] = None
    depth: Optional[int] = Field(None, ge=2)
    cells: int = Field(16, ge=1)
    angular_samples: int = Field(2000, ge=0)
    example: Optional[str] = None

    @root_validator(skip_on_failure=True)
    def _numbers_finite(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        for key, value in values.items():
            _finite(value, key)
        return values


class Scenario(BaseModel):
    space: Optional[Component] = None
    map: Optional[Component] = None
    task: TaskName
    task_params: TaskParams = Field(default_factory=TaskParams)
    seed: int = 0
    settings: Dict[str, Any] = Field(default_factory=dict)
    report_path: Optional[str] = None
    trace_dir: Optional[str] = None

    @root_validator(skip_on_failure=True)
    def _task_inputs(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        if values["task"] == "reproduce":
            if not values["task_params"].example:
                raise ValueError("task 'reproduce' needs task_params.example")
        elif values.get("space") is None or values.get("map") is None:
            raise ValueError(f"task {values['task']!r} needs both space and map")
        return values


def scenario_schema() -> Dict[str, Any]:
    return Scenario.schema()


def parse_scenario(data: Dict[str, Any]) -> Scenario:
    try:
        return Scenario.parse_obj(data)
    except ValidationError as exc:
        raise ConfigurationError(f"Scenario invalid: {exc}") from exc


def load_scenario(path: Path | str) -> Scenario:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"Scenario file {path} is not JSON: {exc}") from exc
    return parse_scenario(data)


def dump_json(data: Any) -> str:
    """Deterministic JSON text: sorted keys, fixed indentation."""

    return json.dumps(data, indent=2, sort_keys=True, default=str)


def save_report(report: Dict[str, Any], path: Path | str) -> None:
    Path(path).write_text(dump_json(report))


def trace_rows(
    space: ModelSpace, points: Sequence[Point], horofunctions: Sequence[HorofunctionHandle] = ()
) -> List[List[Any]]:
    """Rows for the trace CSV; ``t`` is the path length along the orbit."""

    rows: List[List[Any]] = []
    t = 0.0
    for n, x in enumerate(points):
        step = space.distance(points[n - 1], x) if n else 0.0
        t += step
        coords = list(space.to_user(x)) + [""] * (2 - space.dim)
        row: List[Any] = [n, t, *coords[:2], step, space.distance(points[0], x)]
        for h in horofunctions:
            try:
                row.append(h(x))
            except HypdynError as exc:
                logger.debug("no horofunction value at n=%d: %s", n, exc)
                row.append("")
        rows.append(row)
    return rows


def trace_csv(
    space: ModelSpace, points: Sequence[Point], horofunctions: Sequence[HorofunctionHandle] = ()
) -> str:
    buffer = StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS + [f"h_anchor_{k}" for k in range(len(horofunctions))])
    writer.writerows(trace_rows(space, points, horofunctions))
    return buffer.getvalue()


def write_trace_csv(
    path: Path | str,
    space: ModelSpace,
    points: Sequence[Point],
    horofunctions: Sequence[HorofunctionHandle] = (),
) -> None:
    Path(path).write_text(trace_csv(space, points, horofunctions))


def load_report(path: Path | str) -> Dict[str, Any]:
    return json.loads(Path(path).read_text())


def lookup(report: Dict[str, Any], key: str) -> Any:
    """Value at a dotted ``key``; list indices may be negative."""

    value: Any = report
    for part in key.split("."):
        if isinstance(value, list):
            value = value[int(part)]
        elif isinstance(value, dict) and part in value:
            value = value[part]
        else:
            raise KeyError(f"report has no entry {key!r} (missing {part!r})")
    return value
