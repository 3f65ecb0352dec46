"""Core data records for the hyperbolic dynamics lab."""

from __future__ import annotations

from typing import Any, Callable, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, BaseSettings, Field, validator

Point = Tuple[float, ...]

MapClass = Literal["Elliptic", "Parabolic", "Hyperbolic"]
EllipticKind = Literal["strong", "weak", "undetermined"]
CalkaVerdict = Literal["Bounded", "Escaping", "Undetermined"]
BRFPClass = Literal["attracting", "indifferent", "repelling", "unknown"]
JuliaMode = Literal["delta", "exact"]
Construction = Literal["inverse", "solver", "synthesized"]
LimitKind = Literal["RepellingBRFP", "ParabolicDW", "WeaklyEllipticUndetermined", "NonEscaping"]


class LabSettings(BaseSettings):
    """Thresholds and horizons shared by every estimator.

    Values may be overridden from the environment with the ``HYPDYN_``
    prefix, e.g. ``HYPDYN_THREADS=2``.
    """

    metric_tol: float = 1e-9
    t_max: float = Field(40.0, ge=20.0)
    tail_tol: float = 1e-6
    monotone_tol: float = 1e-9
    n_max: int = Field(64, ge=2)
    eps_lambda: float = 1e-3
    tol_super: float = 1e-6
    tol_rel: float = 1e-3
    disp_flat_tol: float = 0.1
    julia_tol: float = 1e-6
    eps_c: float = 1e-3
    rate_agreement_tol: float = Field(1e-2, gt=0)
    classify_steps: int = Field(500, ge=10)
    calka_min_steps: int = 50
    r_escape: float = 20.0
    r_bound: float = 50.0
    slope_escape: float = 1e-4
    slope_bounded: float = 1e-5
    edge_fraction: float = Field(0.9, gt=0, lt=1)
    cluster_tol: float = Field(0.2, gt=0)
    tail_fraction: float = Field(0.25, gt=0, le=1)
    residual_tol: float = 1e-8
    eps_b: float = 0.05
    m_max: int = Field(20, ge=1)
    spread_tol: float = 0.05
    synth_depth: int = Field(50, ge=2)
    synth_t_grid: List[float] = Field(default_factory=lambda: [10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0])
    synth_max_steps: int = 20000
    region_radius: float = 4.0
    quasi_b_max: float = 10.0
    solver_seeds: int = Field(4, ge=1)
    solver_xtol: float = 1e-14
    delta_samples: int = 2000
    threads: int = Field(4, ge=1)

    class Config:
        env_prefix = "HYPDYN_"


class BoundaryAnchor(BaseModel):
    """A boundary point given by a unit-speed geodesic ray from ``basepoint``."""

    label: str
    basepoint: Point
    ray: Callable[[float], Point] = Field(..., exclude=True)

    class Config:
        allow_mutation = False
        arbitrary_types_allowed = True

    def __call__(self, t: float) -> Point:
        return self.ray(t)


class GromovProductSample(BaseModel):
    x: Point
    y: Point
    w: Point
    value: float = Field(..., ge=0)


class DeltaEstimate(BaseModel):
    """Four-point constant observed on a sampling window (a lower bound)."""

    four_point_C: float = Field(..., ge=0)
    implied_thin_delta: float = Field(..., ge=0)
    samples: int
    seed: int
    witness: Optional[List[Point]] = None


class QuasiGeodesicCertificate(BaseModel):
    A: float = Field(..., ge=1)
    B: float = Field(..., ge=0)
    window: Tuple[int, int]
    violations: List[Tuple[int, int]] = Field(default_factory=list)
    violation_count: int = 0
    degenerate: bool = False
    trend_slope: float = 0.0

    @property
    def valid(self) -> bool:
        return self.violation_count == 0


class GeodesicRegion(BaseModel):
    ray: BoundaryAnchor
    R: float = Field(..., gt=0)


class NonExpansionReport(BaseModel):
    pairs: int
    max_excess: float
    witness: Optional[Tuple[Point, Point]] = None
    passed: bool


class OrbitTrace(BaseModel):
    """A finite orbit with per-step and cumulative distances."""

    points: List[Point]
    step_distances: List[float]
    displacement: List[float]
    direction: Literal["forward", "backward"] = "forward"
    terminated_at: Optional[int] = None

    @validator("step_distances")
    def _check_lengths(cls, value: List[float], values: Dict[str, Any]) -> List[float]:
        points = values.get("points")
        if points is not None and len(value) != max(len(points) - 1, 0):
            raise ValueError("step_distances must have one entry per consecutive pair")
        return value


class ClassificationResult(BaseModel):
    map_class: MapClass
    elliptic_kind: Optional[EllipticKind] = None
    c_estimate: float = Field(..., ge=0)
    dw_label: Optional[str] = None
    diagnostics: Dict[str, Any] = Field(default_factory=dict)


class RetractSample(BaseModel):
    points: List[Point]
    bounded: bool
    boundary_labels_touched: List[str] = Field(default_factory=list)
    spread: float = 0.0
    seed_spread: float = 0.0


class RayDilation(BaseModel):
    """Dilation along one ray together with its evaluation trace."""

    value: float
    t_grid: List[float]
    trace: List[float]
    tail_gap: float
    regime: Literal["exact", "ray-estimate"]


class DilationEntry(BaseModel):
    n: int
    value: float
    tail_gap: float
    t_last: float


class DilationTable(BaseModel):
    label: str
    basepoint: Point
    entries: List[DilationEntry]
    stable: float
    horizon: int
    t_grid: List[float]
    regime: Literal["exact", "ray-estimate"]
    superadditivity_defect: float = 0.0
    ceiling: List[float] = Field(default_factory=list)
    truncated_reason: Optional[str] = None

    def value(self, n: int) -> float:
        for entry in self.entries:
            if entry.n == n:
                return entry.value
        raise KeyError(f"iterate {n} not in table (horizon {self.horizon})")

    def values(self) -> Dict[int, float]:
        return {entry.n: entry.value for entry in self.entries}


class BRFPRecord(BaseModel):
    anchor: BoundaryAnchor
    is_brfp: bool
    log_lambda: Optional[float] = None
    displacement_liminf: float
    displacement_limsup: float
    c_emp: Optional[float] = None
    bracketing_ok: bool = False
    dilation_table: Optional[DilationTable] = None
    classification: BRFPClass = "unknown"

    @property
    def label(self) -> str:
        return self.anchor.label

    @property
    def stable(self) -> Optional[float]:
        return None if self.dilation_table is None else self.dilation_table.stable


class JuliaReport(BaseModel):
    samples: int
    max_violation: float
    error_budget: float
    passed: bool
    mode: JuliaMode
    delta: float = 0.0


class RelationReport(BaseModel):
    """Outcome of a batch of identity checks, one rule per failure."""

    passed: bool
    messages: List[str]
    failed_rules: List[str] = Field(default_factory=list)
    values: Dict[str, float] = Field(default_factory=dict)


class BackwardOrbit(BaseModel):
    points: List[Point]
    construction: Construction
    residuals: List[float]
    terminated_at: Optional[int] = None
    ambiguous_steps: List[int] = Field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return max(self.residuals, default=0.0)


class StepProfile(BaseModel):
    sigma: Dict[int, float]
    spread: Dict[int, float]
    m_max: int
    b_fekete: float = Field(..., ge=0)
    b_estimate: float = Field(..., ge=0)
    growth_model: Literal["linear", "logarithmic"]
    subadditivity_defect: float = 0.0


class SynthesizerState(BaseModel):
    m: int
    c: float
    t_grid: List[float]
    stop_indices: List[int]
    cluster_sizes: List[int]
    cluster_tol: float
    depth: int
    representative_t: float


class SynthesisResult(BaseModel):
    orbit: BackwardOrbit
    state: SynthesizerState
    profile: StepProfile
    stable: float
    proximity_sup: Optional[float] = None


class BatteryReport(BaseModel):
    verdicts: Dict[str, bool]
    values: Dict[str, float] = Field(default_factory=dict)
    limit_label: str
    unanimous: bool
    alarm: bool


class BackwardLimit(BaseModel):
    kind: LimitKind
    label: Optional[str] = None
    b_estimate: Optional[float] = None
    consistent: bool = True


class StepProbeReport(BaseModel):
    steps: List[float]
    step_growth: bool
    cells: int
    cells_occupied: int
    angular_samples: int
    limit_labels: List[str] = Field(default_factory=list)


class ProximityReport(BaseModel):
    distances: List[float]
    sup: float
    growing: bool
