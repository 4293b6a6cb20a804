"""Pydantic models for solver state and results."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from app.model.spec import StreamSpec

Status = Literal["satisfied", "binding", "violated"]


class RootSet(BaseModel):
    model_config = ConfigDict(frozen=True)

    roots: tuple[float, ...]  # ascending
    intervals: tuple[int, ...]  # i: root in (alpha_{i-1}, alpha_i); c+1 = above alpha_c
    pinned: tuple[bool, ...]
    pinch_index: int  # 1-based position in `roots`
    tie: bool = False  # a solved root landed on a pinned alpha

    @property
    def pinch_root(self) -> float:
        return self.roots[self.pinch_index - 1]


class StreamRoots(BaseModel):
    model_config = ConfigDict(frozen=True)

    stream: str
    rho: dict[int, float]  # j -> rho_j in (alpha_j, alpha_{j+1})
    source_form: Literal["liquid", "full"] = "liquid"
    extra_root: float | None = None  # full-stream form only, <= 0
    composition: tuple[float, ...]  # normalized liquid-form composition


class SectionState(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: int
    net_flows: tuple[float, ...]  # d, mol/s
    vapor: float = 0.0  # V, mol/s
    roots: RootSet | None = None
    mu: tuple[int, ...] = ()  # length c+1
    k_ind: tuple[int, ...] = ()

    @property
    def liquid(self) -> float:
        return self.vapor - sum(self.net_flows)

    @property
    def pinch_interval(self) -> int:
        return self.mu.index(1) + 1


class ConstraintRecord(BaseModel):
    """left >= right is required; slack = left - right."""

    id: str
    family: str
    index: int
    left: float
    right: float
    slack: float
    status: Status


class StreamCheck(BaseModel):
    stream: str
    kind: Literal["feed", "sidedraw"]
    index_set: tuple[int, ...] = ()
    records: list[ConstraintRecord] = Field(default_factory=list)

    @property
    def violated(self) -> list[ConstraintRecord]:
        return [r for r in self.records if r.status == "violated"]

    @property
    def binding(self) -> list[ConstraintRecord]:
        return [r for r in self.records if r.status == "binding"]


class FeasibilityReport(BaseModel):
    streams: list[StreamCheck] = Field(default_factory=list)
    feasible: bool = True
    binding_stream: str | None = None
    reason: str | None = None  # set when sections could not be solved at all

    def check(self, stream: str) -> StreamCheck:
        for s in self.streams:
            if s.stream == stream:
                return s
        raise KeyError(stream)


class Candidate(BaseModel):
    source: str  # e.g. "F1:pin", "S1:sidedraw-feasible"
    stream: str
    section: int
    root_index: int
    rho_interval: int
    v_section: float
    v_reb: float | None = None
    feasible: bool = False
    reason: str | None = None


class BindingEquality(BaseModel):
    stream: str
    interval: int  # the i of the index set the pin came from
    section: int
    root_index: int
    rho_interval: int
    rho: float

    @property
    def label(self) -> str:
        return (
            f"gamma_{self.root_index}^SEC{self.section} = "
            f"rho_{self.rho_interval},{self.stream}"
        )


class MinRefluxResult(BaseModel):
    spec_name: str
    v_reb_min: float  # mol/s
    r_min: float
    controlling_stream: str
    binding: BindingEquality
    sections: list[SectionState]
    report: FeasibilityReport
    candidates: list[Candidate]
    ties: list[str] = Field(default_factory=list)


class SimpleColumn(BaseModel):
    name: str
    feed: StreamSpec
    top: tuple[float, ...]  # mol/s
    bottom: tuple[float, ...]
    alphas: tuple[float, ...]
    top_section: int = 1
    bottom_section: int = 2
    mismatched: tuple[int, ...] = ()  # component indices flagged as ProductMismatch


class UnderwoodResult(BaseModel):
    v_min: float  # vapor above the feed, mol/s
    r_min: float | None  # (V_min - D)/D, None when D <= 0
    feed_roots: tuple[float, ...]
    active_roots: tuple[float, ...]
    controlling_root: float


class DecomposedColumn(BaseModel):
    column: SimpleColumn
    underwood: UnderwoodResult
    r_column: float  # reflux of the MFMP column implied by this simple column


class DecompositionResult(BaseModel):
    spec_name: str
    columns: list[DecomposedColumn]
    r_min: float
    controlling_column: str


class Certificate(BaseModel):
    blocks: dict[str, float]  # block name -> max residual (inequalities: worst violation)
    worst: dict[str, str] = Field(default_factory=dict)  # block name -> id of the worst entry
    within_tolerance: bool


class OptimizationResult(BaseModel):
    spec_name: str
    status: Literal["optimal", "infeasible"]
    v_reb_min: float | None = None
    r_min: float | None = None
    controlling_stream: str | None = None
    dof_values: tuple[float, ...] = ()
    distribution: dict[str, tuple[float, ...]] = Field(default_factory=dict)
    binary_assignment: dict[str, int] = Field(default_factory=dict)
    assignments_seen: list[dict[str, int]] = Field(default_factory=list)
    certificate: Certificate | None = None
    evaluations: int = 0
    feasible_points: int = 0


class StageProfile(BaseModel):
    reflux: float
    stage_sections: tuple[int, ...]  # section of each stage, 0 = reboiler
    x: list[tuple[float, ...]]  # liquid mole fractions, top-down
    y: list[tuple[float, ...]]
    liquid: tuple[float, ...]  # L per section, mol/s
    vapor: tuple[float, ...]  # V per section, mol/s
    products: dict[str, tuple[float, ...]]  # product name -> achieved composition
    iterations: int
    residual: float


class SectionPinch(BaseModel):
    section: int
    vertices: list[tuple[float, ...]]  # Z_1..Z_c
    pinch_vertex: int  # 1-based
    fixed_point_residual: float


class PinchGeometry(BaseModel):
    sections: list[SectionPinch]
