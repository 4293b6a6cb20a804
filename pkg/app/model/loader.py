"""Read column description files (JSON) into ColumnSpec / FreeSplitSpec."""

from __future__ import annotations

import json
import logging
from importlib import resources
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, Field, ValidationError
from scipy.optimize import brentq

from app.model.errors import SpecFileError
from app.model.spec import (
    ColumnSpec,
    ComponentSystem,
    FixedRecovery,
    FreeSplitSpec,
    SplitDof,
    StreamSpec,
    ThermalState,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class ComponentEntry(BaseModel):
    name: str
    alpha: float = Field(gt=0)


class StreamEntry(BaseModel):
    name: str
    kind: Literal["feed", "sidedraw"] = "feed"
    thermal_state: ThermalState = "saturated-liquid"
    flows: dict[str, float]  # mol/s, withdrawals given as positive numbers
    vapor_fraction: float | None = Field(default=None, gt=0, lt=1)
    liquid: dict[str, float] | None = None
    vapor: dict[str, float] | None = None


class DofEntry(BaseModel):
    component: str
    donor: str
    receiver: str
    bounds: tuple[float, float]


class RecoveryEntry(BaseModel):
    component: str
    stream: str
    fraction: float = Field(ge=0, le=1)


class FreeSplitsEntry(BaseModel):
    dofs: list[DofEntry]
    fixed_recoveries: list[RecoveryEntry] = Field(default_factory=list)


class SpecFile(BaseModel):
    schema_version: int = SCHEMA_VERSION
    name: str = "column"
    components: list[ComponentEntry]
    delta: float | None = None
    streams: list[StreamEntry]  # top to bottom
    distillate: dict[str, float]
    free_splits: FreeSplitsEntry | None = None
    reference: dict[str, float] = Field(default_factory=dict)


def flash_split(
    flows: tuple[float, ...], alphas: tuple[float, ...], vapor_fraction: float
) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Constant-volatility flash: v_m = phi alpha_m l_m with sum v = beta F."""
    total = sum(flows)
    target = vapor_fraction * total

    def excess(phi: float) -> float:
        return sum(f * phi * a / (1.0 + phi * a) for f, a in zip(flows, alphas)) - target

    hi = 1.0
    while excess(hi) < 0:
        hi *= 2.0
    phi = brentq(excess, 0.0, hi, xtol=1e-15, rtol=1e-15)
    liquid = tuple(f / (1.0 + phi * a) for f, a in zip(flows, alphas))
    vapor = tuple(f - l for f, l in zip(flows, liquid))
    return liquid, vapor


def _vector(names: tuple[str, ...], values: dict[str, float], where: str) -> tuple[float, ...]:
    unknown = set(values) - set(names)
    if unknown:
        raise SpecFileError(f"{where}: unknown component(s) {sorted(unknown)}")
    return tuple(float(values.get(n, 0.0)) for n in names)


def _stream(entry: StreamEntry, position: int, system: ComponentSystem) -> StreamSpec:
    names, alphas = system.names, system.alphas
    sign = 1.0 if entry.kind == "feed" else -1.0
    flows = _vector(names, entry.flows, entry.name)
    if entry.liquid is not None or entry.vapor is not None:
        liquid = _vector(names, entry.liquid or {}, entry.name)
        vapor = _vector(names, entry.vapor or {}, entry.name)
    elif entry.thermal_state == "saturated-liquid":
        liquid, vapor = flows, (0.0,) * len(flows)
    elif entry.thermal_state == "saturated-vapor":
        liquid, vapor = (0.0,) * len(flows), flows
    else:
        if entry.vapor_fraction is None:
            raise SpecFileError(f"{entry.name}: partially vaporized stream needs vapor_fraction")
        liquid, vapor = flash_split(flows, alphas, entry.vapor_fraction)
    return StreamSpec(
        name=entry.name,
        kind=entry.kind,
        position=position,
        flows=tuple(sign * x for x in flows),
        liquid=tuple(sign * x for x in liquid),
        vapor=tuple(sign * x for x in vapor),
        thermal_state=entry.thermal_state,
    )


def _column(doc: SpecFile) -> ColumnSpec:
    comps = sorted(doc.components, key=lambda c: c.alpha)
    system = ComponentSystem(
        names=tuple(c.name for c in comps),
        alphas=tuple(c.alpha for c in comps),
        delta=doc.delta,
    )
    streams = tuple(_stream(s, k, system) for k, s in enumerate(doc.streams, start=1))
    return ColumnSpec(
        name=doc.name,
        components=system,
        streams=streams,
        distillate=_vector(system.names, doc.distillate, "distillate"),
        reference=doc.reference,
    )


def parse_document(data: dict[str, Any]) -> SpecFile:
    try:
        doc = SpecFile.model_validate(data)
    except ValidationError as e:
        raise SpecFileError(f"invalid column description: {e}") from e
    if doc.schema_version != SCHEMA_VERSION:
        raise SpecFileError(f"unsupported schema_version {doc.schema_version}")
    return doc


def read_document(path: Path) -> SpecFile:
    try:
        with open(path) as f:
            data = json.load(f)
    except OSError as e:
        raise SpecFileError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise SpecFileError(f"{path.name} is not valid JSON: {e}") from e
    return parse_document(data)


def spec_from_document(doc: SpecFile) -> ColumnSpec:
    return _column(doc)


def free_split_from_document(doc: SpecFile) -> FreeSplitSpec:
    if doc.free_splits is None:
        raise SpecFileError(f"{doc.name} has no free_splits block")
    return FreeSplitSpec(
        base=_column(doc),
        dofs=tuple(SplitDof(**d.model_dump()) for d in doc.free_splits.dofs),
        fixed_recoveries=tuple(
            FixedRecovery(**r.model_dump()) for r in doc.free_splits.fixed_recoveries
        ),
    )


def load_spec(path: Path | str) -> ColumnSpec:
    return spec_from_document(read_document(Path(path)))


def load_free_split(path: Path | str) -> FreeSplitSpec:
    return free_split_from_document(read_document(Path(path)))


def bundled_examples() -> list[str]:
    """Names of the column files shipped with the package."""
    folder = resources.files("app.model") / "examples"
    return sorted(p.name.removesuffix(".json") for p in folder.iterdir() if p.name.endswith(".json"))


def example_path(name: str) -> Path:
    folder = resources.files("app.model") / "examples"
    path = Path(str(folder / f"{name.removesuffix('.json')}.json"))
    if not path.exists():
        raise SpecFileError(f"no bundled example {name!r}; have {bundled_examples()}")
    return path
