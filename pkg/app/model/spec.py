"""Column description models: component system, streams, products and free splits.

Internal sign convention: feed flows are nonnegative, sidedraw flows nonpositive.
Components are held in ascending volatility order, index 0 being the heaviest (alpha = 1).
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

ThermalState = Literal["saturated-liquid", "saturated-vapor", "partially-vaporized"]
StreamKind = Literal["feed", "sidedraw"]


class ComponentSystem(BaseModel):
    model_config = ConfigDict(frozen=True)

    names: tuple[str, ...]
    alphas: tuple[float, ...]  # relative to the heaviest component
    delta: float | None = None  # initial width of the open top interval, None = derived per section

    @property
    def count(self) -> int:
        return len(self.alphas)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown component {name!r}") from None


class StreamSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    kind: StreamKind
    position: int  # stream sits between SEC_position and SEC_position+1
    flows: tuple[float, ...]  # mol/s, signed
    liquid: tuple[float, ...]
    vapor: tuple[float, ...]
    thermal_state: ThermalState = "saturated-liquid"

    @property
    def is_feed(self) -> bool:
        return self.kind == "feed"

    @property
    def total(self) -> float:
        return sum(self.flows)

    @property
    def vapor_total(self) -> float:
        return sum(self.vapor)


class SplitDof(BaseModel):
    """One free split: `receiver` holds the dof value, `donor` the remainder of the pair total."""

    model_config = ConfigDict(frozen=True)

    component: str
    donor: str
    receiver: str
    bounds: tuple[float, float]


class FixedRecovery(BaseModel):
    model_config = ConfigDict(frozen=True)

    component: str
    stream: str
    fraction: float = Field(ge=0.0, le=1.0)


class ColumnSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = "column"
    components: ComponentSystem
    streams: tuple[StreamSpec, ...]  # top to bottom
    distillate: tuple[float, ...]  # d of SEC_1, mol/s
    condenser: Literal["total"] = "total"
    reference: dict[str, float] = Field(default_factory=dict)

    @property
    def c(self) -> int:
        return self.components.count

    @property
    def alphas(self) -> tuple[float, ...]:
        return self.components.alphas

    @property
    def n_sections(self) -> int:
        return len(self.streams) + 1

    @property
    def feeds(self) -> tuple[StreamSpec, ...]:
        return tuple(s for s in self.streams if s.is_feed)

    @property
    def sidedraws(self) -> tuple[StreamSpec, ...]:
        return tuple(s for s in self.streams if not s.is_feed)

    @property
    def distillate_total(self) -> float:
        return sum(self.distillate)

    @property
    def feed_totals(self) -> tuple[float, ...]:
        """Per-component total fed over all feeds."""
        return tuple(
            sum(s.flows[i] for s in self.feeds) for i in range(self.c)
        )

    def stream(self, name: str) -> StreamSpec:
        for s in self.streams:
            if s.name == name:
                return s
        raise KeyError(f"unknown stream {name!r}")


class FreeSplitSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    base: ColumnSpec
    dofs: tuple[SplitDof, ...]
    fixed_recoveries: tuple[FixedRecovery, ...] = ()
