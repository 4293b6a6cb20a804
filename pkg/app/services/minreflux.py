"""Minimum reboiler vapor duty of a multi-feed, multi-product column.

Candidate controlling streams pin one section root to a stream root. Each pin
fixes that section's vapor flow; vapor balances give every other section, and the
candidate survives only if every stream's feasibility records hold. The smallest
surviving reboiler duty is the minimum.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from app.config import Settings
from app.model.errors import ModelInfeasible, NoFeasibleCandidate, NumericalError
from app.model.results import (
    BindingEquality,
    Candidate,
    FeasibilityReport,
    MinRefluxResult,
    SectionState,
    StreamRoots,
)
from app.model.spec import ColumnSpec
from app.services.core import (
    net_flows_all_sections,
    reflux_from_reboiler_duty,
    validate_spec,
    vapor_balance_propagate,
)
from app.services.feasibility import (
    all_stream_roots,
    evaluate_column,
    feed_index_set,
    sidedraw_index_set,
    solve_sections,
)
from app.services.roots import characteristic, indicators, structural_interval

log = logging.getLogger(__name__)

_DEFAULTS = Settings()


@dataclass
class ColumnContext:
    """V-independent quantities shared by every candidate of one column."""

    spec: ColumnSpec
    settings: Settings
    sections: list[SectionState]  # d plus structural mu/K
    stream_roots: dict[str, StreamRoots]

    @property
    def bind_tol(self) -> float:
        return self.settings.bind_tol(self.spec.alphas)


@dataclass
class VrebOutcome:
    v_reb: float | None
    reason: str | None = None
    sections: list[SectionState] = field(default_factory=list)
    report: FeasibilityReport | None = None

    @property
    def feasible(self) -> bool:
        return self.v_reb is not None


@dataclass(frozen=True)
class _Pin:
    source: str
    stream: str
    position: int  # stream position, orders ties
    interval: int
    section: int
    root_index: int
    rho_interval: int
    rho: float


def build_context(spec: ColumnSpec, settings: Settings | None = None) -> ColumnContext:
    settings = settings or _DEFAULTS
    spec = validate_spec(spec, settings)
    c = spec.c
    sections = []
    for state in net_flows_all_sections(spec, settings):
        mu, k_ind = indicators(structural_interval(state.net_flows), c)
        sections.append(state.model_copy(update={"mu": mu, "k_ind": k_ind}))
    return ColumnContext(
        spec=spec,
        settings=settings,
        sections=sections,
        stream_roots=all_stream_roots(spec, settings),
    )


def get_vreb(ctx: ColumnContext, section: int, v_section: float) -> VrebOutcome:
    """Propagate V from one section, solve every section and check every stream."""
    spec = ctx.spec
    if v_section <= 0:
        return VrebOutcome(None, f"pinned vapor {v_section:.6g} is not positive")
    try:
        vapors = vapor_balance_propagate(spec, section, v_section)
        sections = solve_sections(spec, vapors, ctx.settings)
    except (NumericalError, ModelInfeasible) as e:
        return VrebOutcome(None, str(e))
    report = evaluate_column(spec, sections, ctx.stream_roots, ctx.settings, stop_early=True)
    if not report.feasible:
        return VrebOutcome(None, report.reason, sections, report)
    return VrebOutcome(vapors[-1], None, sections, report)


def _feed_pins(ctx: ColumnContext) -> list[_Pin]:
    pins = []
    for stream in ctx.spec.feeds:
        p = stream.position
        top, bot = ctx.sections[p - 1], ctx.sections[p]
        rho = ctx.stream_roots[stream.name].rho
        for i in feed_index_set(top.k_ind, bot.k_ind):
            if i - 1 in rho:
                pins.append(
                    _Pin(f"{stream.name}:feed-pin", stream.name, p, i, p, i, i - 1, rho[i - 1])
                )
    return pins


def _sidedraw_feasible_pins(ctx: ColumnContext, position: int) -> list[_Pin]:
    stream = ctx.spec.streams[position - 1]
    k_top = ctx.sections[position - 1].k_ind
    rho = ctx.stream_roots[stream.name].rho
    pins = []
    for m in range(1, ctx.spec.c + 1):
        j = m if k_top[m - 1] == 0 else m - 1
        if j in rho:
            pins.append(
                _Pin(
                    f"{stream.name}:sidedraw-feasible", stream.name, position, m,
                    position, m, j, rho[j],
                )
            )
    return pins


def _sidedraw_pins(ctx: ColumnContext) -> list[_Pin]:
    pins = []
    for stream in ctx.spec.sidedraws:
        p = stream.position
        pins += _sidedraw_feasible_pins(ctx, p)
        top, bot = ctx.sections[p - 1], ctx.sections[p]
        rho = ctx.stream_roots[stream.name].rho
        for i in sidedraw_index_set(top.k_ind, bot.k_ind):
            if i - 1 in rho:
                pins.append(
                    _Pin(f"{stream.name}:sidedraw-pin", stream.name, p, i, p, i - 1, i - 1, rho[i - 1])
                )
    return pins


def _dedupe(pins: list[_Pin]) -> list[_Pin]:
    seen: set[tuple[int, int, str, int]] = set()
    unique = []
    for pin in pins:
        key = (pin.section, pin.root_index, pin.stream, pin.rho_interval)
        if key not in seen:
            seen.add(key)
            unique.append(pin)
    return unique


def _evaluate_pin(ctx: ColumnContext, pin: _Pin) -> tuple[Candidate, VrebOutcome]:
    d = ctx.sections[pin.section - 1].net_flows
    v_section = characteristic(d, ctx.spec.alphas, pin.rho)
    outcome = get_vreb(ctx, pin.section, v_section)
    if outcome.feasible:
        root = outcome.sections[pin.section - 1].roots.roots[pin.root_index - 1]
        tol = ctx.bind_tol + 1e-9 * abs(pin.rho)
        if abs(root - pin.rho) > tol:
            outcome = VrebOutcome(
                None,
                f"root {pin.root_index} of SEC{pin.section} is {root:.9g}, not the pinned {pin.rho:.9g}",
            )
    candidate = Candidate(
        source=pin.source,
        stream=pin.stream,
        section=pin.section,
        root_index=pin.root_index,
        rho_interval=pin.rho_interval,
        v_section=v_section,
        v_reb=outcome.v_reb,
        feasible=outcome.feasible,
        reason=outcome.reason,
    )
    log.debug(
        "%s gamma_%d^SEC%d <- rho_%d: V=%.6g -> %s",
        pin.source, pin.root_index, pin.section, pin.rho_interval, v_section,
        f"V_reb={outcome.v_reb:.6g}" if outcome.feasible else outcome.reason,
    )
    return candidate, outcome


def sidedraw_feasible(ctx: ColumnContext, position: int) -> Candidate | None:
    """Best candidate from pinning every admissible TOPW root of one sidedraw, or None."""
    best: Candidate | None = None
    for pin in _sidedraw_feasible_pins(ctx, position):
        candidate, _ = _evaluate_pin(ctx, pin)
        if candidate.feasible and (best is None or candidate.v_reb < best.v_reb):
            best = candidate
    return best


def vreb_min(spec: ColumnSpec, settings: Settings | None = None) -> MinRefluxResult:
    """Minimum reboiler vapor duty and reflux ratio, with the controlling stream."""
    ctx = build_context(spec, settings)
    spec = ctx.spec
    pins = _dedupe(_sidedraw_pins(ctx) + _feed_pins(ctx))

    candidates: list[Candidate] = []
    feasible: list[tuple[_Pin, Candidate, VrebOutcome]] = []
    for pin in pins:
        candidate, outcome = _evaluate_pin(ctx, pin)
        candidates.append(candidate)
        if outcome.feasible:
            feasible.append((pin, candidate, outcome))

    if not feasible:
        raise NoFeasibleCandidate(
            f"{spec.name}: none of {len(candidates)} candidates gives a feasible column",
            candidates,
        )

    v_best = min(c.v_reb for _, c, _ in feasible)
    tie_tol = 1e-9 * v_best
    ties = [t for t in feasible if t[1].v_reb <= v_best + tie_tol]
    pin, candidate, outcome = min(ties, key=lambda t: (t[0].position, t[1].v_reb))

    report = evaluate_column(spec, outcome.sections, ctx.stream_roots, ctx.settings)
    r_min = reflux_from_reboiler_duty(spec, candidate.v_reb)
    log.info(
        "%s: V_reb,min=%.6g R_min=%.6g controlled by %s", spec.name, candidate.v_reb, r_min,
        pin.stream,
    )
    return MinRefluxResult(
        spec_name=spec.name,
        v_reb_min=candidate.v_reb,
        r_min=r_min,
        controlling_stream=pin.stream,
        binding=BindingEquality(
            stream=pin.stream,
            interval=pin.interval,
            section=pin.section,
            root_index=pin.root_index,
            rho_interval=pin.rho_interval,
            rho=pin.rho,
        ),
        sections=outcome.sections,
        report=report,
        candidates=candidates,
        ties=sorted({t[1].source for t in ties}) if len(ties) > 1 else [],
    )
