"""Column-spec validation, inter-section material balances and vapor balances."""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np

from app.config import Settings
from app.model.errors import (
    BadAlphas,
    EmptyStream,
    MassBalanceViolation,
    NonpositiveReflux,
    NonpositiveSectionVapor,
    SignPatternViolation,
    SpecError,
    ThermalStateError,
    ZeroVapor,
)
from app.model.results import SectionState
from app.model.spec import ColumnSpec, StreamSpec

log = logging.getLogger(__name__)

_DEFAULTS = Settings()


def zero_tolerance(spec: ColumnSpec, settings: Settings | None = None) -> float:
    """Absolute flow below which a net flow counts as exactly zero."""
    settings = settings or _DEFAULTS
    total_feed = sum(s.total for s in spec.feeds)
    return settings.zero_flow_rel_tol * max(total_feed, 1.0)


def snap(values: Sequence[float], tol: float) -> tuple[float, ...]:
    return tuple(0.0 if abs(v) < tol else float(v) for v in values)


def sign_pattern_ok(d: Sequence[float]) -> bool:
    """Nonpositive block, zero block, nonnegative block in ascending volatility."""
    neg = [i for i, v in enumerate(d) if v < 0]
    pos = [i for i, v in enumerate(d) if v > 0]
    if not neg or not pos:
        return True
    return max(neg) < min(pos)


def bottoms_flows(spec: ColumnSpec) -> tuple[float, ...]:
    """Bottoms product by overall closure, mol/s (positive)."""
    c = spec.c
    return tuple(
        sum(s.flows[i] for s in spec.streams) - spec.distillate[i] for i in range(c)
    )


def _check_alphas(spec: ColumnSpec) -> None:
    alphas = spec.alphas
    names = spec.components.names
    if len(alphas) < 2:
        raise BadAlphas("need at least two components")
    if len(names) != len(alphas) or len(set(names)) != len(names):
        raise BadAlphas("component names must be unique and match the volatilities")
    if alphas[0] != 1.0:
        raise BadAlphas(f"heaviest component must have alpha = 1, got {alphas[0]}")
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise BadAlphas(f"volatilities must be strictly increasing: {alphas}")
    if spec.components.delta is not None and spec.components.delta <= 0:
        raise BadAlphas("delta must be positive")


def _check_stream(stream: StreamSpec, spec: ColumnSpec, tol: float, rel_tol: float) -> None:
    c = spec.c
    if not (len(stream.flows) == len(stream.liquid) == len(stream.vapor) == c):
        raise SpecError(f"{stream.name}: expected {c} component flows")
    sign = 1.0 if stream.is_feed else -1.0
    for f, l, v in zip(stream.flows, stream.liquid, stream.vapor):
        if abs(f - l - v) > rel_tol * max(abs(f), 1.0):
            raise ThermalStateError(f"{stream.name}: liquid + vapor does not equal the flow")
        if sign * f < -tol or sign * l < -tol or sign * v < -tol:
            kind = "nonnegative" if stream.is_feed else "withdrawals"
            raise SpecError(f"{stream.name}: flows must be {kind}")
    if sum(abs(f) for f in stream.flows) <= tol:
        raise EmptyStream(f"{stream.name} carries no flow")

    liquid = sum(abs(x) for x in stream.liquid)
    vapor = sum(abs(x) for x in stream.vapor)
    state = stream.thermal_state
    if state == "saturated-liquid" and vapor > tol:
        raise ThermalStateError(f"{stream.name}: saturated liquid with vapor flow")
    if state == "saturated-vapor" and liquid > tol:
        raise ThermalStateError(f"{stream.name}: saturated vapor with liquid flow")
    if state == "partially-vaporized":
        if liquid <= tol or vapor <= tol:
            raise ThermalStateError(f"{stream.name}: partially vaporized needs both phases")
        _check_equilibrium(stream, spec.alphas, tol, rel_tol)


def _check_equilibrium(
    stream: StreamSpec, alphas: Sequence[float], tol: float, rel_tol: float
) -> None:
    # v_m = phi * alpha_m * l_m for one scalar phi
    ratios = [
        abs(v) / (a * abs(l))
        for l, v, a in zip(stream.liquid, stream.vapor, alphas)
        if abs(l) > tol
    ]
    for l, v in zip(stream.liquid, stream.vapor):
        if abs(l) <= tol and abs(v) > tol:
            raise ThermalStateError(f"{stream.name}: vapor without liquid for a component")
    phi = ratios[0]
    if any(abs(r - phi) > rel_tol * phi for r in ratios):
        raise ThermalStateError(f"{stream.name}: liquid and vapor are not in equilibrium")


def validate_spec(spec: ColumnSpec, settings: Settings | None = None) -> ColumnSpec:
    """Check every structural invariant of a column description.

    Returns the column with streams ordered top to bottom.
    """
    settings = settings or _DEFAULTS
    _check_alphas(spec)
    c = spec.c
    if len(spec.distillate) != c:
        raise SpecError(f"distillate: expected {c} component flows")

    streams = tuple(sorted(spec.streams, key=lambda s: s.position))
    if not spec.feeds:
        raise SpecError("a column needs at least one feed")
    if [s.position for s in streams] != list(range(1, len(streams) + 1)):
        raise SpecError("stream positions must be 1..N without gaps or repeats")
    if len({s.name for s in streams}) != len(streams):
        raise SpecError("stream names must be unique")
    spec = spec.model_copy(update={"streams": streams})

    tol = zero_tolerance(spec, settings)
    for s in streams:
        _check_stream(s, spec, tol, settings.partial_vapor_rel_tol)

    names = spec.components.names
    if any(x < -tol for x in spec.distillate):
        raise MassBalanceViolation("distillate flows must be nonnegative")
    if spec.distillate_total <= tol:
        raise MassBalanceViolation("distillate is empty")
    for i, b in enumerate(bottoms_flows(spec)):
        if b < -tol:
            raise MassBalanceViolation(
                f"{names[i]}: products take {-b:.6g} mol/s more than is fed"
            )

    for state in net_flows_all_sections(spec, settings):
        if not sign_pattern_ok(state.net_flows):
            raise SignPatternViolation(
                f"SEC{state.index}: net flows {state.net_flows} are not a "
                "nonpositive/zero/nonnegative pattern"
            )
    log.debug("Validated %s: %d components, %d sections", spec.name, c, spec.n_sections)
    return spec


def net_flows_all_sections(
    spec: ColumnSpec, settings: Settings | None = None
) -> list[SectionState]:
    """d of every section, top-down: d(k+1) = d(k) - f(stream between k and k+1)."""
    tol = zero_tolerance(spec, settings)
    d = np.asarray(spec.distillate, dtype=float)
    states = [SectionState(index=1, net_flows=snap(d, tol))]
    for stream in sorted(spec.streams, key=lambda s: s.position):
        d = d - np.asarray(stream.flows, dtype=float)
        states.append(SectionState(index=stream.position + 1, net_flows=snap(d, tol)))
    return states


def vapor_balance_propagate(
    spec: ColumnSpec, anchor: int, v_anchor: float
) -> tuple[float, ...]:
    """Section vapor flows from one known section; crossing a stream upward adds its vapor."""
    n = spec.n_sections
    if not 1 <= anchor <= n:
        raise IndexError(f"section {anchor} outside 1..{n}")
    vapors = [0.0] * (n + 1)  # 1-based
    vapors[anchor] = v_anchor
    by_position = {s.position: s for s in spec.streams}
    for k in range(anchor - 1, 0, -1):
        vapors[k] = vapors[k + 1] + by_position[k].vapor_total
    for k in range(anchor + 1, n + 1):
        vapors[k] = vapors[k - 1] - by_position[k - 1].vapor_total
    result = tuple(vapors[1:])
    bad = [k + 1 for k, v in enumerate(result) if v <= 0]
    if bad:
        raise NonpositiveSectionVapor(
            f"vapor flow nonpositive in SEC{bad[0]} (V = {result[bad[0] - 1]:.6g})"
        )
    return result


def reflux_from_reboiler_duty(spec: ColumnSpec, v_reb: float) -> float:
    """R = (V_SEC1 - D)/D with a total condenser."""
    vapors = vapor_balance_propagate(spec, spec.n_sections, v_reb)
    d_total = spec.distillate_total
    if vapors[0] <= d_total:
        raise NonpositiveReflux(
            f"top vapor {vapors[0]:.6g} does not exceed the distillate {d_total:.6g}"
        )
    return (vapors[0] - d_total) / d_total


def reboiler_duty_from_reflux(spec: ColumnSpec, reflux: float) -> float:
    """Inverse of reflux_from_reboiler_duty: V_SEC1 = (R + 1) D, propagated down."""
    vapors = vapor_balance_propagate(spec, 1, (reflux + 1.0) * spec.distillate_total)
    return vapors[-1]


def hypothetical_liquid(vapor: Sequence[float], alphas: Sequence[float]) -> tuple[float, ...]:
    """Liquid composition in equilibrium with a vapor; sign of the vapor is ignored."""
    v = np.abs(np.asarray(vapor, dtype=float))
    if v.sum() <= 0:
        raise ZeroVapor("hypothetical liquid needs a nonzero vapor flow")
    w = v / np.asarray(alphas, dtype=float)
    return tuple(float(x) for x in w / w.sum())


def liquid_composition(stream: StreamSpec, alphas: Sequence[float]) -> tuple[float, ...]:
    """Normalized liquid-form composition used by the stream root equation."""
    liquid = np.abs(np.asarray(stream.liquid, dtype=float))
    if liquid.sum() > 0:
        return tuple(float(x) for x in liquid / liquid.sum())
    return hypothetical_liquid(stream.vapor, alphas)
