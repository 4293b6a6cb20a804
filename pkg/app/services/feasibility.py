"""Index sets and feasibility constraints for feeds and sidedraws.

Every constraint is a record `left >= right`. Records are evaluated in root space
once the pinch indicators of both adjacent sections are known.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence

from app.config import Settings
from app.model.errors import MissingRho, ModelInfeasible, NumericalError, PinchOrderViolation
from app.model.results import (
    ConstraintRecord,
    FeasibilityReport,
    RootSet,
    SectionState,
    StreamCheck,
    StreamRoots,
)
from app.model.spec import ColumnSpec
from app.services.core import net_flows_all_sections, vapor_balance_propagate
from app.services.roots import composition_side, indicators, solve_roots, solve_stream_roots

log = logging.getLogger(__name__)

_DEFAULTS = Settings()


def pinch_position(k_ind: Sequence[int]) -> int:
    """1-based interval holding the pinch, read off the prefix indicator."""
    return list(k_ind).index(1) + 1


def feed_index_set(k_top: Sequence[int], k_bot: Sequence[int]) -> tuple[int, ...]:
    """I_F = {i in 2..c : K_i(top) - K_{i-1}(bottom) = 1}."""
    p_top, p_bot = pinch_position(k_top), pinch_position(k_bot)
    if p_top > p_bot:
        raise PinchOrderViolation(
            f"feed above pinch interval {p_top} sits over a section pinched in {p_bot}"
        )
    c = len(k_top) - 1
    return tuple(i for i in range(2, c + 1) if k_top[i - 1] - k_bot[i - 2] == 1)


def sidedraw_index_set(k_top: Sequence[int], k_bot: Sequence[int]) -> tuple[int, ...]:
    """I_S = {i in 2..c : K_i(bottom) - K_{i-1}(top) = 1}."""
    p_top, p_bot = pinch_position(k_top), pinch_position(k_bot)
    if p_top < p_bot:
        raise PinchOrderViolation(
            f"sidedraw below pinch interval {p_top} sits over a section pinched in {p_bot}"
        )
    c = len(k_top) - 1
    return tuple(i for i in range(2, c + 1) if k_bot[i - 1] - k_top[i - 2] == 1)


def _weighted_position(mu: Sequence[int]) -> int:
    return sum(i * m for i, m in enumerate(mu, start=1))


def feed_index_range(mu_top: Sequence[int], mu_bot: Sequence[int]) -> tuple[int, ...]:
    """Interval form of I_F: max(2, sum i mu_top) .. min(c, sum i mu_bot)."""
    c = len(mu_top) - 1
    return tuple(range(max(2, _weighted_position(mu_top)), min(c, _weighted_position(mu_bot)) + 1))


def sidedraw_index_range(mu_top: Sequence[int], mu_bot: Sequence[int]) -> tuple[int, ...]:
    c = len(mu_top) - 1
    return tuple(range(max(2, _weighted_position(mu_bot)), min(c, _weighted_position(mu_top)) + 1))


def make_record(
    id: str, family: str, index: int, left: float, right: float, bind_tol: float
) -> ConstraintRecord:
    slack = left - right
    if abs(slack) <= bind_tol:
        status = "binding"
    elif slack < 0:
        status = "violated"
    else:
        status = "satisfied"
    return ConstraintRecord(
        id=id, family=family, index=index, left=left, right=right, slack=slack, status=status
    )


def paired_interval(roots: RootSet) -> int | None:
    """Interval holding two solved roots of a section, if any."""
    seen: set[int] = set()
    for interval, pinned in zip(roots.intervals, roots.pinned):
        if pinned:
            continue
        if interval in seen:
            return interval
        seen.add(interval)
    return None


def check_feed(
    gamma_top: Sequence[float],
    gamma_bot: Sequence[float],
    rho: StreamRoots,
    index_set: Sequence[int],
    *,
    bind_tol: float = 1e-7,
    strict_missing_rho: bool = False,
    paired_top: int | None = None,
    paired_bot: int | None = None,
) -> list[ConstraintRecord]:
    """gamma_i(top) >= rho_{i-1} >= gamma_{i-1}(bottom) for every i in I_F.

    When a neighbouring section holds both of its roots for interval i, rho can meet
    that section's other root first. The half facing that section is then replaced by
    the common-face record gamma_i(top) >= gamma_{i-1}(bottom), which binds exactly
    where both sections share rho.
    """
    name = rho.stream
    records: list[ConstraintRecord] = []
    for i in index_set:
        top, bot = gamma_top[i - 1], gamma_bot[i - 2]
        pair = make_record(f"{name}:feed-pair:{i}", "feed-pair", i, top, bot, bind_tol)
        r = rho.rho.get(i - 1)
        if r is None:
            if strict_missing_rho:
                raise MissingRho(f"{name} has no root rho_{i - 1}")
            records.append(pair)
            continue
        upper = lower = pair
        if i != paired_bot:
            upper = make_record(f"{name}:feed-top:{i}", "feed", i, top, r, bind_tol)
        if i != paired_top:
            lower = make_record(f"{name}:feed-bottom:{i}", "feed", i, r, bot, bind_tol)
        records += [upper] if upper is lower else [upper, lower]
    return records


def check_sidedraw(
    gamma_top: Sequence[float],
    gamma_bot: Sequence[float],
    rho: StreamRoots,
    index_set: Sequence[int],
    *,
    bind_tol: float = 1e-7,
    strict_missing_rho: bool = False,
) -> list[ConstraintRecord]:
    """gamma_{i-1}(top) <= rho_{i-1} <= gamma_i(bottom) for every i in I_S."""
    name = rho.stream
    records: list[ConstraintRecord] = []
    for i in index_set:
        top, bot = gamma_top[i - 2], gamma_bot[i - 1]
        r = rho.rho.get(i - 1)
        if r is None:
            if strict_missing_rho:
                raise MissingRho(f"{name} has no root rho_{i - 1}")
            records.append(
                make_record(f"{name}:sidedraw-pair:{i}", "sidedraw-pair", i, bot, top, bind_tol)
            )
            continue
        records.append(make_record(f"{name}:sidedraw-top:{i}", "sidedraw", i, r, top, bind_tol))
        records.append(make_record(f"{name}:sidedraw-bottom:{i}", "sidedraw", i, bot, r, bind_tol))
    return records


def _profile_records(
    label: str,
    k_ind: Sequence[int],
    gamma: Sequence[float],
    pinned: Sequence[bool],
    rho: StreamRoots,
    alphas: Sequence[float],
    bind_tol: float,
) -> list[ConstraintRecord]:
    name = rho.stream
    c = len(gamma)
    records: list[ConstraintRecord] = []
    for i in range(1, c + 1):
        above = k_ind[i - 1] == 1
        # K_i = 1: gamma_i >= rho_{i-1};  K_i = 0: gamma_i <= rho_i
        j = i - 1 if above else i
        if (above and i == 1) or (not above and i == c):
            continue
        r = rho.rho.get(j)
        rid = f"{name}:profile-{label}:{i}"
        if r is not None:
            left, right = (gamma[i - 1], r) if above else (r, gamma[i - 1])
            records.append(make_record(rid, "profile", i, left, right, bind_tol))
        elif not (pinned and pinned[i - 1]):
            side = composition_side(rho.composition, alphas, gamma[i - 1])
            records.append(
                make_record(rid, "profile-composition", i, side if above else -side, 0.0, bind_tol)
            )
    return records


def check_sidedraw_on_profile(
    k_top: Sequence[int],
    k_bot: Sequence[int],
    gamma_top: Sequence[float],
    gamma_bot: Sequence[float],
    rho: StreamRoots,
    *,
    alphas: Sequence[float],
    pinned_top: Sequence[bool] = (),
    pinned_bot: Sequence[bool] = (),
    bind_tol: float = 1e-7,
) -> list[ConstraintRecord]:
    """The draw composition must lie on the profiles of both adjacent sections.

    Where the needed rho root does not exist the same comparison is made on the draw
    composition itself: sign of sum alpha x/(alpha - gamma_i), pinned roots excluded.
    """
    return _profile_records(
        "top", k_top, gamma_top, pinned_top, rho, alphas, bind_tol
    ) + _profile_records("bottom", k_bot, gamma_bot, pinned_bot, rho, alphas, bind_tol)


def _pinch_order_check(name: str, kind: str, p_top: int, p_bot: int) -> StreamCheck:
    left, right = (p_bot, p_top) if kind == "feed" else (p_top, p_bot)
    record = ConstraintRecord(
        id=f"{name}:pinch-order",
        family="pinch-order",
        index=0,
        left=float(left),
        right=float(right),
        slack=float(left - right),
        status="violated",
    )
    return StreamCheck(stream=name, kind=kind, records=[record])


def check_stream(
    spec: ColumnSpec,
    position: int,
    sections: Sequence[SectionState],
    rho: StreamRoots,
    settings: Settings | None = None,
) -> StreamCheck:
    """All records for the stream between SEC_position and SEC_position+1."""
    settings = settings or _DEFAULTS
    stream = spec.streams[position - 1]
    top, bot = sections[position - 1], sections[position]
    bind_tol = settings.bind_tol(spec.alphas)
    g_top, g_bot = top.roots.roots, bot.roots.roots
    kind = "feed" if stream.is_feed else "sidedraw"
    try:
        if stream.is_feed:
            index_set = feed_index_set(top.k_ind, bot.k_ind)
        else:
            index_set = sidedraw_index_set(top.k_ind, bot.k_ind)
    except PinchOrderViolation:
        return _pinch_order_check(
            stream.name, kind, pinch_position(top.k_ind), pinch_position(bot.k_ind)
        )

    opts = {"bind_tol": bind_tol, "strict_missing_rho": settings.strict_missing_rho}
    if stream.is_feed:
        records = check_feed(
            g_top,
            g_bot,
            rho,
            index_set,
            paired_top=paired_interval(top.roots),
            paired_bot=paired_interval(bot.roots),
            **opts,
        )
    else:
        records = check_sidedraw(g_top, g_bot, rho, index_set, **opts)
        if settings.profile_checks:
            records += check_sidedraw_on_profile(
                top.k_ind,
                bot.k_ind,
                g_top,
                g_bot,
                rho,
                alphas=spec.alphas,
                pinned_top=top.roots.pinned,
                pinned_bot=bot.roots.pinned,
                bind_tol=bind_tol,
            )
    return StreamCheck(stream=stream.name, kind=kind, index_set=index_set, records=records)


def all_stream_roots(
    spec: ColumnSpec, settings: Settings | None = None
) -> dict[str, StreamRoots]:
    return {s.name: solve_stream_roots(s, spec.alphas, settings=settings) for s in spec.streams}


def solve_sections(
    spec: ColumnSpec, vapors: Sequence[float], settings: Settings | None = None
) -> list[SectionState]:
    """Roots and indicators of every section at the given vapor flows."""
    settings = settings or _DEFAULTS
    c = spec.c
    states = []
    for state, vapor in zip(net_flows_all_sections(spec, settings), vapors):
        roots = solve_roots(state.net_flows, vapor, spec.alphas, settings, spec.components.delta)
        mu, k_ind = indicators(roots.intervals[roots.pinch - 1], c)
        states.append(
            state.model_copy(
                update={"vapor": vapor, "roots": roots.to_model(), "mu": mu, "k_ind": k_ind}
            )
        )
    return states


def evaluate_column(
    spec: ColumnSpec,
    sections: Sequence[SectionState],
    stream_roots: Mapping[str, StreamRoots],
    settings: Settings | None = None,
    *,
    stop_early: bool = False,
) -> FeasibilityReport:
    checks: list[StreamCheck] = []
    for stream in spec.streams:
        check = check_stream(spec, stream.position, sections, stream_roots[stream.name], settings)
        checks.append(check)
        if stop_early and check.violated:
            break
    feasible = not any(ch.violated for ch in checks)
    binding = next((ch.stream for ch in checks if ch.binding), None) if feasible else None
    reason = None
    if not feasible:
        first = next(r for ch in checks for r in ch.records if r.status == "violated")
        reason = f"{first.id} violated by {-first.slack:.3g}"
    return FeasibilityReport(streams=checks, feasible=feasible, binding_stream=binding, reason=reason)


def evaluate_feasibility(
    spec: ColumnSpec,
    v_reb: float,
    settings: Settings | None = None,
    stream_roots: Mapping[str, StreamRoots] | None = None,
) -> FeasibilityReport:
    """Full report at a given reboiler vapor duty; never raises for an infeasible column."""
    settings = settings or _DEFAULTS
    stream_roots = stream_roots or all_stream_roots(spec, settings)
    try:
        vapors = vapor_balance_propagate(spec, spec.n_sections, v_reb)
        sections = solve_sections(spec, vapors, settings)
    except (NumericalError, ModelInfeasible) as e:
        log.debug("No section states at V_reb=%.6g: %s", v_reb, e)
        return FeasibilityReport(feasible=False, reason=str(e))
    return evaluate_column(spec, sections, stream_roots, settings)
