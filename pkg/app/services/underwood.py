"""Underwood minimum vapor for simple columns and the per-feed decomposition baseline."""

from __future__ import annotations

import logging
import warnings

from app.config import Settings
from app.model.errors import NoActiveRoot, ProductMismatch, SpecError
from app.model.results import DecomposedColumn, DecompositionResult, SimpleColumn, UnderwoodResult
from app.model.spec import ColumnSpec
from app.services.core import net_flows_all_sections, validate_spec, vapor_balance_propagate, zero_tolerance
from app.services.roots import characteristic, solve_stream_roots

log = logging.getLogger(__name__)

_DEFAULTS = Settings()


def _key_span(col: SimpleColumn, tol: float) -> tuple[float, float] | None:
    in_top = [i for i, x in enumerate(col.top) if x > tol]
    in_bottom = [i for i, x in enumerate(col.bottom) if x > tol]
    if not in_top or not in_bottom:
        return None
    a, b = min(in_top), max(in_bottom)
    lo, hi = sorted((a, b))
    return col.alphas[lo], col.alphas[hi]


def underwood_min_vapor(col: SimpleColumn, settings: Settings | None = None) -> UnderwoodResult:
    """V_min above the feed: the largest sum alpha d/(alpha - theta) over the feed roots theta."""
    settings = settings or _DEFAULTS
    stream_roots = solve_stream_roots(col.feed, col.alphas, form="full", settings=settings)
    thetas = tuple(sorted(stream_roots.rho.values()))
    if not thetas:
        raise NoActiveRoot(f"{col.name}: feed {col.feed.name} has no Underwood root")

    values = [characteristic(col.top, col.alphas, t) for t in thetas]
    k = max(range(len(thetas)), key=values.__getitem__)
    v_min = values[k]

    tol = settings.zero_flow_rel_tol * max(col.feed.total, 1.0)
    span = _key_span(col, tol)
    active = thetas if span is None else tuple(t for t in thetas if span[0] < t < span[1])

    d_total = sum(col.top)
    r_min = (v_min - d_total) / d_total if d_total > tol else None
    log.debug("%s: theta=%s V_min=%.6g", col.name, thetas, v_min)
    return UnderwoodResult(
        v_min=v_min,
        r_min=r_min,
        feed_roots=thetas,
        active_roots=active,
        controlling_root=thetas[k],
    )


def decompose(spec: ColumnSpec, settings: Settings | None = None) -> list[SimpleColumn]:
    """One simple column per feed, products taken from the adjacent section net flows.

    Top product is d of the section above the feed, bottom product is minus d of the
    section below, so the two close exactly on the feed. Entries that are negative or
    larger than the feed are flagged and kept as they are.
    """
    settings = settings or _DEFAULTS
    spec = validate_spec(spec, settings)
    if spec.n_sections < 2:
        raise SpecError("decomposition needs at least two sections")
    tol = zero_tolerance(spec, settings)
    sections = net_flows_all_sections(spec, settings)
    names = spec.components.names

    columns = []
    for feed in spec.feeds:
        p = feed.position
        top = sections[p - 1].net_flows
        bottom = tuple(-x for x in sections[p].net_flows)
        mismatched = tuple(
            i
            for i, (t, b, f) in enumerate(zip(top, bottom, feed.flows))
            if t < -tol or b < -tol or t > f + tol or b > f + tol
        )
        if mismatched:
            detail = ", ".join(f"{names[i]} top={top[i]:.6g} bottom={bottom[i]:.6g}" for i in mismatched)
            message = f"{feed.name}: decomposed products do not fit the feed ({detail})"
            log.warning(message)
            warnings.warn(message, ProductMismatch, stacklevel=2)
        columns.append(
            SimpleColumn(
                name=f"{feed.name}-column",
                feed=feed,
                top=top,
                bottom=bottom,
                alphas=spec.alphas,
                top_section=p,
                bottom_section=p + 1,
                mismatched=mismatched,
            )
        )
    return columns


def decomposition_min_reflux(
    spec: ColumnSpec, settings: Settings | None = None
) -> DecompositionResult:
    """Largest reflux ratio of the column implied by any decomposed simple column."""
    settings = settings or _DEFAULTS
    spec = validate_spec(spec, settings)
    d_total = spec.distillate_total
    results = []
    for col in decompose(spec, settings):
        uw = underwood_min_vapor(col, settings)
        vapors = vapor_balance_propagate(spec, col.top_section, uw.v_min)
        r_column = (vapors[0] - d_total) / d_total
        log.info("%s: V_min=%.6g gives R=%.6g", col.name, uw.v_min, r_column)
        results.append(DecomposedColumn(column=col, underwood=uw, r_column=r_column))
    worst = max(results, key=lambda r: r.r_column)
    return DecompositionResult(
        spec_name=spec.name,
        columns=results,
        r_min=worst.r_column,
        controlling_column=worst.column.name,
    )
