"""Product distribution that minimizes the reboiler vapor duty.

Outer search over the free splits (uniform grid, then a shrinking stencil search),
inner vreb_min on each resolved column. Pinch-interval binaries are not branched
on: each inner solve settles them, and the assignment at the optimum is reported.
"""

from __future__ import annotations

import asyncio
import itertools
import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from app.config import Settings
from app.model.errors import ModelInfeasible, NumericalError, SpecError
from app.model.loader import flash_split
from app.model.results import MinRefluxResult, OptimizationResult
from app.model.spec import ColumnSpec, FreeSplitSpec, SplitDof, StreamSpec
from app.services.cache import EvaluationCache, dof_key
from app.services.certificate import check_constraints, parse_binary
from app.services.core import bottoms_flows, net_flows_all_sections, sign_pattern_ok
from app.services.minreflux import vreb_min
from app.services.roots import structural_interval

log = logging.getLogger(__name__)

_DEFAULTS = Settings()
_PRODUCTS = ("distillate", "bottoms")
_MAX_REFINE_ROUNDS = 2000


@dataclass(frozen=True)
class PointEval:
    values: tuple[float, ...]
    v_reb: float | None
    result: MinRefluxResult | None = None
    spec: ColumnSpec | None = None
    reason: str | None = None

    @property
    def feasible(self) -> bool:
        return self.v_reb is not None


def _check_dof(fs: FreeSplitSpec, dof: SplitDof) -> None:
    base = fs.base
    base.components.index(dof.component)
    for name in (dof.donor, dof.receiver):
        if name in _PRODUCTS:
            continue
        if base.stream(name).is_feed:
            raise SpecError(f"split of {dof.component}: {name} is a feed, not a product")
    if dof.donor == dof.receiver:
        raise SpecError(f"split of {dof.component}: donor and receiver are both {dof.donor}")
    lo, hi = dof.bounds
    if lo < 0 or hi < lo:
        raise SpecError(f"split of {dof.component}: bounds {dof.bounds} are not a nonnegative range")


def _product_flow(spec: ColumnSpec, name: str, m: int) -> float:
    if name == "distillate":
        return spec.distillate[m]
    if name == "bottoms":
        return bottoms_flows(spec)[m]
    return -spec.stream(name).flows[m]


def pair_total(spec: ColumnSpec, dof: SplitDof) -> float:
    """Flow of the split component shared by donor and receiver in the base column."""
    m = spec.components.index(dof.component)
    return _product_flow(spec, dof.donor, m) + _product_flow(spec, dof.receiver, m)


def dof_bounds(fs: FreeSplitSpec) -> list[tuple[float, float]]:
    """Box of the search after fixed recoveries collapse their dofs to a point."""
    for dof in fs.dofs:
        _check_dof(fs, dof)
    bounds = [tuple(d.bounds) for d in fs.dofs]
    feed_totals = fs.base.feed_totals
    for rec in fs.fixed_recoveries:
        m = fs.base.components.index(rec.component)
        target = rec.fraction * feed_totals[m]
        for k, dof in enumerate(fs.dofs):
            if dof.component != rec.component:
                continue
            if rec.stream == dof.receiver:
                bounds[k] = (target, target)
                break
            if rec.stream == dof.donor:
                value = pair_total(fs.base, dof) - target
                bounds[k] = (value, value)
                break
        else:
            raise SpecError(
                f"recovery of {rec.component} in {rec.stream} does not match any free split"
            )
    return bounds


def _with_flows(stream: StreamSpec, magnitudes: Sequence[float], alphas) -> StreamSpec:
    flows = tuple(-abs(x) for x in magnitudes)
    if stream.thermal_state == "saturated-vapor":
        liquid, vapor = (0.0,) * len(flows), flows
    elif stream.thermal_state == "partially-vaporized":
        beta = stream.vapor_total / stream.total
        l, v = flash_split(tuple(abs(x) for x in flows), alphas, beta)
        liquid, vapor = tuple(-x for x in l), tuple(-x for x in v)
    else:
        liquid, vapor = flows, (0.0,) * len(flows)
    return stream.model_copy(update={"flows": flows, "liquid": liquid, "vapor": vapor})


def resolve(fs: FreeSplitSpec, values: Sequence[float]) -> ColumnSpec:
    """Column with every free split set: receiver takes the value, donor the remainder."""
    base = fs.base
    distillate = list(base.distillate)
    draws = {s.name: [-x for x in s.flows] for s in base.sidedraws}
    for dof, x in zip(fs.dofs, values):
        m = base.components.index(dof.component)
        total = pair_total(base, dof)
        for name, flow in ((dof.receiver, x), (dof.donor, total - x)):
            if name == "distillate":
                distillate[m] = flow
            elif name != "bottoms":
                draws[name][m] = flow
    streams = tuple(
        _with_flows(s, draws[s.name], base.alphas) if not s.is_feed else s for s in base.streams
    )
    return base.model_copy(update={"streams": streams, "distillate": tuple(distillate)})


def _affine_net_flows(fs: FreeSplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """d of every section as d0 + G x, from resolving the unit vectors."""
    n = len(fs.dofs)

    def flat(values: Sequence[float]) -> np.ndarray:
        spec = resolve(fs, values)
        return np.array([s.net_flows for s in net_flows_all_sections(spec)], dtype=float)

    zero = [0.0] * n
    d0 = flat(zero)
    grads = np.stack([flat([1.0 if j == k else 0.0 for j in range(n)]) - d0 for k in range(n)])
    return d0, grads


def enumerate_binaries(fs: FreeSplitSpec) -> list[dict[str, int]]:
    """All 0/1 assignments of the pinch indicators the free splits leave undecided.

    A section needs one indicator when some component's net flow changes sign over
    the dof box; it is named after the lower of the candidate pinch intervals.
    """
    if not fs.dofs:
        return [{}]
    bounds = dof_bounds(fs)
    d0, grads = _affine_net_flows(fs)
    tol = 1e-9 * max(sum(fs.base.feed_totals), 1.0)
    corners = list(itertools.product(*bounds))
    names = []
    for k in range(d0.shape[0]):
        values = [d0[k] + sum(x * g[k] for x, g in zip(corner, grads)) for corner in corners]
        lows = np.min(values, axis=0)
        highs = np.max(values, axis=0)
        if not np.any((lows < -tol) & (highs > tol)):
            continue
        candidates = set()
        for d in values:
            snapped = [0.0 if abs(x) < tol else float(x) for x in d]
            if any(snapped) and sign_pattern_ok(snapped):
                candidates.add(structural_interval(snapped))
        if len(candidates) > 1:
            names.append(f"mu[SEC{k + 1}][{min(candidates)}]")
    return [dict(zip(names, bits)) for bits in itertools.product((0, 1), repeat=len(names))]


def binary_values(names: Sequence[str], result: MinRefluxResult) -> dict[str, int]:
    """Read the named indicators off the section states of a solved column."""
    out = {}
    for name in names:
        sec, idx = parse_binary(name)
        out[name] = result.sections[sec - 1].mu[idx - 1]
    return out


def evaluate_point(
    fs: FreeSplitSpec,
    values: Sequence[float],
    settings: Settings | None = None,
    cache: EvaluationCache | None = None,
) -> PointEval:
    settings = settings or _DEFAULTS
    key = dof_key(values)
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            return hit
    try:
        spec = resolve(fs, values)
        result = vreb_min(spec, settings)
        point = PointEval(key, result.v_reb_min, result, spec)
    except (SpecError, ModelInfeasible, NumericalError) as e:
        point = PointEval(key, None, reason=f"{type(e).__name__}: {e}")
    log.debug("dofs=%s -> %s", key, point.v_reb if point.feasible else point.reason)
    if cache is not None:
        cache.set(key, point)
    return point


async def evaluate_points(
    fs: FreeSplitSpec,
    points: Sequence[Sequence[float]],
    settings: Settings | None = None,
    cache: EvaluationCache | None = None,
) -> list[PointEval]:
    """Evaluate points concurrently, at most `settings.threads` at a time; order preserved."""
    settings = settings or _DEFAULTS
    sem = asyncio.Semaphore(settings.threads)

    async def _eval_one(values: Sequence[float]) -> PointEval:
        async with sem:
            return await asyncio.to_thread(evaluate_point, fs, values, settings, cache)

    return list(await asyncio.gather(*[_eval_one(p) for p in points]))


def _best(points: Sequence[PointEval]) -> PointEval | None:
    feasible = [p for p in points if p.feasible]
    if not feasible:
        return None
    v = min(p.v_reb for p in feasible)
    # flat directions resolve to the smallest dof vector
    ties = [p for p in feasible if p.v_reb <= v + 1e-9 * abs(v)]
    return min(ties, key=lambda p: p.values)


def grid_points(bounds: Sequence[tuple[float, float]], resolution: int) -> list[tuple[float, ...]]:
    axes = [
        np.linspace(lo, hi, resolution) if hi > lo else np.array([lo]) for lo, hi in bounds
    ]
    return [tuple(float(x) for x in p) for p in itertools.product(*axes)]


async def refine(
    fs: FreeSplitSpec,
    start: PointEval,
    bounds: Sequence[tuple[float, float]],
    steps: Sequence[float],
    settings: Settings | None = None,
    cache: EvaluationCache | None = None,
) -> PointEval:
    """Stencil search: move to the best neighbour, halve the step when the centre wins."""
    settings = settings or _DEFAULTS
    m = settings.refine_stencil
    steps = list(steps)
    centre = start
    offsets = [o for o in itertools.product(range(-m, m + 1), repeat=len(steps)) if any(o)]
    for _ in range(_MAX_REFINE_ROUNDS):
        if max(steps, default=0.0) < settings.refine_min_step:
            return centre
        neighbours = []
        for offset in offsets:
            p = tuple(
                min(max(x + o * s, lo), hi)
                for x, o, s, (lo, hi) in zip(centre.values, offset, steps, bounds)
            )
            if dof_key(p) != centre.values:
                neighbours.append(p)
        evaluated = await evaluate_points(fs, neighbours, settings, cache)
        best = _best([centre, *evaluated])
        if best.values == centre.values:
            steps = [s / 2.0 for s in steps]
        else:
            centre = best
    log.warning("Refinement stopped after %d rounds at %s", _MAX_REFINE_ROUNDS, centre.values)
    return centre


def _distribution(spec: ColumnSpec) -> dict[str, tuple[float, ...]]:
    out = {"distillate": spec.distillate}
    for s in spec.sidedraws:
        out[s.name] = tuple(-x for x in s.flows)
    out["bottoms"] = bottoms_flows(spec)
    return out


async def optimize_distribution_async(
    fs: FreeSplitSpec, settings: Settings | None = None
) -> OptimizationResult:
    settings = settings or _DEFAULTS
    bounds = dof_bounds(fs)
    binaries = enumerate_binaries(fs)
    names = list(binaries[0])
    cache = EvaluationCache()
    resolution = settings.grid_resolution

    grid = grid_points(bounds, resolution)
    log.info("Evaluating %d grid points over %d free splits", len(grid), len(bounds))
    evaluated = await evaluate_points(fs, grid, settings, cache)
    feasible = [p for p in evaluated if p.feasible]
    seen = []
    for p in feasible:
        assignment = binary_values(names, p.result)
        if assignment not in seen:
            seen.append(assignment)

    best = _best(evaluated)
    if best is None:
        log.info(
            "%s: no feasible point in %d evaluations (%d cache hits, %d misses)",
            fs.base.name, len(evaluated), cache.hits, cache.misses,
        )
        return OptimizationResult(
            spec_name=fs.base.name,
            status="infeasible",
            assignments_seen=seen,
            evaluations=len(cache),
        )

    steps = [(hi - lo) / (resolution - 1) for lo, hi in bounds]
    if any(steps):
        best = await refine(fs, best, bounds, steps, settings, cache)

    assignment = binary_values(names, best.result)
    certificate = check_constraints(best.spec, best.result.sections, settings, assignment)
    log.info(
        "%s: V_reb,min=%.6g at %s (%d evaluations, %d cache hits, %d misses)",
        fs.base.name, best.v_reb, best.values, len(cache), cache.hits, cache.misses,
    )
    return OptimizationResult(
        spec_name=fs.base.name,
        status="optimal",
        v_reb_min=best.v_reb,
        r_min=best.result.r_min,
        controlling_stream=best.result.controlling_stream,
        dof_values=best.values,
        distribution=_distribution(best.spec),
        binary_assignment=assignment,
        assignments_seen=seen,
        certificate=certificate,
        evaluations=len(cache),
        feasible_points=len(feasible),
    )


def optimize_distribution(fs: FreeSplitSpec, settings: Settings | None = None) -> OptimizationResult:
    return asyncio.run(optimize_distribution_async(fs, settings))
