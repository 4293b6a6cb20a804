"""Equilibrium-stage column under constant volatility and constant molar overflow.

Stages are numbered top-down; each section holds `stages_per_section` stages and
the partial reboiler is the last stage. A total condenser returns R*D of the top
vapor as reflux. Feed liquid enters the top stage of the section below the feed
and feed vapor the bottom stage of the section above; a liquid sidedraw leaves
the bottom stage of the section above and a vapor sidedraw the top stage below.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

from app.config import Settings
from app.model.errors import (
    BracketFailure,
    ModelInfeasible,
    NonpositiveSectionVapor,
    NotConverged,
)
from app.model.results import StageProfile
from app.model.spec import ColumnSpec
from app.services.core import (
    bottoms_flows,
    net_flows_all_sections,
    validate_spec,
    vapor_balance_propagate,
)

log = logging.getLogger(__name__)

_DEFAULTS = Settings()


@dataclass
class _Layout:
    """Stage flows of one column at one reflux ratio, as arrays over stages."""

    alphas: np.ndarray
    sections: np.ndarray  # section of each stage, 0 for the reboiler
    l_out: np.ndarray  # liquid leaving each stage, sidedraws included
    l_down: np.ndarray  # liquid passed to the stage below
    v_out: np.ndarray  # vapor leaving each stage, sidedraws included
    v_up: np.ndarray  # vapor passed to the stage above
    feed: np.ndarray  # (stages, c) component inflow
    reflux: float
    liquid: tuple[float, ...]
    vapor: tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.l_out)


def _layout(spec: ColumnSpec, reflux: float, per_section: int, settings: Settings) -> _Layout:
    d_total = spec.distillate_total
    vapors = vapor_balance_propagate(spec, 1, (reflux + 1.0) * d_total)
    states = net_flows_all_sections(spec, settings)
    liquids = tuple(v - sum(s.net_flows) for v, s in zip(vapors, states))
    if any(l <= 0 for l in liquids):
        k = next(i for i, l in enumerate(liquids) if l <= 0) + 1
        raise NonpositiveSectionVapor(f"liquid flow nonpositive in SEC{k} at R={reflux:.6g}")

    n_sec = spec.n_sections
    n = n_sec * per_section + 1
    c = spec.c
    sections = np.array([k // per_section + 1 for k in range(n - 1)] + [0])
    l_out = np.array([liquids[s - 1] for s in sections[:-1]] + [sum(bottoms_flows(spec))])
    v_out = np.array([vapors[s - 1] for s in sections[:-1]] + [vapors[-1]])
    l_down = l_out.copy()
    v_up = v_out.copy()
    feed = np.zeros((n, c))

    for stream in spec.streams:
        upper = stream.position * per_section - 1  # bottom stage of the section above, 0-based
        lower = upper + 1
        liquid = np.asarray(stream.liquid, dtype=float)
        vapor = np.asarray(stream.vapor, dtype=float)
        if stream.is_feed:
            feed[lower] += liquid
            feed[upper] += vapor
        else:
            l_down[upper] += liquid.sum()  # withdrawals are negative
            v_up[lower] += vapor.sum()
    return _Layout(
        alphas=np.asarray(spec.alphas, dtype=float),
        sections=sections,
        l_out=l_out,
        l_down=l_down,
        v_out=v_out,
        v_up=v_up,
        feed=feed,
        reflux=reflux * d_total,
        liquid=liquids,
        vapor=vapors,
    )


def _k_values(s: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    return alphas[None, :] / s[:, None]


def _banded(lay: _Layout, k: np.ndarray, m: int) -> np.ndarray:
    """Tridiagonal balance matrix of component m for fixed K, in banded storage."""
    ab = np.zeros((3, lay.n))
    ab[1] = -(lay.l_out + lay.v_out * k[:, m])
    ab[1, 0] += lay.reflux * k[0, m]
    ab[0, 1:] = lay.v_up[1:] * k[1:, m]  # upper: vapor from the stage below
    ab[2, :-1] = lay.l_down[:-1]  # lower: liquid from the stage above
    return ab


def _profiles(lay: _Layout, s: np.ndarray) -> np.ndarray:
    """Unnormalized liquid fractions for stage divisors s = sum(alpha * x).

    Every balance matrix is a column-dominant M-matrix for positive s, so the
    returned fractions are nonnegative.
    """
    k = _k_values(s, lay.alphas)
    return np.column_stack(
        [linalg.solve_banded((1, 1), _banded(lay, k, m), -lay.feed[:, m]) for m in range(len(lay.alphas))]
    )


def _bubble_residual(u: np.ndarray, lay: _Layout) -> tuple[np.ndarray, np.ndarray]:
    """Stage summation residual and its Jacobian in u = log(s)."""
    s = np.exp(u)
    k = _k_values(s, lay.alphas)
    n = lay.n
    idx = np.arange(n)
    down = lay.v_out.copy()
    down[0] -= lay.reflux
    jac = np.zeros((n, n))
    total = np.zeros(n)
    for m in range(len(lay.alphas)):
        ab = _banded(lay, k, m)
        x = linalg.solve_banded((1, 1), ab, -lay.feed[:, m])
        total += x
        kx = k[:, m] * x
        rhs = np.zeros((n, n))
        rhs[idx, idx] = down * kx
        rhs[idx[:-1], idx[1:]] = -lay.v_up[1:] * kx[1:]
        jac -= linalg.solve_banded((1, 1), ab, rhs)
    return total - 1.0, jac


def _residual(x: np.ndarray, lay: _Layout) -> np.ndarray:
    """Component balances of every stage."""
    y = x * lay.alphas[None, :] / (x @ lay.alphas)[:, None]
    res = lay.feed - lay.l_out[:, None] * x - lay.v_out[:, None] * y
    res[1:] += lay.l_down[:-1, None] * x[:-1]
    res[:-1] += lay.v_up[1:, None] * y[1:]
    res[0] += lay.reflux * y[0]
    return res


def _initial(spec: ColumnSpec, n: int) -> np.ndarray:
    x_top = np.asarray(spec.distillate, dtype=float) / spec.distillate_total
    bottoms = np.asarray(bottoms_flows(spec), dtype=float)
    x_bot = bottoms / bottoms.sum()
    t = np.linspace(0.0, 1.0, n)[:, None]
    x = (1 - t) * x_top + t * x_bot
    x = np.clip(x, 1e-6, None)
    return x / x.sum(axis=1, keepdims=True)


def _warm_start(lay: _Layout, x: np.ndarray, sweeps: int) -> np.ndarray:
    """Bubble-point substitution sweeps; returns log stage divisors."""
    s = x @ lay.alphas
    for _ in range(sweeps):
        raw = _profiles(lay, s)
        new = (raw / raw.sum(axis=1, keepdims=True)) @ lay.alphas
        change = float(np.max(np.abs(new / s - 1.0)))
        s = new
        if change < 1e-6:
            break
    return np.log(s)


def simulate_column(
    spec: ColumnSpec,
    reflux: float,
    stages_per_section: int | None = None,
    settings: Settings | None = None,
) -> StageProfile:
    """Converged liquid and vapor profiles at reflux ratio R with product flows held fixed.

    Unknowns are the stage divisors s_j = sum(alpha * x_j); for given s each
    component balance is linear and tridiagonal, and Newton's method drives
    every stage summation sum(x_j) - 1 to zero with the analytic Jacobian.
    """
    settings = settings or _DEFAULTS
    spec = validate_spec(spec, settings)
    if reflux <= 0:
        raise ValueError(f"reflux ratio must be positive, got {reflux}")
    per_section = stages_per_section or settings.stages_per_section
    lay = _layout(spec, reflux, per_section, settings)
    scale = max(float(np.max(lay.feed.sum(axis=1))), 1.0)

    u = _warm_start(lay, _initial(spec, lay.n), sweeps=min(50, settings.max_iterations))
    sol = optimize.root(
        _bubble_residual,
        u,
        args=(lay,),
        jac=True,
        method="hybr",
        options={"xtol": 1e-14, "maxfev": 20 * settings.max_iterations},
    )
    u = sol.x
    iterations = int(sol.nfev)
    for _ in range(5):
        g, jac = _bubble_residual(u, lay)
        if float(np.max(np.abs(g))) <= 1e-2 * settings.residual_tol:
            break
        try:
            u = u - linalg.solve(jac, g)
        except linalg.LinAlgError:
            break
        iterations += 1

    raw = _profiles(lay, np.exp(u))
    if not np.all(np.isfinite(raw)) or np.any(raw.sum(axis=1) <= 0):
        raise NotConverged(f"stage equations at R={reflux:.6g} diverged", iterations=iterations)
    x = raw / raw.sum(axis=1, keepdims=True)
    residual = float(np.max(np.abs(_residual(x, lay))))
    if not residual <= settings.residual_tol * scale:
        raise NotConverged(
            f"stage equations at R={reflux:.6g} did not converge (residual {residual:.3g})",
            iterations=iterations,
            residual=residual,
        )

    y = x * lay.alphas[None, :] / (x @ lay.alphas)[:, None]
    products = {"distillate": tuple(float(v) for v in y[0])}
    for stream in spec.sidedraws:
        upper = stream.position * per_section - 1
        drawn = -np.asarray(stream.liquid, dtype=float).sum() * x[upper]
        drawn = drawn - np.asarray(stream.vapor, dtype=float).sum() * y[upper + 1]
        products[stream.name] = tuple(float(v) for v in drawn / drawn.sum())
    products["bottoms"] = tuple(float(v) for v in x[-1])
    log.info("Converged R=%.6g after %d evaluations, residual %.3g", reflux, iterations, residual)
    return StageProfile(
        reflux=reflux,
        stage_sections=tuple(int(s) for s in lay.sections),
        x=[tuple(float(v) for v in row) for row in x],
        y=[tuple(float(v) for v in row) for row in y],
        liquid=lay.liquid,
        vapor=lay.vapor,
        products=products,
        iterations=iterations,
        residual=residual,
    )


def product_targets(spec: ColumnSpec) -> dict[str, dict[int, float]]:
    """Mole fractions each product must reach, for its dominant components.

    A component is constrained in a product when the product recovers most of it
    (recovery >= 0.5) or recovers more of it than of any other component.
    """
    feeds = np.asarray(spec.feed_totals, dtype=float)
    flows = {"distillate": np.asarray(spec.distillate, dtype=float)}
    for s in spec.sidedraws:
        flows[s.name] = -np.asarray(s.flows, dtype=float)
    flows["bottoms"] = np.asarray(bottoms_flows(spec), dtype=float)
    targets = {}
    for name, f in flows.items():
        recovery = np.divide(f, feeds, out=np.zeros_like(f), where=feeds > 0)
        keep = set(np.flatnonzero(recovery >= 0.5)) | {int(np.argmax(recovery))}
        targets[name] = {int(m): float(f[m] / f.sum()) for m in sorted(keep)}
    return targets


def meets_targets(profile: StageProfile, targets: dict[str, dict[int, float]], tol: float) -> bool:
    return all(
        profile.products[name][m] >= want - tol
        for name, wants in targets.items()
        for m, want in wants.items()
    )


def _on_spec(spec: ColumnSpec, reflux: float, per_section: int, settings: Settings, targets) -> bool:
    try:
        profile = simulate_column(spec, reflux, per_section, settings)
    except ModelInfeasible as e:
        log.debug("R=%.6g treated as off-spec: %s", reflux, e)
        return False
    return meets_targets(profile, targets, settings.purity_tol)


def min_reflux_by_bisection(
    spec: ColumnSpec,
    stages_per_section: int | None = None,
    settings: Settings | None = None,
    bracket: Sequence[float] = (0.05, 10.0),
) -> float:
    """Smallest reflux ratio at which the simulated products meet their targets."""
    settings = settings or _DEFAULTS
    spec = validate_spec(spec, settings)
    per_section = stages_per_section or settings.stages_per_section
    targets = product_targets(spec)
    lo, hi = bracket

    for _ in range(5):
        if _on_spec(spec, hi, per_section, settings, targets):
            break
        hi *= 2.0
    else:
        raise BracketFailure(f"products off target even at R={hi:.6g}")
    if _on_spec(spec, lo, per_section, settings, targets):
        raise BracketFailure(f"products already on target at R={lo:.6g}")

    while hi - lo > settings.bisection_width:
        mid = 0.5 * (lo + hi)
        if _on_spec(spec, mid, per_section, settings, targets):
            hi = mid
        else:
            lo = mid
        log.debug("bisection bracket [%.6g, %.6g]", lo, hi)
    return 0.5 * (lo + hi)
