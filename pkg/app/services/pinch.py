"""Pinch compositions of column sections and the downward stage map."""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np

from app.model.errors import DegenerateSection, NegativeComposition, NumericalError
from app.model.results import PinchGeometry, SectionPinch, SectionState

log = logging.getLogger(__name__)

_NEGATIVE_TOL = 1e-12
_CLOSURE_TOL = 1e-9


def stage_map_down(
    x: Sequence[float],
    liquid: float,
    vapor: float,
    d: Sequence[float],
    alphas: Sequence[float],
    *,
    check_sign: bool = True,
) -> np.ndarray:
    """Liquid leaving the stage below: operating line, then constant-volatility equilibrium.

    `check_sign=False` lets the map run on points outside the composition simplex,
    such as pinch vertices of a section whose simplex sticks out of it.
    """
    if vapor <= 0:
        raise DegenerateSection(f"section vapor must be positive, got {vapor:.6g}")
    y = (liquid * np.asarray(x, dtype=float) + np.asarray(d, dtype=float)) / vapor
    if check_sign and np.any(y < -_NEGATIVE_TOL):
        raise NegativeComposition(f"operating line gives a negative vapor fraction: {y}")
    if abs(y.sum() - 1.0) > _CLOSURE_TOL:
        raise NumericalError(f"operating line does not close: sum y = {y.sum():.12g}")
    w = y / np.asarray(alphas, dtype=float)
    return w / w.sum()


def pinch_compositions(state: SectionState, alphas: Sequence[float]) -> SectionPinch:
    """Vertices Z_r of the section pinch simplex, one per characteristic root.

    Z_r,m = gamma_r d_m / (L (alpha_m - gamma_r)); a pinned root gives the unit
    vector of its component.
    """
    liquid = state.liquid
    if abs(liquid) <= 1e-12 * max(state.vapor, 1.0):
        raise DegenerateSection(f"SEC{state.index} has no liquid flow")
    roots = state.roots
    a = np.asarray(alphas, dtype=float)
    d = np.asarray(state.net_flows, dtype=float)
    c = len(a)

    vertices: list[tuple[float, ...]] = []
    residual = 0.0
    for gamma, pinned in zip(roots.roots, roots.pinned):
        if pinned:
            z = np.zeros(c)
            z[int(np.argmin(np.abs(a - gamma)))] = 1.0
        else:
            z = np.zeros(c)
            nz = d != 0.0
            z[nz] = gamma * d[nz] / (liquid * (a[nz] - gamma))
            try:
                mapped = stage_map_down(z, liquid, state.vapor, d, a, check_sign=False)
                residual = max(residual, float(np.max(np.abs(mapped - z))))
            except NumericalError as e:
                log.warning("SEC%d vertex at %.9g is not a fixed point: %s", state.index, gamma, e)
                residual = float("inf")
        vertices.append(tuple(float(v) for v in z))

    return SectionPinch(
        section=state.index,
        vertices=vertices,
        pinch_vertex=roots.pinch_index,
        fixed_point_residual=residual,
    )


def pinch_geometry(sections: Sequence[SectionState], alphas: Sequence[float]) -> PinchGeometry:
    return PinchGeometry(sections=[pinch_compositions(s, alphas) for s in sections])
