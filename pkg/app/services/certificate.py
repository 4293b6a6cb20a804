"""Residuals of the full minimum-vapor constraint system at a solved column.

Equality blocks report the largest absolute residual, inequality blocks the most
negative slack. A root whose admissible range straddles a pole (the pinch root of a
section with an undecided indicator) is checked in the pole-free form

    V (a_b - g) - sum_{m != b} a_m d_m [1 + (a_b - a_m)/(a_m - g)] - a_b d_b = 0
"""

from __future__ import annotations

import logging
from collections.abc import Sequence

from app.config import Settings
from app.model.results import Certificate, SectionState
from app.model.spec import ColumnSpec
from app.services.core import bottoms_flows
from app.services.feasibility import all_stream_roots, evaluate_column
from app.services.roots import characteristic, composition_side

log = logging.getLogger(__name__)

_DEFAULTS = Settings()

EQUALITY_BLOCKS = ("mass_balance", "root_equations", "stream_roots")
INEQUALITY_BLOCKS = ("bounds", "binaries", "feasibility")


def parse_binary(name: str) -> tuple[int, int]:
    """'mu[SEC2][3]' -> (2, 3)."""
    sec, idx = name.removeprefix("mu[SEC").removesuffix("]").split("][")
    return int(sec), int(idx)


def pole_free_residual(
    d: Sequence[float], vapor: float, alphas: Sequence[float], gamma: float, b: int
) -> float:
    """Root equation multiplied through by (alpha_b - gamma); b is 1-based."""
    ab = alphas[b - 1]
    total = vapor * (ab - gamma) - ab * d[b - 1]
    for m, (a, x) in enumerate(zip(alphas, d), start=1):
        if m != b and x != 0.0:
            total -= a * x * (1.0 + (ab - a) / (a - gamma))
    return total


class _Block:
    def __init__(self, equality: bool) -> None:
        self.equality = equality
        self.value = 0.0
        self.worst = ""

    def add(self, id: str, value: float) -> None:
        if self.equality:
            value = abs(value)
            if not self.worst or value > self.value:
                self.value, self.worst = value, id
        elif not self.worst or value < self.value:
            self.value, self.worst = value, id


def check_constraints(
    spec: ColumnSpec,
    sections: Sequence[SectionState],
    settings: Settings | None = None,
    binaries: dict[str, int] | None = None,
) -> Certificate:
    """Evaluate every constraint block at the given solved section states."""
    settings = settings or _DEFAULTS
    alphas = spec.alphas
    c = spec.c
    off = settings.bound_offset
    binaries = binaries or {}
    straddling = {parse_binary(name) for name in binaries}
    blocks = {name: _Block(True) for name in EQUALITY_BLOCKS}
    blocks.update({name: _Block(False) for name in INEQUALITY_BLOCKS})

    # mass balances across every stream
    for stream in spec.streams:
        k = stream.position
        above, below = sections[k - 1].net_flows, sections[k].net_flows
        for m in range(c):
            blocks["mass_balance"].add(
                f"SEC{k}/SEC{k + 1}:{spec.components.names[m]}",
                above[m] - below[m] - stream.flows[m],
            )

    products = {"distillate": spec.distillate, "bottoms": bottoms_flows(spec)}
    products.update({s.name: tuple(-x for x in s.flows) for s in spec.sidedraws})
    for name, flows in products.items():
        for m, x in enumerate(flows):
            blocks["bounds"].add(f"{name}:{spec.components.names[m]}>=0", x)

    for state in sections:
        k, d, vapor, roots = state.index, state.net_flows, state.vapor, state.roots
        binary = next((b for sec, b in straddling if sec == k), None)
        for r, (gamma, interval, pinned) in enumerate(
            zip(roots.roots, roots.intervals, roots.pinned), start=1
        ):
            if pinned:
                continue
            rid = f"SEC{k}:gamma_{r}"
            if binary is not None and r == roots.pinch_index:
                residual = pole_free_residual(d, vapor, alphas, gamma, binary)
                lo = alphas[binary - 2] if binary > 1 else 0.0
                hi = alphas[binary] if binary < c else None
            else:
                residual = characteristic(d, alphas, gamma) - vapor
                lo = alphas[interval - 2] if interval > 1 else 0.0
                hi = alphas[interval - 1] if interval <= c else None
            blocks["root_equations"].add(rid, residual)
            if roots.tie and r == roots.pinch_index:
                continue
            blocks["bounds"].add(f"{rid}>lower", gamma - (lo + off))
            if hi is not None:
                blocks["bounds"].add(f"{rid}<upper", (hi - off) - gamma)

    stream_roots = all_stream_roots(spec, settings)
    for name, sr in stream_roots.items():
        for j, rho in sr.rho.items():
            blocks["stream_roots"].add(f"{name}:rho_{j}", composition_side(sr.composition, alphas, rho))
            blocks["bounds"].add(f"{name}:rho_{j}>lower", rho - (alphas[j - 1] + off))
            blocks["bounds"].add(f"{name}:rho_{j}<upper", (alphas[j] - off) - rho)

    for name, value in binaries.items():
        sec, i = parse_binary(name)
        d_i = sections[sec - 1].net_flows[i - 1]
        blocks["binaries"].add(f"{name}={value}", d_i if value == 1 else -d_i)
        state = sections[sec - 1]
        gamma = state.roots.pinch_root
        lo, hi = (i - 1, i) if value == 1 else (i, i + 1)
        lo_alpha = alphas[lo - 1] if lo > 0 else 0.0
        blocks["binaries"].add(f"{name}:pinch>lower", gamma - (lo_alpha + off))
        if hi <= c:
            blocks["binaries"].add(f"{name}:pinch<upper", (alphas[hi - 1] - off) - gamma)

    report = evaluate_column(spec, sections, stream_roots, settings)
    for check in report.streams:
        for record in check.records:
            blocks["feasibility"].add(record.id, record.slack)

    values = {name: b.value for name, b in blocks.items()}
    # feasibility records share the evaluator's binding band
    ineq_tol = {n: settings.feas_tol_ineq for n in INEQUALITY_BLOCKS}
    ineq_tol["feasibility"] = settings.bind_tol(spec.alphas)
    ok = all(values[n] <= settings.feas_tol_eq for n in EQUALITY_BLOCKS) and all(
        values[n] >= -ineq_tol[n] for n in INEQUALITY_BLOCKS
    )
    if not ok:
        log.info("Certificate outside tolerance: %s", values)
    return Certificate(
        blocks=values,
        worst={name: b.worst for name, b in blocks.items() if b.worst},
        within_tolerance=ok,
    )
