"""Result rendering: canonical JSON, rich tables and CSV."""

from __future__ import annotations

import json
import math
from typing import Any

import pandas as pd
from pydantic import BaseModel
from rich.console import Console
from rich.table import Table

from app.model.loader import SCHEMA_VERSION
from app.model.results import (
    DecompositionResult,
    FeasibilityReport,
    MinRefluxResult,
    OptimizationResult,
    StageProfile,
)
from app.model.spec import ColumnSpec

SIG_DIGITS = 9


def _round(value: Any) -> Any:
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return str(value)
        return float(f"{value:.{SIG_DIGITS}g}")
    if isinstance(value, dict):
        return {str(k): _round(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round(v) for v in value]
    return value


def canonical_json(command: str, payload: BaseModel | dict) -> str:
    """Sorted keys, floats at 9 significant digits, stable across runs."""
    body = payload.model_dump(mode="python") if isinstance(payload, BaseModel) else payload
    doc = {"schema_version": SCHEMA_VERSION, "command": command, "result": _round(body)}
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _fmt(v: float | None, digits: int = 6) -> str:
    return "-" if v is None else f"{v:.{digits}g}"


def _reference_note(spec: ColumnSpec, key: str, value: float) -> str:
    ref = spec.reference.get(key)
    if ref is None:
        return ""
    dev = (value - ref) / ref * 100 if ref else 0.0
    return f"  (reference {ref:g}, {dev:+.2f}%)"


def minreflux_table(spec: ColumnSpec, result: MinRefluxResult) -> Table:
    t = Table(title=f"{spec.name}: minimum reflux", title_style="bold #00ff88", show_header=False)
    t.add_column("quantity", style="bold")
    t.add_column("value")
    t.add_row("V_reb,min [mol/s]", _fmt(result.v_reb_min) + _reference_note(spec, "v_reb_min", result.v_reb_min))
    t.add_row("R_min", _fmt(result.r_min) + _reference_note(spec, "r_min", result.r_min))
    t.add_row("controlling stream", result.controlling_stream)
    b = result.binding
    t.add_row("binding", f"SEC{b.section} root {b.root_index} = rho_{b.rho_interval} ({b.rho:.6g})")
    for s in result.sections:
        pinch = s.roots.pinch_root if s.roots else None
        t.add_row(f"SEC{s.index}", f"V = {_fmt(s.vapor)}, pinch root {_fmt(pinch)}, mu = {list(s.mu)}")
    if result.ties:
        t.add_row("ties", ", ".join(result.ties))
    return t


def report_table(report: FeasibilityReport) -> Table:
    t = Table(title="feasibility", title_style="bold #00ff88")
    for col in ("id", "left", "right", "slack", "status"):
        t.add_column(col, justify="right" if col in ("left", "right", "slack") else "left")
    styles = {"binding": "yellow", "violated": "bold red", "satisfied": ""}
    for check in report.streams:
        for r in check.records:
            t.add_row(r.id, _fmt(r.left, 9), _fmt(r.right, 9), _fmt(r.slack, 3), r.status, style=styles.get(r.status, ""))
    return t


def decomposition_table(spec: ColumnSpec, result: DecompositionResult) -> Table:
    t = Table(title=f"{spec.name}: column decomposition", title_style="bold #00ff88")
    for col in ("column", "V_min", "R (simple)", "R (MFMP)", "mismatch"):
        t.add_column(col)
    for dc in result.columns:
        mism = ", ".join(spec.components.names[i] for i in dc.column.mismatched) or "-"
        t.add_row(dc.column.name, _fmt(dc.underwood.v_min), _fmt(dc.underwood.r_min), _fmt(dc.r_column), mism)
    t.caption = f"R_min = {_fmt(result.r_min)} ({result.controlling_column})" + _reference_note(
        spec, "decomposition_r_min", result.r_min
    )
    return t


def optimization_table(spec: ColumnSpec, result: OptimizationResult) -> Table:
    t = Table(title=f"{spec.name}: optimal distribution", title_style="bold #00ff88", show_header=False)
    t.add_column("quantity", style="bold")
    t.add_column("value")
    t.add_row("status", result.status)
    t.add_row("V_reb,min [mol/s]", _fmt(result.v_reb_min))
    t.add_row("R_min", _fmt(result.r_min))
    t.add_row("controlling stream", result.controlling_stream or "-")
    for name, flows in result.distribution.items():
        t.add_row(name, "  ".join(f"{n} {v:.4g}" for n, v in zip(spec.components.names, flows)))
    if result.binary_assignment:
        t.add_row("binaries", ", ".join(f"{k}={v}" for k, v in sorted(result.binary_assignment.items())))
    if result.certificate is not None:
        state = "ok" if result.certificate.within_tolerance else "OUT OF TOLERANCE"
        t.add_row("certificate", state)
    t.add_row("evaluations", f"{result.evaluations} ({result.feasible_points} feasible)")
    return t


def profile_frame(spec: ColumnSpec, profile: StageProfile) -> pd.DataFrame:
    names = spec.components.names
    rows = []
    for stage, (section, x, y) in enumerate(zip(profile.stage_sections, profile.x, profile.y), start=1):
        row = {"stage": stage, "section": section}
        row.update({f"x_{n}": v for n, v in zip(names, x)})
        row.update({f"y_{n}": v for n, v in zip(names, y)})
        rows.append(row)
    return pd.DataFrame(rows)


def profile_table(spec: ColumnSpec, profile: StageProfile) -> Table:
    t = Table(title=f"{spec.name}: products at R = {profile.reflux:.6g}", title_style="bold #00ff88")
    t.add_column("product")
    for n in spec.components.names:
        t.add_column(n, justify="right")
    for name, comp in profile.products.items():
        t.add_row(name, *(f"{v:.5f}" for v in comp))
    t.caption = f"{len(profile.x)} stages, {profile.iterations} substitutions, residual {profile.residual:.2g}"
    return t


def print_tables(console: Console, *tables: Table) -> None:
    for table in tables:
        console.print(table)
