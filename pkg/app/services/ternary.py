"""Composition geometry at minimum reflux: pure components, streams, pinch vertices, profiles.

Points are collected into one pandas frame. For three components the frame also carries
equilateral-triangle coordinates, with the heaviest component at the origin, the middle one
at (1, 0) and the lightest at the apex.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from app.model.errors import NotTernary  # noqa: E402
from app.model.results import MinRefluxResult, StageProfile  # noqa: E402
from app.model.spec import ColumnSpec  # noqa: E402
from app.services.core import liquid_composition  # noqa: E402
from app.services.pinch import pinch_geometry  # noqa: E402

log = logging.getLogger(__name__)

SQRT3OVER2 = np.sqrt(3) / 2.0

_SECTION_COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red", "tab:purple", "tab:brown")


def project_point(x: Sequence[float]) -> tuple[float, float]:
    """Map a ternary composition onto the plane."""
    if len(x) != 3:
        raise NotTernary(f"projection needs 3 components, got {len(x)}")
    b, c = x[1], x[2]
    return float(b + c / 2.0), float(SQRT3OVER2 * c)


def _row(kind: str, label: str, section: int, x: Sequence[float], names: Sequence[str]) -> dict:
    row = {"kind": kind, "label": label, "section": section}
    row.update({f"x_{n}": float(v) for n, v in zip(names, x)})
    return row


def geometry_frame(
    spec: ColumnSpec,
    result: MinRefluxResult,
    profile: StageProfile | None = None,
    *,
    project: bool = True,
) -> pd.DataFrame:
    """One row per point: kind is vertex, stream, pinch, pinch-vertex or profile."""
    names = spec.components.names
    c = spec.c
    if project and c != 3:
        raise NotTernary(f"ternary projection needs 3 components, {spec.name} has {c}")

    rows = []
    for m, name in enumerate(names):
        rows.append(_row("vertex", name, 0, np.eye(c)[m], names))
    for stream in spec.streams:
        rows.append(_row("stream", stream.name, stream.position, liquid_composition(stream, spec.alphas), names))
    for sec in pinch_geometry(result.sections, spec.alphas).sections:
        for r, z in enumerate(sec.vertices, start=1):
            kind = "pinch" if r == sec.pinch_vertex else "pinch-vertex"
            rows.append(_row(kind, f"Z{r}", sec.section, z, names))
    if profile is not None:
        for stage, (section, x) in enumerate(zip(profile.stage_sections, profile.x), start=1):
            rows.append(_row("profile", str(stage), section, x, names))

    frame = pd.DataFrame(rows)
    if project:
        cols = [f"x_{n}" for n in names]
        xy = np.array([project_point(p) for p in frame[cols].to_numpy()])
        frame["X"] = xy[:, 0]
        frame["Y"] = xy[:, 1]
    log.debug("Geometry of %s: %d points", spec.name, len(frame))
    return frame


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, float_format="%.9g")
    return path


def write_svg(frame: pd.DataFrame, path: Path, title: str | None = None) -> Path:
    """Standalone SVG: triangle, pinch simplices per section, streams and profile."""
    if "X" not in frame.columns:
        raise NotTernary("frame has no ternary coordinates")
    fig, ax = plt.subplots(figsize=(6, 5.5))
    corners = frame[frame["kind"] == "vertex"]
    outline = np.vstack([corners[["X", "Y"]].to_numpy(), corners[["X", "Y"]].to_numpy()[:1]])
    ax.plot(outline[:, 0], outline[:, 1], color="black", linewidth=1.0)
    for _, p in corners.iterrows():
        ax.annotate(p["label"], (p["X"], p["Y"]), textcoords="offset points", xytext=(0, 6), ha="center")

    simplex = frame[frame["kind"].isin(("pinch", "pinch-vertex"))]
    for section, group in simplex.groupby("section"):
        color = _SECTION_COLORS[(int(section) - 1) % len(_SECTION_COLORS)]
        pts = group[["X", "Y"]].to_numpy()
        ax.fill(pts[:, 0], pts[:, 1], color=color, alpha=0.12, label=f"SEC{section}")
        ax.plot(np.append(pts[:, 0], pts[0, 0]), np.append(pts[:, 1], pts[0, 1]), color=color, linewidth=0.8)
        pinch = group[group["kind"] == "pinch"]
        ax.scatter(pinch["X"], pinch["Y"], color=color, marker="s", s=24, zorder=3)

    streams = frame[frame["kind"] == "stream"]
    ax.scatter(streams["X"], streams["Y"], color="black", marker="o", s=18, zorder=4)
    for _, p in streams.iterrows():
        ax.annotate(p["label"], (p["X"], p["Y"]), textcoords="offset points", xytext=(4, 4), fontsize=8)

    stages = frame[frame["kind"] == "profile"]
    if not stages.empty:
        ax.plot(stages["X"], stages["Y"], color="gray", linewidth=0.8, marker=".", markersize=2, label="profile")

    ax.set_aspect("equal")
    ax.axis("off")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", fontsize=8, frameon=False)
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)
    return path


def ternary_export(
    spec: ColumnSpec,
    result: MinRefluxResult,
    profile: StageProfile | None = None,
    out_dir: Path | None = None,
    *,
    project: bool = True,
) -> dict[str, Path]:
    """Write <name>_geometry.csv and, for three components, <name>_ternary.svg."""
    frame = geometry_frame(spec, result, profile, project=project)
    out_dir = Path(out_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {"csv": write_csv(frame, out_dir / f"{spec.name}_geometry.csv")}
    if project:
        written["svg"] = write_svg(frame, out_dir / f"{spec.name}_ternary.svg", title=f"{spec.name}, R = {result.r_min:.4g}")
    log.info("Exported geometry of %s to %s", spec.name, out_dir)
    return written
