"""Command-line surface: mfmpcli <command> <spec> [options]."""

from __future__ import annotations

import argparse
import logging
import shutil
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Literal

import pandas as pd
from pydantic import BaseModel, Field, ValidationError
from rich.console import Console
from rich.logging import RichHandler

from app.cli import render
from app.config import Settings, load_settings
from app.model.errors import MfmpError, ModelInfeasible, NoFeasibleCandidate, SpecError, SpecFileError
from app.model.loader import (
    bundled_examples,
    example_path,
    free_split_from_document,
    read_document,
    spec_from_document,
)
from app.model.spec import ColumnSpec
from app.services.core import validate_spec
from app.services.minreflux import vreb_min
from app.services.optimizer import optimize_distribution
from app.services.simulator import min_reflux_by_bisection, simulate_column
from app.services.ternary import ternary_export
from app.services.underwood import decomposition_min_reflux

log = logging.getLogger(__name__)

Command = Literal["minreflux", "optimize", "decompose", "simulate", "ternary-export", "validate"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2


class RunConfig(BaseModel):
    command: Command | None = None
    input: str | None = None
    out: Path | None = None
    format: Literal["text", "json", "csv"] | None = None
    grid: int | None = Field(default=None, ge=2, le=1024)
    stages: int | None = Field(default=None, ge=1, le=1000)
    reflux: float | None = Field(default=None, gt=0)
    tol_bind: float | None = Field(default=None, gt=0, lt=1e-2)
    seed_docs: Path | None = None
    no_profile_checks: bool = False
    verbose: int = 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfmpcli",
        description="Minimum reflux of multi-feed, multi-product distillation columns",
    )
    parser.add_argument("--seed-docs", type=Path, metavar="DIR", help="copy the bundled column files into DIR")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    sub = parser.add_subparsers(dest="command")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", help="column file (JSON) or the name of a bundled example")
    common.add_argument("--format", choices=("text", "json", "csv"))
    common.add_argument("--out", type=Path, help="output file (directory for ternary-export)")
    common.add_argument("--tol-bind", type=float, help="relative binding tolerance")
    common.add_argument("--no-profile-checks", action="store_true", help="skip the pinch-profile constraints of sidedraws")
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)

    sub.add_parser("validate", parents=[common], help="check a column file")
    sub.add_parser("minreflux", parents=[common], help="minimum reboiler duty and reflux ratio")
    sub.add_parser("decompose", parents=[common], help="baseline from simple-column decomposition")
    opt = sub.add_parser("optimize", parents=[common], help="optimal product distribution over free splits")
    opt.add_argument("--grid", type=int, help="grid points per free split")
    sim = sub.add_parser("simulate", parents=[common], help="stage-by-stage column at a given or minimal reflux")
    sim.add_argument("--stages", type=int, help="stages per section")
    sim.add_argument("--reflux", type=float, help="reflux ratio; bisect for the minimum when omitted")
    tern = sub.add_parser("ternary-export", parents=[common], help="pinch simplices and profile as CSV/SVG")
    tern.add_argument("--stages", type=int, help="stages per section of the exported profile")
    tern.add_argument("--reflux", type=float, help="reflux ratio of the exported profile")
    return parser


def parse_args(argv: Sequence[str] | None = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    raw = {k.replace("-", "_"): v for k, v in vars(args).items() if v is not None}
    return RunConfig(**raw)


def setup_logging(level: str, verbose: int) -> None:
    if verbose >= 2:
        level = "DEBUG"
    elif verbose == 1:
        level = "INFO"
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def resolve_input(value: str) -> Path:
    path = Path(value)
    if path.exists():
        return path
    if path.suffix == ".json" or len(path.parts) > 1:
        raise SpecFileError(f"no such file: {value}")
    return example_path(value)


def seed_docs(target: Path) -> list[Path]:
    target.mkdir(parents=True, exist_ok=True)
    written = []
    for name in bundled_examples():
        written.append(Path(shutil.copy(example_path(name), target / f"{name}.json")))
    log.info("Seeded %d column files into %s", len(written), target)
    return written


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        log.info("Wrote %s", out)


class _Runner:
    """Dispatch one RunConfig; each command returns its exit code."""

    def __init__(self, cfg: RunConfig, settings: Settings, console: Console | None = None) -> None:
        self.cfg = cfg
        self.settings = settings
        self.fmt = cfg.format or settings.output_format
        self.console = console or Console()

    def _doc(self):
        return read_document(resolve_input(self.cfg.input))

    def _spec(self) -> ColumnSpec:
        return spec_from_document(self._doc())

    def _tables(self, *tables) -> None:
        if self.cfg.out is None:
            render.print_tables(self.console, *tables)
        else:
            with self.cfg.out.open("w") as f:
                render.print_tables(Console(file=f, width=120), *tables)

    def validate(self) -> int:
        doc = self._doc()
        spec = validate_spec(spec_from_document(doc), self.settings)
        payload = {
            "name": spec.name,
            "components": list(spec.components.names),
            "alphas": list(spec.alphas),
            "streams": [s.name for s in spec.streams],
            "free_splits": doc.free_splits is not None,
            "valid": True,
        }
        if doc.free_splits is not None:
            free_split_from_document(doc)
        if self.fmt == "json":
            _emit(render.canonical_json("validate", payload), self.cfg.out)
        else:
            _emit(f"{spec.name}: valid ({spec.c} components, {len(spec.streams)} streams)\n", self.cfg.out)
        return EXIT_OK

    def minreflux(self) -> int:
        spec = self._spec()
        try:
            result = vreb_min(spec, self.settings)
        except NoFeasibleCandidate as e:
            log.error("%s", e)
            payload = {"status": "infeasible", "reason": str(e), "candidates": [c.model_dump() for c in e.candidates]}
            if self.fmt == "json":
                _emit(render.canonical_json("minreflux", payload), self.cfg.out)
            return EXIT_INFEASIBLE
        if self.fmt == "json":
            _emit(render.canonical_json("minreflux", result), self.cfg.out)
        elif self.fmt == "csv":
            rows = [r.model_dump() for c in result.report.streams for r in c.records]
            _emit(pd.DataFrame(rows).to_csv(index=False, float_format="%.9g"), self.cfg.out)
        else:
            self._tables(render.minreflux_table(spec, result), render.report_table(result.report))
        return EXIT_OK

    def decompose(self) -> int:
        spec = self._spec()
        result = decomposition_min_reflux(spec, self.settings)
        reference = spec.reference.get("r_min")
        if reference and result.r_min > reference * 1.01:
            log.warning(
                "Decomposition overestimates the minimum reflux: %.6g against %.6g (%+.1f%%)",
                result.r_min, reference, (result.r_min / reference - 1) * 100,
            )
        if self.fmt == "json":
            _emit(render.canonical_json("decompose", result), self.cfg.out)
        elif self.fmt == "csv":
            rows = [
                {"column": c.column.name, "v_min": c.underwood.v_min, "r_simple": c.underwood.r_min, "r_column": c.r_column}
                for c in result.columns
            ]
            _emit(pd.DataFrame(rows).to_csv(index=False, float_format="%.9g"), self.cfg.out)
        else:
            self._tables(render.decomposition_table(spec, result))
        return EXIT_OK

    def optimize(self) -> int:
        fs = free_split_from_document(self._doc())
        result = optimize_distribution(fs, self.settings)
        if self.fmt == "json":
            _emit(render.canonical_json("optimize", result), self.cfg.out)
        elif self.fmt == "csv":
            frame = pd.DataFrame(result.distribution, index=list(fs.base.components.names)).T
            _emit(frame.to_csv(index_label="product", float_format="%.9g"), self.cfg.out)
        else:
            self._tables(render.optimization_table(fs.base, result))
        return EXIT_OK if result.status == "optimal" else EXIT_INFEASIBLE

    def simulate(self) -> int:
        spec = self._spec()
        reflux = self.cfg.reflux
        if reflux is None:
            reflux = min_reflux_by_bisection(spec, self.settings.stages_per_section, self.settings)
            log.info("Simulated minimum reflux of %s: %.6g", spec.name, reflux)
        profile = simulate_column(spec, reflux, self.settings.stages_per_section, self.settings)
        if self.fmt == "json":
            _emit(render.canonical_json("simulate", profile), self.cfg.out)
        elif self.fmt == "csv":
            _emit(render.profile_frame(spec, profile).to_csv(index=False, float_format="%.9g"), self.cfg.out)
        else:
            self._tables(render.profile_table(spec, profile))
        return EXIT_OK

    def ternary_export(self) -> int:
        spec = self._spec()
        result = vreb_min(spec, self.settings)
        profile = None
        if self.cfg.reflux is not None:
            profile = simulate_column(spec, self.cfg.reflux, self.settings.stages_per_section, self.settings)
        written = ternary_export(spec, result, profile, self.cfg.out or Path("."), project=spec.c == 3)
        payload = {kind: str(path) for kind, path in written.items()}
        if self.fmt == "json":
            sys.stdout.write(render.canonical_json("ternary-export", payload))
        else:
            for kind, path in payload.items():
                self.console.print(f"{kind}: {path}")
        return EXIT_OK

    def run(self) -> int:
        handler = getattr(self, self.cfg.command.replace("-", "_"))
        return handler()


def run(cfg: RunConfig, console: Console | None = None) -> int:
    """Execute one command; 0 success, 1 usage/spec/IO error, 2 infeasible model."""
    try:
        settings = load_settings(
            grid_resolution=cfg.grid,
            stages_per_section=cfg.stages,
            bind_tol_rel=cfg.tol_bind,
            profile_checks=False if cfg.no_profile_checks else None,
        )
    except ValidationError as e:
        log.error("Invalid settings: %s", e)
        return EXIT_ERROR
    setup_logging(settings.log_level, cfg.verbose)

    try:
        if cfg.seed_docs is not None:
            seed_docs(cfg.seed_docs)
            if cfg.command is None:
                return EXIT_OK
        if cfg.command is None:
            log.error("No command given")
            return EXIT_ERROR
        return _Runner(cfg, settings, console).run()
    except ModelInfeasible as e:
        log.error("Infeasible: %s", e)
        return EXIT_INFEASIBLE
    except (SpecError, ValidationError, OSError) as e:
        log.error("%s", e)
        return EXIT_ERROR
    except MfmpError as e:
        log.error("Numerical failure: %s", e)
        return EXIT_ERROR
    except Exception:
        log.exception("Unexpected failure")
        return EXIT_ERROR


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = parse_args(argv)
    except ValidationError as e:
        logging.getLogger(__name__).error("Invalid arguments: %s", e)
        return EXIT_ERROR
    except SystemExit as e:
        return EXIT_ERROR if e.code else EXIT_OK
    return run(cfg)
