"""Tests for the free-split search."""

from __future__ import annotations

import logging
import time

import pytest

from app.config import Settings
from app.model.errors import SpecError
from app.model.loader import example_path, load_free_split
from app.model.spec import FixedRecovery, SplitDof
from app.services.cache import EvaluationCache
from app.services.core import bottoms_flows
from app.services.optimizer import (
    dof_bounds,
    enumerate_binaries,
    evaluate_point,
    evaluate_points,
    grid_points,
    optimize_distribution,
    pair_total,
    resolve,
)


@pytest.fixture(scope="module")
def forced_b():
    return load_free_split(example_path("ex3_fullB_probe"))


@pytest.fixture(scope="module")
def ex3_optimum():
    fs = load_free_split(example_path("ex3_free"))
    return optimize_distribution(fs, Settings(grid_resolution=8, refine_min_step=1e-4, threads=2))


class TestGrid:
    def test_endpoints_included(self):
        points = grid_points([(0.0, 1.0), (2.0, 4.0)], 3)
        assert len(points) == 9
        assert points[0] == (0.0, 2.0)
        assert points[-1] == (1.0, 4.0)
        assert (0.5, 3.0) in points

    def test_collapsed_axis(self):
        points = grid_points([(70.0, 70.0), (0.0, 10.0)], 4)
        assert len(points) == 4
        assert {p[0] for p in points} == {70.0}

    def test_lexicographic_order(self):
        points = grid_points([(0.0, 1.0), (0.0, 1.0)], 2)
        assert points == sorted(points)


class TestBounds:
    def test_free(self, ex3_free):
        assert dof_bounds(ex3_free) == [(0.0, 70.0), (0.0, 70.0)]

    def test_fixed_recovery_collapses(self, forced_b):
        assert dof_bounds(forced_b) == [(70.0, 70.0), (0.0, 70.0)]

    def test_pair_totals(self, ex3_free):
        assert [pair_total(ex3_free.base, d) for d in ex3_free.dofs] == pytest.approx([70.0, 70.0])

    def test_unmatched_recovery(self, ex3_free):
        fs = ex3_free.model_copy(
            update={"fixed_recoveries": (FixedRecovery(component="A", stream="distillate", fraction=1.0),)}
        )
        with pytest.raises(SpecError, match="does not match"):
            dof_bounds(fs)

    def test_feed_cannot_donate(self, ex3_free):
        bad = SplitDof(component="B", donor="F1", receiver="distillate", bounds=(0.0, 70.0))
        fs = ex3_free.model_copy(update={"dofs": (bad,)})
        with pytest.raises(SpecError, match="is a feed"):
            dof_bounds(fs)

    def test_same_donor_and_receiver(self, ex3_free):
        bad = SplitDof(component="B", donor="S1", receiver="S1", bounds=(0.0, 70.0))
        fs = ex3_free.model_copy(update={"dofs": (bad,)})
        with pytest.raises(SpecError):
            dof_bounds(fs)


class TestResolve:
    def test_table_distribution(self, ex3_free):
        spec = resolve(ex3_free, (14.23, 21.06))
        names = spec.components
        b, c = names.index("B"), names.index("C")
        s1 = spec.stream("S1")
        assert spec.distillate[b] == pytest.approx(14.23)
        assert -s1.flows[b] == pytest.approx(55.77)
        assert -s1.flows[c] == pytest.approx(48.94)
        assert bottoms_flows(spec)[c] == pytest.approx(21.06)

    def test_sidedraw_stays_liquid(self, ex3_free):
        s1 = resolve(ex3_free, (10.0, 10.0)).stream("S1")
        assert s1.liquid == s1.flows
        assert sum(s1.vapor) == 0.0

    def test_base_unchanged(self, ex3_free):
        before = ex3_free.base.distillate
        resolve(ex3_free, (1.0, 2.0))
        assert ex3_free.base.distillate == before


class TestBinaries:
    def test_ex3_two_undecided_sections(self, ex3_free):
        assignments = enumerate_binaries(ex3_free)
        assert len(assignments) == 4
        assert set(assignments[0]) == {"mu[SEC2][3]", "mu[SEC3][2]"}
        assert {tuple(a.values()) for a in assignments} == {(0, 0), (0, 1), (1, 0), (1, 1)}

    def test_no_dofs(self, ex3_free):
        fs = ex3_free.model_copy(update={"dofs": ()})
        assert enumerate_binaries(fs) == [{}]


class TestEvaluate:
    def test_feasible_point(self, ex3_free):
        point = evaluate_point(ex3_free, (14.23, 21.06))
        assert point.feasible
        assert point.result.v_reb_min == point.v_reb

    def test_infeasible_point_has_reason(self, forced_b):
        point = evaluate_point(forced_b, (70.0, 35.0))
        assert not point.feasible
        assert point.reason

    def test_vanished_sidedraw(self, ex3_free):
        point = evaluate_point(ex3_free, (70.0, 70.0))
        assert not point.feasible
        assert point.reason.startswith("EmptyStream")

    def test_cache_hit(self, ex3_free):
        cache = EvaluationCache()
        first = evaluate_point(ex3_free, (20.0, 20.0), cache=cache)
        second = evaluate_point(ex3_free, (20.0, 20.0), cache=cache)
        assert first is second
        assert cache.hits == 1

    async def test_order_preserved(self, ex3_free, settings):
        points = [(30.0, 20.0), (14.23, 21.06), (20.0, 30.0)]
        evaluated = await evaluate_points(ex3_free, points, settings)
        assert [p.values for p in evaluated] == points
        direct = evaluate_point(ex3_free, points[1])
        assert evaluated[1].v_reb == pytest.approx(direct.v_reb)


class TestOptimizeDistribution:
    def test_forced_b_infeasible(self, forced_b):
        result = optimize_distribution(forced_b, Settings(grid_resolution=4, threads=2))
        assert result.status == "infeasible"
        assert result.v_reb_min is None
        assert result.evaluations == 4

    def test_cache_statistics_logged(self, forced_b, caplog):
        with caplog.at_level(logging.INFO, logger="app.services.optimizer"):
            optimize_distribution(forced_b, Settings(grid_resolution=4, threads=2))
        assert "cache hits" in caplog.text

    def test_ex3_minimum(self, ex3_optimum):
        assert ex3_optimum.status == "optimal"
        assert ex3_optimum.v_reb_min == pytest.approx(71.87, rel=0.01)

    def test_ex3_distribution(self, ex3_optimum):
        # V_reb does not depend on distillate B here, only bottoms C is pinned down
        c = 1  # ascending volatility: D, C, B, A
        assert ex3_optimum.distribution["bottoms"][c] == pytest.approx(21.06, abs=0.2)
        assert ex3_optimum.dof_values[1] == pytest.approx(21.06, abs=0.2)

    def test_flat_direction_takes_smallest_split(self, ex3_optimum):
        assert ex3_optimum.dof_values[0] == pytest.approx(0.0, abs=1e-9)
        assert ex3_optimum.distribution["distillate"][2] == pytest.approx(0.0, abs=1e-9)

    def test_ex3_certified(self, ex3_optimum):
        assert ex3_optimum.certificate is not None
        assert ex3_optimum.certificate.within_tolerance
        assert set(ex3_optimum.binary_assignment) == {"mu[SEC2][3]", "mu[SEC3][2]"}

    def test_optimum_not_above_any_evaluated_point(self, ex3_free, ex3_optimum):
        for values in grid_points(dof_bounds(ex3_free), 4):
            point = evaluate_point(ex3_free, values)
            if point.feasible:
                assert ex3_optimum.v_reb_min <= point.v_reb * (1 + 1e-9)


@pytest.mark.slow
class TestDefaultGrid:
    def test_ex3_default_settings(self, ex3_free):
        start = time.perf_counter()
        result = optimize_distribution(ex3_free, Settings())
        elapsed = time.perf_counter() - start
        assert elapsed < 60.0
        assert result.v_reb_min == pytest.approx(71.87, rel=0.01)
        assert result.distribution["bottoms"][1] == pytest.approx(21.06, abs=0.2)
        assert result.certificate.within_tolerance
        assert result.certificate.blocks["root_equations"] <= 1e-6

    def test_grid_refinement_invariant(self, ex3_free):
        coarse = optimize_distribution(ex3_free, Settings(grid_resolution=64))
        fine = optimize_distribution(ex3_free, Settings(grid_resolution=128))
        assert fine.v_reb_min == pytest.approx(coarse.v_reb_min, rel=1e-6)
        assert fine.dof_values[1] == pytest.approx(coarse.dof_values[1], abs=1e-3)
