"""Tests for the constraint-system certificate."""

from __future__ import annotations

import pytest

from app.config import Settings
from app.model.results import FeasibilityReport, StreamCheck
from app.services.certificate import (
    EQUALITY_BLOCKS,
    INEQUALITY_BLOCKS,
    check_constraints,
    parse_binary,
    pole_free_residual,
)
from app.services.core import vapor_balance_propagate
from app.services.feasibility import make_record, solve_sections
from app.services.roots import characteristic

ALPHAS = (1.0, 2.3, 5.361, 12.332)


class TestParseBinary:
    def test_names(self):
        assert parse_binary("mu[SEC2][3]") == (2, 3)
        assert parse_binary("mu[SEC12][1]") == (12, 1)


class TestPoleFreeResidual:
    @pytest.mark.parametrize("gamma", [1.7, 3.1, 4.9, 7.0])
    @pytest.mark.parametrize("b", [2, 3])
    def test_scaled_characteristic(self, gamma, b):
        d = (-10.0, 5.0, 20.0, 30.0)
        vapor = 90.0
        expected = (ALPHAS[b - 1] - gamma) * (vapor - characteristic(d, ALPHAS, gamma))
        assert pole_free_residual(d, vapor, ALPHAS, gamma, b) == pytest.approx(expected, rel=1e-10)

    def test_finite_at_pole(self):
        d = (0.0, 30.0, 40.0, 30.0)
        assert pole_free_residual(d, 90.0, ALPHAS, ALPHAS[2], 3) == pytest.approx(-ALPHAS[2] * 40.0)


class TestCheckConstraints:
    def test_blocks_reported(self, ex1, ex1_result):
        cert = check_constraints(ex1, ex1_result.sections)
        assert set(cert.blocks) == set(EQUALITY_BLOCKS) | set(INEQUALITY_BLOCKS)

    @pytest.mark.parametrize("fixture", ["ex1", "ex2", "ex3"])
    def test_within_tolerance_at_minimum(self, fixture, request):
        spec = request.getfixturevalue(fixture)
        result = request.getfixturevalue(f"{fixture}_result")
        cert = check_constraints(spec, result.sections)
        assert cert.within_tolerance
        assert cert.blocks["mass_balance"] <= 1e-9
        assert cert.blocks["root_equations"] <= 1e-6

    def test_feasibility_slack_negative_below_minimum(self, ex1, ex1_result):
        v_reb = 0.995 * ex1_result.v_reb_min
        sections = solve_sections(ex1, vapor_balance_propagate(ex1, 3, v_reb))
        cert = check_constraints(ex1, sections)
        assert not cert.within_tolerance
        assert cert.blocks["feasibility"] < 0


    @pytest.mark.parametrize(("factor", "within"), [(0.5, True), (2.0, False)])
    def test_feasibility_uses_binding_band(self, ex1, ex1_result, mocker, factor, within):
        band = Settings().bind_tol(ex1.alphas)
        record = make_record("F1:feed-top:2", "feed", 2, 1.0 - factor * band, 1.0, band)
        report = FeasibilityReport(streams=[StreamCheck(stream="F1", kind="feed", records=[record])])
        mocker.patch("app.services.certificate.evaluate_column", return_value=report)
        cert = check_constraints(ex1, ex1_result.sections)
        assert cert.blocks["feasibility"] < -Settings().feas_tol_ineq
        assert cert.within_tolerance is within
