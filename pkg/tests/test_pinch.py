"""Tests for section pinch compositions and the stage map."""

from __future__ import annotations

import numpy as np
import pytest

from app.model.errors import DegenerateSection, NegativeComposition, NumericalError
from app.model.results import SectionState
from app.services.pinch import pinch_compositions, pinch_geometry, stage_map_down


class TestStageMapDown:
    def test_binary_step(self):
        x = stage_map_down((0.1, 0.9), 50.0, 100.0, (2.5, 47.5), (1.0, 2.5))
        w = np.array([0.075 / 1.0, 0.925 / 2.5])
        assert x == pytest.approx(w / w.sum())

    def test_stays_normalized(self):
        x = stage_map_down((0.2, 0.3, 0.5), 80.0, 100.0, (0.0, 5.0, 15.0), (1.0, 2.0, 4.0))
        assert x.sum() == pytest.approx(1.0)
        assert np.all(x >= 0)

    def test_no_vapor(self):
        with pytest.raises(DegenerateSection):
            stage_map_down((0.5, 0.5), 10.0, 0.0, (1.0, 1.0), (1.0, 2.0))

    def test_negative_vapor_fraction(self):
        with pytest.raises(NegativeComposition):
            stage_map_down((0.01, 0.99), 100.0, 50.0, (-30.0, -20.0), (1.0, 2.0))

    def test_sign_check_off(self):
        x = stage_map_down((0.01, 0.99), 100.0, 50.0, (-30.0, -20.0), (1.0, 2.0), check_sign=False)
        assert x.sum() == pytest.approx(1.0)

    def test_open_balance(self):
        with pytest.raises(NumericalError):
            stage_map_down((0.5, 0.5), 50.0, 100.0, (10.0, 10.0), (1.0, 2.0))


class TestPinchCompositions:
    def test_ex1_top_section(self, ex1, ex1_result):
        pinch = pinch_compositions(ex1_result.sections[0], ex1.alphas)
        assert pinch.section == 1
        assert pinch.pinch_vertex == 2
        assert len(pinch.vertices) == 3
        assert pinch.vertices[0] == (1.0, 0.0, 0.0)

    @pytest.mark.parametrize("fixture", ["ex1_result", "ex2_result", "ex3_result"])
    def test_vertices_are_fixed_points(self, fixture, request):
        result = request.getfixturevalue(fixture)
        name = fixture.removesuffix("_result")
        spec = request.getfixturevalue(name)
        for pinch in pinch_geometry(result.sections, spec.alphas).sections:
            assert pinch.fixed_point_residual <= 1e-10
            for z in pinch.vertices:
                assert sum(z) == pytest.approx(1.0)

    def test_no_liquid(self):
        state = SectionState(index=1, net_flows=(1.0, 1.0), vapor=2.0)
        with pytest.raises(DegenerateSection):
            pinch_compositions(state, (1.0, 2.0))
