"""Tests for column description files."""

from __future__ import annotations

import json

import pytest

from app.model.errors import SpecFileError
from app.model.loader import (
    bundled_examples,
    example_path,
    flash_split,
    load_free_split,
    load_spec,
    parse_document,
)
from app.services.core import validate_spec


def _doc(**overrides) -> dict:
    doc = {
        "schema_version": 1,
        "name": "tiny",
        "components": [{"name": "L", "alpha": 2.0}, {"name": "H", "alpha": 1.0}],
        "streams": [{"name": "F", "kind": "feed", "flows": {"L": 5.0, "H": 5.0}}],
        "distillate": {"L": 4.0},
    }
    doc.update(overrides)
    return doc


class TestBundledExamples:
    def test_all_present(self):
        assert bundled_examples() == [
            "ex1_scenario1",
            "ex1_scenario2",
            "ex2",
            "ex3_fixed",
            "ex3_free",
            "ex3_fullB_probe",
        ]

    @pytest.mark.parametrize("name", ["ex1_scenario1", "ex1_scenario2", "ex2", "ex3_fixed", "ex3_free"])
    def test_each_validates(self, name):
        spec = validate_spec(load_spec(example_path(name)))
        assert spec.name == name

    def test_unknown_example(self):
        with pytest.raises(SpecFileError):
            example_path("ex9")

    def test_ex1_volatilities_ascending(self, ex1):
        assert ex1.alphas == (1.0, 2.25, 5.1168)
        assert ex1.components.names == ("n-octane", "n-heptane", "n-hexane")

    def test_ex3_volatilities(self, ex3):
        assert ex3.alphas == (1.0, 2.3, 5.361, 12.332)

    def test_ex2_feed(self, ex2):
        feed = ex2.stream("F1")
        assert feed.flows == (30.0, 40.0, 30.0)
        assert feed.thermal_state == "saturated-liquid"

    def test_sidedraws_negated(self, ex2):
        assert ex2.stream("S1").flows == (0.0, -24.0, -6.0)
        assert ex2.stream("S1").liquid == (0.0, -24.0, -6.0)

    def test_vapor_feed(self, ex3):
        f1 = ex3.stream("F1")
        assert f1.vapor == f1.flows
        assert f1.vapor_total == pytest.approx(100.0)
        assert sum(f1.liquid) == 0.0

    def test_positions_top_down(self, ex2):
        assert [(s.name, s.position) for s in ex2.streams] == [("S1", 1), ("F1", 2), ("S2", 3)]

    def test_reference_block(self, ex1):
        assert ex1.reference["r_min"] == 2.162


class TestFreeSplits:
    def test_ex3_free(self, ex3_free):
        assert [d.component for d in ex3_free.dofs] == ["B", "C"]
        assert ex3_free.dofs[0].bounds == (0.0, 70.0)
        assert ex3_free.fixed_recoveries == ()

    def test_probe_recovery(self):
        fs = load_free_split(example_path("ex3_fullB_probe"))
        assert fs.fixed_recoveries[0].fraction == 1.0

    def test_missing_block(self):
        with pytest.raises(SpecFileError):
            load_free_split(example_path("ex2"))


class TestParse:
    def test_minimal(self):
        doc = parse_document(_doc())
        assert doc.name == "tiny"
        assert doc.free_splits is None

    def test_bad_schema_version(self):
        with pytest.raises(SpecFileError):
            parse_document(_doc(schema_version=2))

    def test_negative_alpha(self):
        with pytest.raises(SpecFileError):
            parse_document(_doc(components=[{"name": "L", "alpha": -2.0}]))

    def test_unknown_component_in_flows(self, tmp_path):
        path = tmp_path / "col.json"
        path.write_text(json.dumps(_doc(distillate={"X": 1.0})))
        with pytest.raises(SpecFileError, match="unknown component"):
            load_spec(path)

    def test_not_json(self, tmp_path):
        path = tmp_path / "col.json"
        path.write_text("{not json")
        with pytest.raises(SpecFileError):
            load_spec(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(SpecFileError):
            load_spec(tmp_path / "absent.json")

    def test_partial_vapor_needs_fraction(self, tmp_path):
        streams = [{"name": "F", "kind": "feed", "thermal_state": "partially-vaporized", "flows": {"L": 5.0, "H": 5.0}}]
        path = tmp_path / "col.json"
        path.write_text(json.dumps(_doc(streams=streams)))
        with pytest.raises(SpecFileError, match="vapor_fraction"):
            load_spec(path)


class TestFlashSplit:
    def test_closure(self):
        liquid, vapor = flash_split((5.0, 5.0), (1.0, 2.0), 0.4)
        assert sum(vapor) == pytest.approx(4.0)
        assert [l + v for l, v in zip(liquid, vapor)] == pytest.approx([5.0, 5.0])

    def test_equilibrium(self):
        liquid, vapor = flash_split((3.0, 4.0, 3.0), (1.0, 2.25, 5.1168), 0.5)
        ratios = [v / (a * l) for l, v, a in zip(liquid, vapor, (1.0, 2.25, 5.1168))]
        assert ratios == pytest.approx([ratios[0]] * 3, rel=1e-9)

    def test_partial_stream_validates(self, tmp_path):
        streams = [{"name": "F", "kind": "feed", "thermal_state": "partially-vaporized",
                    "vapor_fraction": 0.3, "flows": {"L": 5.0, "H": 5.0}}]
        path = tmp_path / "col.json"
        path.write_text(json.dumps(_doc(streams=streams)))
        spec = validate_spec(load_spec(path))
        assert spec.streams[0].vapor_total == pytest.approx(3.0)
