"""Tests for the command-line surface."""

from __future__ import annotations

import json

import pytest

from app.cli.commands import EXIT_ERROR, EXIT_INFEASIBLE, EXIT_OK, main, parse_args, resolve_input
from app.cli.render import canonical_json
from app.model.errors import SpecFileError


class TestParseArgs:
    def test_minreflux(self):
        cfg = parse_args(["minreflux", "ex2", "--format", "json", "--tol-bind", "1e-6"])
        assert cfg.command == "minreflux"
        assert cfg.input == "ex2"
        assert cfg.format == "json"
        assert cfg.tol_bind == 1e-6

    def test_verbose_before_command(self):
        assert parse_args(["-vv", "validate", "ex2"]).verbose == 2

    def test_verbose_after_command(self):
        assert parse_args(["validate", "ex2", "-v"]).verbose == 1

    def test_optimize_grid(self):
        assert parse_args(["optimize", "ex3_free", "--grid", "16"]).grid == 16


class TestResolveInput:
    def test_bundled_name(self):
        assert resolve_input("ex2").name == "ex2.json"

    def test_existing_path(self, tmp_path):
        path = tmp_path / "col.json"
        path.write_text("{}")
        assert resolve_input(str(path)) == path

    def test_missing_file(self, tmp_path):
        with pytest.raises(SpecFileError):
            resolve_input(str(tmp_path / "absent.json"))


class TestCanonicalJson:
    def test_rounding_and_envelope(self):
        text = canonical_json("x", {"b": 1.23456789012345, "a": float("inf")})
        doc = json.loads(text)
        assert doc["command"] == "x"
        assert doc["schema_version"] == 1
        assert doc["result"] == {"a": "inf", "b": 1.23456789}
        assert text.index('"a"') < text.index('"b"')


class TestCommands:
    def test_validate(self, capsys):
        assert main(["validate", "ex2"]) == EXIT_OK
        assert "ex2: valid" in capsys.readouterr().out

    def test_validate_json(self, capsys):
        assert main(["validate", "ex3_free", "--format", "json"]) == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert doc["result"]["free_splits"] is True
        assert doc["result"]["components"] == ["D", "C", "B", "A"]

    def test_minreflux_json(self, capsys):
        assert main(["minreflux", "ex1_scenario1", "--format", "json"]) == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert doc["command"] == "minreflux"
        assert doc["result"]["r_min"] == pytest.approx(2.162, abs=1e-3)
        assert doc["result"]["controlling_stream"] == "F1"

    def test_minreflux_to_file(self, tmp_path):
        out = tmp_path / "ex2.json"
        assert main(["minreflux", "ex2", "--format", "json", "--out", str(out)]) == EXIT_OK
        assert json.loads(out.read_text())["result"]["controlling_stream"] == "S1"

    def test_minreflux_csv(self, capsys):
        assert main(["minreflux", "ex2", "--format", "csv"]) == EXIT_OK
        header = capsys.readouterr().out.splitlines()[0]
        assert header.split(",")[:3] == ["id", "family", "index"]

    def test_minreflux_text(self, tmp_path):
        out = tmp_path / "table.txt"
        assert main(["minreflux", "ex1_scenario1", "--out", str(out)]) == EXIT_OK
        assert "F1" in out.read_text()

    def test_no_profile_checks(self, capsys):
        assert main(["minreflux", "ex2", "--format", "json", "--no-profile-checks"]) == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert doc["result"]["r_min"] == pytest.approx(2.533, abs=1e-3)

    def test_decompose_json(self, capsys):
        assert main(["decompose", "ex3_fixed", "--format", "json"]) == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert doc["result"]["r_min"] == pytest.approx(1.806, abs=2e-3)
        assert len(doc["result"]["columns"]) == 2

    def test_probe_infeasible(self, capsys):
        assert main(["optimize", "ex3_fullB_probe", "--grid", "4", "--format", "json"]) == EXIT_INFEASIBLE
        doc = json.loads(capsys.readouterr().out)
        assert doc["result"]["status"] == "infeasible"

    def test_simulate_csv(self, capsys):
        assert main(["simulate", "ex1_scenario1", "--reflux", "3", "--stages", "4", "--format", "csv"]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("stage,section")
        assert len(lines) == 1 + 3 * 4 + 1

    def test_ternary_export(self, tmp_path):
        assert main(["ternary-export", "ex1_scenario1", "--out", str(tmp_path)]) == EXIT_OK
        assert (tmp_path / "ex1_scenario1_geometry.csv").exists()
        assert (tmp_path / "ex1_scenario1_ternary.svg").exists()

    def test_ternary_export_four_components(self, tmp_path):
        assert main(["ternary-export", "ex3_fixed", "--out", str(tmp_path)]) == EXIT_OK
        assert (tmp_path / "ex3_fixed_geometry.csv").exists()
        assert not (tmp_path / "ex3_fixed_ternary.svg").exists()


class TestExitCodes:
    def test_missing_file(self, tmp_path):
        assert main(["minreflux", str(tmp_path / "absent.json")]) == EXIT_ERROR

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert main(["validate", str(path)]) == EXIT_ERROR

    def test_unknown_example(self):
        assert main(["validate", "ex9"]) == EXIT_ERROR

    def test_missing_input(self):
        assert main(["minreflux"]) == EXIT_ERROR

    def test_no_command(self):
        assert main([]) == EXIT_ERROR

    def test_free_splits_required(self):
        assert main(["optimize", "ex2"]) == EXIT_ERROR

    def test_bad_grid(self):
        assert main(["optimize", "ex3_free", "--grid", "1"]) == EXIT_ERROR

    def test_help(self):
        assert main(["--help"]) == EXIT_OK


class TestSeedDocs:
    def test_copies_examples(self, tmp_path):
        assert main(["--seed-docs", str(tmp_path / "docs")]) == EXIT_OK
        names = sorted(p.name for p in (tmp_path / "docs").iterdir())
        assert len(names) == 6
        assert "ex3_free.json" in names

    def test_seeded_file_runs(self, tmp_path):
        main(["--seed-docs", str(tmp_path)])
        assert main(["validate", str(tmp_path / "ex2.json")]) == EXIT_OK
