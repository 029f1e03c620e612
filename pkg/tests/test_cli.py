"""Tests for the qrace CLI (argument parsing and command handlers)."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
import yaml

from qrace.__main__ import _build_parser, _render_table, _size, main
from qrace.config import Settings
from qrace.engine.sim import SWEEP_COLUMNS
from qrace.schemas import SCHEMAS


SCHEMA_DIR = Path(__file__).resolve().parent.parent / "schemas"


def _run_json(capsys, argv: list[str]):
    main(argv)
    return json.loads(capsys.readouterr().out)


# ---------------------------------------------------------------------------
# Tests: Argument parsing
# ---------------------------------------------------------------------------


class TestArgParsing:
    def test_grover_size_scientific(self):
        """'--grover-N 1e4' parses to the integer 10000."""
        args = _build_parser().parse_args(["solve2", "--grover-N", "1e4"])
        assert args.command == "solve2"
        assert args.grover_n == 10_000
        assert args.format == "json"
        assert args.strict is False

    def test_size_rejects_fractions(self):
        with pytest.raises(Exception, match="expected an integer"):
            _size("1.5")

    def test_schedule_sources_exclusive(self):
        with pytest.raises(SystemExit) as exc_info:
            _build_parser().parse_args(["solve2", "--grover-N", "100", "--probs", "0.5,1"])
        assert exc_info.value.code == 2

    def test_schedule_source_required(self):
        with pytest.raises(SystemExit):
            _build_parser().parse_args(["solve2"])

    def test_verify_defaults(self):
        args = _build_parser().parse_args(["verify", "--probs", "1/2,1"])
        assert args.game == "stingy"
        assert args.against is None
        assert args.n == 2
        assert args.profile is None

    def test_solven_player_list(self):
        args = _build_parser().parse_args(["solven", "--grover-N", "1000", "--n", "3", "5"])
        assert args.n == [3, 5]

    def test_simulate_needs_a_source(self, capsys):
        with pytest.raises(SystemExit) as exc_info:
            main(["simulate", "--trials", "10"])
        assert exc_info.value.code == 2
        assert "--sweep-config" in capsys.readouterr().err

    def test_no_command_prints_help(self, capsys):
        with pytest.raises(SystemExit) as exc_info:
            main([])
        assert exc_info.value.code == 0
        assert "qrace" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# Tests: Command handlers
# ---------------------------------------------------------------------------


class TestScheduleCommand:
    def test_exact_schedule_json(self, capsys):
        doc = _run_json(capsys, ["schedule", "--probs", "1/2, 1"])
        assert doc == {"probs": ["1/2", 1]}

    def test_report(self, capsys):
        doc = _run_json(capsys, ["schedule", "--grover-N", "1e3", "--report"])
        assert doc["K"] == 24
        assert doc["convex"] is True
        assert doc["ell"] <= 1.5708

    def test_table_format(self, capsys):
        main(["schedule", "--probs", "1/2,1", "--report", "--format", "table"])
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "schedule"
        pairs = (line.split(" : ", 1) for line in lines[1:] if " : " in line)
        fields = {key.strip(): value for key, value in pairs}
        assert fields["K"] == "2"
        assert fields["convex"] == "true"
        assert fields["probs"] == "[1/2, 1]"
        assert "ell" in fields

    def test_table_report_block(self):
        doc = {
            "K": 40,
            "probs": [i / 40 for i in range(1, 41)],
            "bounds": {
                "demo": {
                    "name": "demo",
                    "holds": False,
                    "checks": [
                        {"name": "a", "verdict": "holds", "value": 0.5, "relation": "<=",
                         "bound": 1.0, "detail": ""},
                        {"name": "long_name", "verdict": "fails", "value": 12.0,
                         "relation": "<", "bound": 3.0, "detail": "too big"},
                    ],
                }
            },
        }
        lines = _render_table(doc, "solve2").splitlines()
        assert lines[0] == "solve2"
        assert lines[2] == "  probs : [0.025, 0.05, 0.075, ..., 0.975, 1] (40 values)"
        assert lines[4] == "demo [fails]"
        assert lines[5] == "  a          holds  0.5 <= 1"
        assert lines[6] == "  long_name  fails   12 <  3  (too big)"

    def test_csv_to_file(self, tmp_path, capsys):
        path = tmp_path / "p.csv"
        main(["schedule", "--probs", "0.25,1", "--format", "csv", "--output", str(path)])
        assert path.read_text() == "p\n0.25\n1\n"
        assert capsys.readouterr().out == ""

    def test_invalid_schedule(self, capsys):
        with pytest.raises(SystemExit) as exc_info:
            main(["schedule", "--probs", "0.5,0.4"])
        assert exc_info.value.code == 1
        assert capsys.readouterr().err.startswith("Error: ")


class TestSolve2Command:
    def test_two_times(self, capsys):
        doc = _run_json(capsys, ["solve2", "--probs", "1/2,1"])
        assert doc["kind"] == "coinciding"
        assert doc["exists"] is True
        assert doc["row"] == ["2/3", "1/3"]
        assert doc["payoffRow"] == pytest.approx(1 / 3)
        assert doc["tieProbability"] == pytest.approx(2 / 9)
        assert set(doc["bounds"]) == {"self_checks", "payoff_bounds", "collision_bounds"}
        assert doc["bounds"]["self_checks"]["holds"] is True

    def test_csv_weights(self, capsys):
        main(["solve2", "--probs", "1/2,1", "--format", "csv"])
        assert capsys.readouterr().out == "t,row,col\n1,2/3,2/3\n2,1/3,1/3\n"

    def test_strict_reports_inapplicable(self, capsys):
        """K = 2 leaves the density-gated checks inapplicable, which --strict rejects."""
        with pytest.raises(SystemExit) as exc_info:
            main(["solve2", "--probs", "1/2,1", "--strict"])
        assert exc_info.value.code == 1
        assert "Strict: " in capsys.readouterr().err

    def test_strict_passes_on_grover(self, capsys):
        main(["solve2", "--grover-N", "1e5", "--strict"])
        doc = json.loads(capsys.readouterr().out)
        assert all(report["holds"] for report in doc["bounds"].values())

    def test_no_coinciding_equilibrium(self, tmp_path, capsys):
        col = tmp_path / "col.json"
        col.write_text('{"probs": ["1/2", "3/5", 1]}')
        doc = _run_json(capsys, ["solve2", "--probs", "1/4,1/2,1", "--col-schedule", str(col)])
        assert doc["exists"] is False
        assert "T*_A=1" in doc["reason"]


class TestOtherSolvers:
    def test_solven_list(self, capsys):
        docs = _run_json(capsys, ["solven", "--grover-N", "1e4", "--n", "3", "4"])
        assert [d["n"] for d in docs] == [3, 4]
        assert all(d["perPlayerPayoff"] < 1 / d["n"] for d in docs)
        assert all(d["reductionResidual"] < 1e-12 for d in docs)

    def test_solven_csv(self, capsys):
        main(["solven", "--grover-N", "1e4", "--n", "3", "--format", "csv"])
        header, row = capsys.readouterr().out.splitlines()
        assert header.startswith("N,K,n,ell,Tstar")
        assert row.startswith("10000,78,3,")

    def test_alternating(self, capsys):
        doc = _run_json(capsys, ["alternating", "--probs", "1/2,1"])
        assert doc["kind"] == "alternating"
        assert doc["row"] == [1, 0]
        assert doc["col"] == [0, 1]
        assert doc["swappedExists"] is True

    def test_altcoinc(self, capsys):
        doc = _run_json(capsys, ["altcoinc", "--probs", "1/4,1/2,1"])
        assert doc["K"] == 3
        assert doc["equilibria"] == []


class TestVerifyCommand:
    def test_default_profile(self, capsys):
        doc = _run_json(capsys, ["verify", "--probs", "1/2,1"])
        assert doc["isExact"] is True
        assert doc["mangasarianStone"] == 0.0
        assert doc["game"] == "stingy"

    def test_profile_file(self, tmp_path, capsys):
        path = tmp_path / "profile.json"
        path.write_text(json.dumps({"players": [{"weights": [1, 0]}, {"weights": [1, 0]}]}))
        doc = _run_json(capsys, ["verify", "--probs", "1/2,1", "--profile", str(path)])
        assert doc["isExact"] is False
        assert doc["epsilonApprox"] == pytest.approx(0.25)
        assert [d["bestTime"] for d in doc["deviations"]] == [2, 2]

    def test_against_tie_splitting(self, capsys):
        """The stingy equilibrium checked in the tie-splitting race on a dense schedule."""
        doc = _run_json(capsys, ["verify", "--grover-N", "1e4", "--against", "quantum"])
        assert doc["game"] == "tie-splitting"
        assert doc["bounds"]["claims"]["holds"] is True

    def test_many_players(self, capsys):
        doc = _run_json(capsys, ["verify", "--grover-N", "1e4", "--n", "3"])
        assert doc["isExact"] is True
        assert len(doc["payoffs"]) == 3
        assert doc["mangasarianStone"] is None


class TestBoundCommand:
    def test_analytic_only(self, capsys):
        doc = _run_json(capsys, ["bound", "--grover-N", "1e8", "--analytic-only"])
        assert doc["analyticOnly"] is True
        assert doc["K"] == 7853
        assert doc["constants"]["payoffCeiling"] < 0.5

    def test_analytic_only_has_no_csv(self, capsys):
        with pytest.raises(SystemExit) as exc_info:
            main(["bound", "--grover-N", "1e8", "--analytic-only", "--format", "csv"])
        assert exc_info.value.code == 2
        assert "not available" in capsys.readouterr().err

    def test_full_report(self, capsys):
        doc = _run_json(
            capsys, ["bound", "--grover-N", "1e5", "--n", "3", "--dual-sweep", "5", "--appendix"]
        )
        assert "multi_bounds_n3" in doc["bounds"]
        assert "weak_duality" in doc["bounds"]
        assert len(doc["dualSweep"]) == 5
        assert doc["certificate"]["feasible"] is True


class TestSimulateCommand:
    def test_single_run(self, capsys):
        doc = _run_json(
            capsys,
            ["simulate", "--probs", "1/2,1", "--trials", "2000", "--seed", "1", "--consistency"],
        )
        assert doc["trials"] == 2000
        assert len(doc["winFrequency"]) == 2
        assert doc["consistency"]["name"] == "simulation_consistency"

    def test_deterministic(self, capsys):
        argv = ["simulate", "--grover-N", "1e3", "--n", "3", "--trials", "1e3", "--seed", "9"]
        first = _run_json(capsys, argv)
        second = _run_json(capsys, argv)
        assert first == second

    def test_sweep_config(self, tmp_path, capsys):
        path = tmp_path / "sweep.yaml"
        path.write_text("sizes: [1000]\nplayers: [2]\ntrials: 100\n")
        main(["simulate", "--sweep-config", str(path), "--format", "csv"])
        header = capsys.readouterr().out.splitlines()[0]
        assert header.split(",") == list(SWEEP_COLUMNS)

    def test_sweep_config_excludes_schedule(self, tmp_path):
        with pytest.raises(SystemExit) as exc_info:
            main(["simulate", "--sweep-config", "x.yaml", "--grover-N", "100"])
        assert exc_info.value.code == 2


class TestMiscCommands:
    def test_bitcoin(self, capsys):
        doc = _run_json(capsys, ["bitcoin", "--difficulty", "7e12", "--players", "2", "10"])
        assert set(doc["tieBounds"]) == {"2", "10"}
        assert doc["materializable"] is False
        assert doc["epsilonBound"] <= 3e-10

    def test_schemas(self, tmp_path, capsys):
        main(["schemas", "--out", str(tmp_path)])
        printed = capsys.readouterr().out.split()
        assert len(printed) == len(SCHEMAS)
        schema = json.loads((tmp_path / "solve2.schema.json").read_text())
        assert "payoffRow" in schema["properties"]


# ---------------------------------------------------------------------------
# Tests: Settings
# ---------------------------------------------------------------------------


class TestSettings:
    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("QRACE_SUPPORT_ENUM_MAX_K", "4")
        monkeypatch.setenv("QRACE_OUTPUT_DIGITS", "6")
        fresh = Settings()
        assert fresh.support_enum_max_k == 4
        assert fresh.float_format == "%.6g"

    def test_defaults(self):
        fresh = Settings(_env_file=None)
        assert fresh.tolerance == 1e-10
        assert fresh.max_matrix_k == 10_000


# ---------------------------------------------------------------------------
# Tests: Committed schemas
# ---------------------------------------------------------------------------


def _committed(name: str) -> dict:
    return json.loads((SCHEMA_DIR / f"{name}.schema.json").read_text())


class TestCommittedSchemas:
    @pytest.mark.parametrize("name", sorted(SCHEMAS))
    def test_in_sync_with_models(self, name):
        """schemas/ matches what ``qrace schemas`` would write today."""
        committed = _committed(name)
        generated = SCHEMAS[name].model_json_schema(by_alias=True, mode="serialization")
        assert committed["title"] == generated["title"]
        assert set(committed["properties"]) == set(generated["properties"])
        assert committed.get("required", []) == generated.get("required", [])
        assert set(committed.get("$defs", {})) == set(generated.get("$defs", {}))

    @pytest.mark.parametrize(
        ("name", "argv"),
        [
            ("schedule", ["schedule", "--probs", "1/2,1"]),
            ("schedule-report", ["schedule", "--grover-N", "1e3", "--report"]),
            ("solve2", ["solve2", "--probs", "1/2,1"]),
            ("solve2", ["solve2", "--grover-N", "1e4"]),
            ("solve2", ["alternating", "--probs", "1/2,1"]),
            ("altcoinc", ["altcoinc", "--probs", "1/4,1/2,1"]),
            ("solven", ["solven", "--grover-N", "1e4", "--n", "2", "3"]),
            ("verify", ["verify", "--probs", "1/2,1"]),
            ("verify", ["verify", "--grover-N", "1e4", "--n", "3"]),
            ("bound", ["bound", "--grover-N", "1e8", "--analytic-only"]),
            ("bound", ["bound", "--grover-N", "1e6", "--dual-sweep", "5"]),
            ("simulate", ["simulate", "--probs", "1/2,1", "--trials", "500", "--consistency"]),
            ("bitcoin", ["bitcoin", "--difficulty", "7e12", "--players", "2", "10"]),
        ],
    )
    def test_command_output_conforms(self, capsys, name, argv):
        """Every emitted document validates against its model and uses only schema keys."""
        main(argv)
        text = capsys.readouterr().out
        data = json.loads(text)
        docs = data if isinstance(data, list) else [data]
        schema = _committed(name)
        model = SCHEMAS[name]
        for doc in docs:
            model.model_validate(doc)
            assert set(doc) <= set(schema["properties"])
            assert set(schema.get("required", [])) <= set(doc)

    def test_sweep_output_conforms(self, tmp_path, capsys):
        path = tmp_path / "sweep.yaml"
        path.write_text("sizes: [1000]\nplayers: [2, 3]\ntrials: 100\n")
        main(["simulate", "--sweep-config", str(path)])
        text = capsys.readouterr().out
        doc = SCHEMAS["sweep"].model_validate_json(text)
        assert len(doc.rows) == 2
        row_keys = set(_committed("sweep")["$defs"]["SweepRowOut"]["properties"])
        for row in json.loads(text)["rows"]:
            assert set(row) <= row_keys

    def test_sweep_config_file_conforms(self):
        """The shipped sweep configuration parses as a sweep-config document."""
        config = Path(__file__).resolve().parent.parent / "sweeps" / "fork_rates.yaml"
        doc = SCHEMAS["sweep-config"].model_validate(yaml.safe_load(config.read_text()))
        assert doc.sizes
        assert doc.players
