import csv
import importlib
import io
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

import gauges
from gauges import CatalogItem

EXAMPLE_FILES = Path(__file__).resolve().parent.parent / "example files"


def reload_cli_with_temp_root(tmp_path: Path, monkeypatch):
    monkeypatch.setenv("LAB_REPORTS_ROOT", str(tmp_path / "reports"))

    import lab_config  # type: ignore
    import lab_reports  # type: ignore
    import cli  # type: ignore

    importlib.reload(lab_config)
    importlib.reload(lab_reports)
    importlib.reload(cli)
    return cli


def run(cli, tmp_path, *args, input=None):
    out = tmp_path / "out.txt"
    result = CliRunner().invoke(cli.main, [*args, "--out", str(out)], input=input)
    text = out.read_text(encoding="utf8") if out.exists() else ""
    return result, text


def test_check_cclass_all_items_pass(tmp_path, monkeypatch):
    cli = reload_cli_with_temp_root(tmp_path, monkeypatch)
    result, text = run(cli, tmp_path, "check-cclass", "--ids", "1-17")

    assert result.exit_code == 0, result.output
    report = json.loads(text)
    assert report["tool"] == "suzuki-lab"
    assert report["result"]["passed"] is True
    assert [item["id"] for item in report["result"]["items"]] == list(range(1, 18))
    assert report["tolerances"]["cclass"] == 1e-9


def test_check_cclass_broken_formula_exits_one(tmp_path, monkeypatch):
    cli = reload_cli_with_temp_root(tmp_path, monkeypatch)
    monkeypatch.setitem(
        gauges.CCLASS_CATALOG, 1, CatalogItem(1, "F(s,t) = s + t", (), lambda p: lambda s, t: s + t)
    )
    result, text = run(cli, tmp_path, "check-cclass", "--ids", "1", "--format", "csv")

    assert result.exit_code == 1
    assert text.splitlines()[0] == "id,formula,passed,checked,violations,suspects"
    (row,) = list(csv.DictReader(io.StringIO(text)))
    assert row["formula"] == "F(s,t) = s + t"
    assert row["passed"] == "False"
    assert int(row["violations"]) > 0


def test_check_cclass_unknown_id_exits_two(tmp_path, monkeypatch):
    cli = reload_cli_with_temp_root(tmp_path, monkeypatch)
    result, _ = run(cli, tmp_path, "check-cclass", "--ids", "99")
    assert result.exit_code == 2
    assert "99" in result.output


def test_example_e1_reproduces(tmp_path, monkeypatch):
    cli = reload_cli_with_temp_root(tmp_path, monkeypatch)
    result, text = run(cli, tmp_path, "example-e1", "--n-max", "50")

    assert result.exit_code == 0, result.output
    data = json.loads(text)["result"]
    branciari = next(r for r in data["reports"] if r["theorem"] == "Branciari")
    witness = next(v for v in branciari["violations"] if (v["x"], v["y"]) == ("(5,6)", "(5,4)"))
    assert witness["cond_lhs"] == 387420489.0
    assert witness["cond_rhs"] == 2.0
    assert data["fixed_points"] == ["(0,0)"]
    assert len(data["documented_discrepancies"]) == 2


def test_example_e1_small_and_strict(tmp_path, monkeypatch):
    cli = reload_cli_with_temp_root(tmp_path, monkeypatch)

    result, _ = run(cli, tmp_path, "example-e1", "--n-max", "5")
    assert result.exit_code == 0

    result, _ = run(cli, tmp_path, "example-e1", "--n-max", "5", "--strict")
    assert result.exit_code == 1

    result, _ = run(cli, tmp_path, "example-e1", "--n-max", "0")
    assert result.exit_code == 2


def test_verify_space_example_file(tmp_path, monkeypatch):
    cli = reload_cli_with_temp_root(tmp_path, monkeypatch)
    result, text = run(cli, tmp_path, "verify-space", str(EXAMPLE_FILES / "line-space.json"), "--workers", "2")

    assert result.exit_code == 0, result.output
    data = json.loads(text)["result"]
    assert [row["holds"] for row in data["classification"]["table"]] == [True, True, True]
    assert data["fixed_points"] == ["a"]


def test_verify_space_rejects_non_metric(tmp_path, monkeypatch):
    cli = reload_cli_with_temp_root(tmp_path, monkeypatch)
    payload = {
        "points": [{"label": "a"}, {"label": "b"}, {"label": "c"}],
        "dist": [[0, 1, 5], [1, 0, 1], [5, 1, 0]],
        "map": [0, 0, 0],
        "hypotheses": [{"theorem": "Banach", "beta": 0.5}],
    }
    result, _ = run(cli, tmp_path, "verify-space", "-", input=json.dumps(payload))
    assert result.exit_code == 2
    assert "metric" in result.output


def test_verify_space_failing_hypothesis_exits_one(tmp_path, monkeypatch):
    cli = reload_cli_with_temp_root(tmp_path, monkeypatch)
    payload = {
        "points": [{"label": "p0", "coords": [0, 0]}, {"label": "p1", "coords": [1, 0]}],
        "map": [1, 0],
        "hypotheses": [{"theorem": "Banach", "beta": 0.9}],
    }
    result, text = run(cli, tmp_path, "verify-space", "-", input=json.dumps(payload))
    assert result.exit_code == 1
    assert json.loads(text)["result"]["classification"]["table"][0]["witness"]["x"] == "p0"


def test_picard_swap_cycle_and_start(tmp_path, monkeypatch):
    cli = reload_cli_with_temp_root(tmp_path, monkeypatch)
    swap = {"points": [{"label": "p0", "coords": [0, 0]}, {"label": "p1", "coords": [1, 0]}], "map": [1, 0]}
    result, text = run(cli, tmp_path, "picard", "-", input=json.dumps(swap))
    assert result.exit_code == 1
    assert {trace["status"] for trace in json.loads(text)["result"]["traces"]} == {"cycle"}

    result, text = run(cli, tmp_path, "picard", str(EXAMPLE_FILES / "line-space.json"), "--start", "c")
    assert result.exit_code == 0
    trace = json.loads(text)["result"]["traces"][0]
    assert trace["path"] == ["c", "b", "a"]


def test_solve_volterra_linear(tmp_path, monkeypatch):
    cli = reload_cli_with_temp_root(tmp_path, monkeypatch)
    result, text = run(cli, tmp_path, "solve-volterra", str(EXAMPLE_FILES / "volterra-linear.json"))

    assert result.exit_code == 0, result.output
    solution = json.loads(text)["result"]["solution"]
    assert solution["converged"] is True
    assert solution["values"][-1] == pytest.approx(2.718281828459045, abs=1e-5)


def test_solve_volterra_short_budget_exits_one(tmp_path, monkeypatch):
    cli = reload_cli_with_temp_root(tmp_path, monkeypatch)
    result, text = run(cli, tmp_path, "solve-volterra", str(EXAMPLE_FILES / "volterra-divergent.json"))

    assert result.exit_code == 1
    solution = json.loads(text)["result"]["solution"]
    assert solution["converged"] is False
    assert solution["iterations"] == 10


def test_solve_volterra_condition_sampling_is_seeded(tmp_path, monkeypatch):
    cli = reload_cli_with_temp_root(tmp_path, monkeypatch)
    path = str(EXAMPLE_FILES / "volterra-half-lipschitz.json")

    first, text_a = run(cli, tmp_path, "solve-volterra", path, "--samples", "200", "--seed", "4")
    assert first.exit_code == 0, first.output
    second, text_b = run(cli, tmp_path, "solve-volterra", path, "--samples", "200", "--seed", "4")
    assert text_a == text_b
    assert json.loads(text_a)["result"]["condition_ii"]["passed"] is True


def test_solve_volterra_malformed_input_exits_two(tmp_path, monkeypatch):
    cli = reload_cli_with_temp_root(tmp_path, monkeypatch)
    result, _ = run(cli, tmp_path, "solve-volterra", "-", input="{not json")
    assert result.exit_code == 2

    result, _ = run(cli, tmp_path, "solve-volterra", "-", input=json.dumps({"K": {"kind": "bessel"}}))
    assert result.exit_code == 2


def test_solve_volterra_check_condition_uses_saved_sample_count(tmp_path, monkeypatch):
    cli = reload_cli_with_temp_root(tmp_path, monkeypatch)
    settings_path = tmp_path / "reports" / ".lab-settings.json"
    settings_path.parent.mkdir(parents=True)
    settings_path.write_text(json.dumps({"conditionSamples": 7}), encoding="utf8")
    path = str(EXAMPLE_FILES / "volterra-half-lipschitz.json")

    result, text = run(cli, tmp_path, "solve-volterra", path, "--check-condition")
    assert result.exit_code == 0, result.output
    notes = json.loads(text)["result"]["condition_ii"]["notes"]
    assert any(note.startswith("samples=7 ") for note in notes)

    result, text = run(cli, tmp_path, "solve-volterra", path, "--check-condition", "--samples", "3")
    notes = json.loads(text)["result"]["condition_ii"]["notes"]
    assert any(note.startswith("samples=3 ") for note in notes)

    result, text = run(cli, tmp_path, "solve-volterra", path)
    assert "condition_ii" not in json.loads(text)["result"]
