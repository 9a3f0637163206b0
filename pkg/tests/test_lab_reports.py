import json

import pytest

import lab_config
from lab_config import LabSettings
from lab_reports import (
    E1_DOCUMENTED_PAIRS,
    HypothesisModel,
    SpaceFileModel,
    VolterraProblemModel,
    build_e1_report,
    render_csv,
    render_markdown_html,
    report_envelope,
)
from suzuki_verifier import Theorem


@pytest.fixture(autouse=True)
def _temp_reports_root(tmp_path, monkeypatch):
    monkeypatch.setenv("LAB_REPORTS_ROOT", str(tmp_path / "reports"))
    lab_config.get_config.cache_clear()
    yield
    lab_config.get_config.cache_clear()


@pytest.fixture(scope="module")
def e1_report():
    return build_e1_report(50, LabSettings())


def test_e1_report_reproduces_every_claim(e1_report):
    assert e1_report.reproduced, e1_report.claims
    assert e1_report.space.size == 116
    assert e1_report.fixed_points == ["(0,0)"]
    assert e1_report.attraction.max_steps == 2


def test_e1_report_documents_the_equal_distance_pairs(e1_report):
    assert not e1_report.cclass.holds
    assert not e1_report.strict_holds
    pairs = {(item["x"], item["y"]) for item in e1_report.discrepancies}
    assert pairs == set(E1_DOCUMENTED_PAIRS)


def test_e1_report_table_and_rendering(e1_report):
    data = e1_report.to_dict()
    table = {row["theorem"]: row["holds"] for row in data["classification"]["table"]}
    assert table["Banach"] is False
    assert table["Branciari"] is False
    assert data["classification"]["family_ratios"][-1]["exact"] == "62/75"
    json.dumps(data)

    markdown_text = e1_report.to_markdown()
    assert "| CClassIntegralSuzuki |" in markdown_text
    html = render_markdown_html(markdown_text)
    assert "<table>" in html
    assert 'type="checkbox"' in html

    csv_text = render_csv(e1_report.csv_rows())
    assert csv_text.splitlines()[0].startswith("theorem,holds,pairs")
    assert len(csv_text.splitlines()) == 6


def test_small_truncation_still_reproduces():
    report = build_e1_report(5, LabSettings())
    assert report.reproduced
    assert report.summary.report_for(Theorem.BRANCIARI).violations


def test_envelope_echoes_version_and_tolerances():
    settings = LabSettings(compareTolerance=1e-6)
    envelope = report_envelope("verify-space", {"ok": True}, settings)

    assert envelope["tool"] == "suzuki-lab"
    assert envelope["version"] == lab_config.TOOL_VERSION
    assert envelope["tolerances"]["compare"] == 1e-6
    assert envelope["config"]["reportsRoot"].endswith("reports")
    assert envelope["result"] == {"ok": True}


def test_hypothesis_model_builds_specs():
    model = HypothesisModel.model_validate(
        {
            "theorem": "CClassIntegralSuzuki",
            "alpha": "5/12",
            "F": {"kind": "cclass", "id": 3},
            "gp": {"psi": {"kind": "linear", "scale": 2}},
            "gauge": {"kind": "quadrature", "name": "constant"},
        }
    )
    spec = model.build(LabSettings())
    assert spec.theorem is Theorem.CCLASS_INTEGRAL_SUZUKI
    assert str(spec.alpha) == "5/12"
    assert spec.gauge(3.0) == pytest.approx(3.0)
    assert spec.tol == LabSettings().compareTolerance


def test_space_file_model_loads_example_shape():
    model = SpaceFileModel.model_validate(
        {
            "points": [{"label": "a", "coords": [0, 0]}, {"label": "b", "coords": [1, 0]}],
            "map": [0, 0],
            "hypotheses": [{"theorem": "Banach", "beta": 0.5}],
        }
    )
    space, self_map = model.load()
    assert space.size == 2
    assert self_map.image == (0, 0)


def test_volterra_model_defaults_come_from_settings():
    model = VolterraProblemModel.model_validate({"K": {"kind": "linear", "lambda": 0.5}, "M": 20})
    settings = LabSettings(stopTolerance=1e-10, maxIterations=50)
    rule = model.stop_rule(settings)
    assert rule.stop_tol == 1e-10
    assert rule.max_iter == 50

    problem = model.build(settings)
    assert problem.M == 20
    assert problem.g_values.shape == (21, 1)
    assert problem.hypothesis is None
