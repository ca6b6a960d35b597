import json

import pytest

from berbench.cli import main


@pytest.fixture(scope="module")
def campaign(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    out = root / "out"
    assert main(["calibrate", "--family", "GvG", "--d", "2", "--range", "0.1", "0.4", "--cache", str(out / "calibration")]) == 0
    cfg = {
        "family": "GvG",
        "d": [2],
        "n_per_class": [20],
        "runs": 12,
        "ber_range": [0.1, 0.4],
        "estimators": ["knn_H", "ghp_M", "nb"],
        "output_dir": str(out),
    }
    (root / "config.json").write_text(json.dumps(cfg))
    assert main(["run", "--config", str(root / "config.json"), "--workers", "1"]) == 0
    return root, out


def test_calibrate_prints_summary(campaign, capsys):
    _, out = campaign
    assert main(["calibrate", "--family", "GvG", "--d", "2", "--range", "0.1", "0.4", "--cache", str(out / "calibration")]) == 0
    assert "GvG d=2" in capsys.readouterr().out


def test_run_writes_records(campaign):
    _, out = campaign
    lines = (out / "records" / "GvG_d2_n20.ndjson").read_text().splitlines()
    assert len(lines) == 12
    assert json.loads(out.joinpath("config.json").read_text())["runs"] == 12


def test_report_markdown_and_plots(campaign, capsys):
    root, out = campaign
    assert main(["report", "--records", str(out), "--best", "--plots", str(root / "plots")]) == 0
    text = capsys.readouterr().out
    assert text.startswith("| family | d | n_per_class | estimator")
    assert len(list((root / "plots").glob("*.svg"))) == 3


def test_report_csv_filtered(campaign, tmp_path):
    _, out = campaign
    dest = tmp_path / "t.csv"
    assert main(["report", "--records", str(out), "--format", "csv", "--estimators", "nb,knn_H", "--out", str(dest)]) == 0
    rows = dest.read_text().splitlines()
    assert len(rows) == 3 and rows[1].split(",")[3] == "nb"


def test_bad_config_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"family": "GvG", "d": [2], "n_per_class": [20], "runs": 0}))
    assert main(["run", "--config", str(bad)]) == 2
    assert "error" in capsys.readouterr().err


def test_report_empty_dir(tmp_path):
    assert main(["report", "--records", str(tmp_path)]) == 1
