import json
import runpy
import sys
from pathlib import Path

SCRIPTS = Path(__file__).resolve().parent.parent / "scripts"


def run_script(name, monkeypatch, *argv):
    monkeypatch.setattr(sys, "argv", [name, *map(str, argv)])
    runpy.run_path(str(SCRIPTS / name), run_name="__main__")


def test_run_experiment(monkeypatch, tmp_path, capsys):
    out = tmp_path / "summary.json"
    run_script("run_experiment.py", monkeypatch, "--runs", 2, "--duration", 120, "--classifiers", "dt,knn", "--out", out)
    text = capsys.readouterr().out
    assert "DT SCORING STATISTICS (raw [PCA-augmented])" in text
    body = json.loads(out.read_text())
    assert set(body["delta_f1"]) == {"dt", "knn"}
    assert len(body["explained_variance_ratio"]) == 3


def test_export_pca_scores(monkeypatch, tmp_path, capsys):
    run_script("export_pca_scores.py", monkeypatch, "--runs", 1, "--out-dir", tmp_path)
    files = sorted(p.name for p in tmp_path.iterdir())
    assert files == ["components_1_2.csv", "components_1_3.csv", "components_2_3.csv"]
    lines = (tmp_path / "components_1_2.csv").read_text().splitlines()
    assert lines[0] == "component_1,component_2,label"
    assert len(lines) == 1 + 3 * 120
