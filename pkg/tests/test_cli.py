import json
import shutil
import subprocess

import pytest

from tabsynth.cli import main
from tabsynth.demo import write_demo


@pytest.fixture(scope="module")
def demo(tmp_path_factory):
    d = tmp_path_factory.mktemp("demo")
    write_demo(d, n=300)
    return d


@pytest.fixture(scope="module")
def model(demo):
    path = demo / "model.sbm"
    assert main(["fit", "bayes_net", str(demo / "mixed.csv"), str(demo / "mixed.schema.json"), "-o", str(path)]) == 0
    return path


def test_generate_writes_requested_rows(model, tmp_path):
    out = tmp_path / "out.csv"
    assert main(["generate", str(model), "-n", "100", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 101 and lines[0].split(",")[0] == "age"


def test_generate_with_condition(model, tmp_path, demo):
    out = tmp_path / "cond.csv"
    assert main(["generate", str(model), "-n", "40", "--condition", "sex=f", "-o", str(out)]) == 0
    assert main(["validate", str(out), str(demo / "mixed.schema.json")]) == 0
    header, *rows = out.read_text().splitlines()
    col = header.split(",").index("sex")
    assert {r.split(",")[col] for r in rows} == {"f"}


def test_unknown_subcommand_is_usage_error(capsys):
    assert main(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err.lower()
    assert main([]) == 1


def test_schema_mismatch_is_data_error(demo, capsys):
    code = main(["evaluate", str(demo / "mixed.csv"), str(demo / "survival.csv"), str(demo / "mixed.schema.json")])
    assert code == 2
    assert capsys.readouterr().err.strip()


def test_corrupt_model_is_data_error(demo, tmp_path):
    bad = tmp_path / "bad.sbm"
    bad.write_bytes(b"SBM1 not really a model")
    assert main(["generate", str(bad), "-n", "5", "-o", str(tmp_path / "x.csv")]) == 2


def test_evaluate_json_output(demo, model, tmp_path, capsys):
    synth = tmp_path / "synth.csv"
    main(["generate", str(model), "-n", "300", "-o", str(synth)])
    capsys.readouterr()
    assert main(["--format", "json", "evaluate", str(demo / "mixed.csv"), str(synth),
                 str(demo / "mixed.schema.json"), "--metrics", "js_distance", "mmd"]) == 0
    names = {e["name"] for e in json.loads(capsys.readouterr().out)["metrics"]}
    assert names == {"js_distance", "mmd"}


def test_plugins_listing(capsys):
    assert main(["plugins"]) == 0
    assert "privbayes" in capsys.readouterr().out


@pytest.mark.skipif(shutil.which("tabsynth") is None, reason="console script not installed")
def test_console_script(demo):
    proc = subprocess.run(["tabsynth", "validate", str(demo / "mixed.csv"), str(demo / "mixed.schema.json")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "ok"
