import json

import pytest

from eqgan import config as config_mod
from eqgan.cli import OUTPUT_ROOT_ENV, main


def write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_validate_empty_file_echoes_defaults(tmp_path, capsys):
    assert main(["validate", write(tmp_path, "")]) == 0
    out = capsys.readouterr()
    assert out.err == ""
    echoed = config_mod.load(out.out)
    assert echoed == config_mod.load("")
    assert echoed["experiment"] == "MODE_COLLAPSE"
    assert echoed["training"]["learning_rate_g"] == config_mod.DEFAULTS["training"]["learning_rate_g"]


def test_validate_valid_file_has_no_diagnostics(tmp_path, capsys):
    assert main(["validate", write(tmp_path, "experiment: QRAM_TRAIN\nseeds: [1, 2]\n")]) == 0
    assert capsys.readouterr().err == ""


def test_negative_learning_rate_diagnostic(tmp_path, capsys):
    path = write(tmp_path, "experiment: VANISHING_GRADIENT\ntraining:\n  learning_rate_g: -0.1\n")
    assert main(["validate", path]) == 2
    err = capsys.readouterr().err
    assert "line 3" in err and "training.learning_rate_g" in err and "must be > 0" in err
    assert main(["run", path]) == 2


def test_unknown_experiment_names_choices(tmp_path, capsys):
    assert main(["run", write(tmp_path, "experiment: NOPE\n")]) == 2
    err = capsys.readouterr().err
    assert err.count("unknown experiment") == 1
    for name in config_mod.EXPERIMENTS:
        assert name in err


def test_unknown_field_and_syntax_error(tmp_path, capsys):
    assert main(["validate", write(tmp_path, "training:\n  bogus: 3\n")]) == 2
    assert "line 2: training.bogus: unknown field" in capsys.readouterr().err
    assert main(["validate", write(tmp_path, "training: [1,\n")]) == 2
    assert "syntax error" in capsys.readouterr().err
    assert main(["validate", str(tmp_path / "missing.yaml")]) == 2


@pytest.mark.parametrize("text", ["seeds: [0.5]\n", "training:\n  gradient: EXACT\n", "noise: 3\n",
                                  "qnn:\n  budget: -1\n",
                                  "experiment: SWEEP\nsweep:\n  parameter: training.nothing\n",
                                  "experiment: SWEEP\nsweep:\n  parameter: training.lr_decay\n  values: [2.0]\n"])
def test_invalid_values(text):
    _, diags = config_mod.resolve(text)
    assert diags


def test_list_experiments(capsys):
    assert main(["list-experiments"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [line.split()[0] for line in lines] == list(config_mod.EXPERIMENTS)


def _run(tmp_path, out, capsys):
    path = write(tmp_path, "experiment: VANISHING_GRADIENT\n")
    assert main(["run", path, "--output-dir", str(out)]) == 0
    return capsys.readouterr().out


def test_run_outputs_and_manifest(tmp_path, capsys):
    out = tmp_path / "run"
    printed = _run(tmp_path, out, capsys)
    assert "eqgan_final_overlap" in printed
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["experiment"] == "VANISHING_GRADIENT"
    assert manifest["config"]["seeds"] == [0]
    assert "timestamp" in manifest and manifest["version"]
    assert {"metrics.csv", "summary.txt", "seed0/eqgan.csv", "seed0/frozen_swap.csv"} <= set(manifest["files"])


def test_rerun_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    _run(tmp_path, a, capsys)
    _run(tmp_path, b, capsys)
    csvs = sorted(p.relative_to(a) for p in a.rglob("*.csv"))
    assert csvs
    for rel in csvs:
        assert (a / rel).read_bytes() == (b / rel).read_bytes()
    ma, mb = (json.loads((d / "manifest.json").read_text()) for d in (a, b))
    assert ma["files"] == mb["files"]
    # Overwriting an existing directory gives the same bytes again.
    _run(tmp_path, a, capsys)
    assert json.loads((a / "manifest.json").read_text())["files"] == mb["files"]


def test_output_root_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path / "root"))
    path = write(tmp_path, "experiment: MODE_COLLAPSE\noutput_dir: mc\ntraining:\n  outer_iterations: 20\n")
    assert main(["run", path]) == 0
    assert (tmp_path / "root" / "mc" / "summary.txt").exists()
    assert "oscillation detected: period 2" in capsys.readouterr().out


def test_runtime_failure_exits_one(tmp_path, monkeypatch, capsys):
    import eqgan.experiments as ex

    def boom(cfg, out, files):
        raise RuntimeError("simulated failure")

    monkeypatch.setitem(ex.RUNNERS, "MODE_COLLAPSE", boom)
    assert main(["run", write(tmp_path, ""), "--output-dir", str(tmp_path / "x")]) == 1
    assert "simulated failure" in capsys.readouterr().err


def test_sweep_layers_base_defaults_under_user_fields():
    cfg = config_mod.load("experiment: SWEEP\ntraining:\n  pretrain: false\n")
    # Noisy-experiment defaults apply, but an explicit value wins even when it equals the global default.
    assert cfg["noise"]["enabled"] is True
    assert cfg["training"]["learning_rate_d"] == 0.3
    assert cfg["training"]["pretrain"] is False


def test_sweep_run(tmp_path, capsys):
    path = write(tmp_path, "experiment: SWEEP\nseeds: [0]\nsweep:\n  base: VANISHING_GRADIENT\n"
                           "  parameter: training.learning_rate_g\n  values: [0.2, 0.3]\n")
    out = tmp_path / "sweep"
    assert main(["run", path, "--output-dir", str(out)]) == 0
    lines = (out / "metrics.csv").read_text().splitlines()
    assert lines[0].startswith("value,seed,gradient_norm")
    assert [float(line.split(",")[0]) for line in lines[1:]] == [0.2, 0.3]
    assert (out / "value1" / "seed0" / "eqgan.csv").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert "value0/seed0/frozen_swap.csv" in manifest["files"]
