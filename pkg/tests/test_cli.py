import json
import subprocess
import sys

import pytest

from helio2d import _threads
from helio2d.cli import MANIFEST, main

TINY = {"k0": 0.5, "dk": 0.5, "J": 2, "L": 2, "M": 16, "nb": 10}


def _manifest(d):
    files = [p for p in d.iterdir() if p.name == MANIFEST]
    assert len(files) == 1
    return json.loads(files[0].read_text())


def test_table1_small(tmp_path, capsys):
    assert main(["table1", "--k", "0.5", "--out", str(tmp_path)]) == 0
    row = json.loads(capsys.readouterr().out.splitlines()[0])
    assert row["ok"] and row["N"] == 700 and row["error"] <= 1e-10
    m = _manifest(tmp_path)
    assert m["command"] == "table1" and m["status"] == "ok"
    assert len(m["config_hash"]) == 64 and m["versions"]["kernels"] in ("cython", "python")


def test_forward_with_config_override(tmp_path, capsys):
    cfg = tmp_path / "f.json"
    cfg.write_text(json.dumps({"k": 1.5, "M": 8, "N": 400}))
    out = tmp_path / "out"
    assert main(["forward", "--k", "9", "--config", str(cfg), "--out", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["k"] == 1.5 and summary["N"] == 400
    ff = json.loads((out / "farfield.json").read_text())
    assert len(ff["values"]) == 8 and ff["k"] == 1.5
    _manifest(out)


def test_filter(tmp_path):
    out = tmp_path / "f" / "c.json"
    assert main(["filter", "--curve", "star", "--b", "8", "--nb", "20", "--N", "128",
                 "--out", str(out)]) == 0
    assert out.exists()
    assert _manifest(out.parent)["command"] == "filter"


def test_synth_then_invert(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(TINY))
    data, inv = tmp_path / "data", tmp_path / "inv"
    assert main(["synth", "--config", str(cfg), "--delta", "0.02", "--seed", "4",
                 "--solver", "dense", "--out", str(data)]) == 0
    assert json.loads(capsys.readouterr().out)["max_noise_identity_error"] <= 1e-14
    assert _manifest(data)["status"] == "ok"
    assert main(["invert", "--data", str(data), "--config", str(cfg), "--out", str(inv)]) == 0
    result = json.loads(capsys.readouterr().out)
    assert len(result["iterations"]) == 2 and "hausdorff_to_true" in result
    assert (inv / "final_curve.json").exists() and _manifest(inv)["command"] == "invert"


def test_invert_rejects_inverse_crime(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(dict(TINY, J=1)))
    data = tmp_path / "data"
    assert main(["synth", "--config", str(cfg), "--solver", "dense", "--out", str(data)]) == 0
    capsys.readouterr()
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(dict(TINY, J=1, n_factor=100.0)))
    assert main(["invert", "--data", str(data), "--config", str(bad), "--out",
                 str(tmp_path / "x")]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "usage" and "n_factor" in err["message"]


def test_invert_missing_frequency(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(dict(TINY, J=1)))
    data = tmp_path / "data"
    main(["synth", "--config", str(cfg), "--solver", "dense", "--out", str(data)])
    more = tmp_path / "more.json"
    more.write_text(json.dumps(dict(TINY, J=3)))
    capsys.readouterr()
    assert main(["invert", "--data", str(data), "--config", str(more), "--out",
                 str(tmp_path / "x")]) == 2
    assert "k=1" in json.loads(capsys.readouterr().err)["message"]


@pytest.mark.parametrize("argv", [
    ["invert", "--data", "/nonexistent", "--out", "x"],
    ["synth", "--config", "/nonexistent.json", "--out", "x"],
    ["filter", "--curve", "/nonexistent.json", "--b", "3", "--N", "64", "--out", "x/c.json"],
])
def test_bad_inputs_give_json_errors(argv, capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) != 0
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert set(err) == {"error", "message"}


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"k0": 1.0, "colour": "red"}))
    assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "colour" in json.loads(capsys.readouterr().err)["message"]


def test_threads(monkeypatch):
    monkeypatch.setenv("HELIO2D_THREADS", "3")
    assert _threads.resolve() == 3
    assert _threads.resolve(2) == 2
    monkeypatch.setenv("HELIO2D_THREADS", "many")
    with pytest.raises(ValueError):
        _threads.resolve()
    with pytest.raises(ValueError):
        _threads.resolve(0)


def test_threads_flag_sets_blas_env_in_fresh_process(tmp_path):
    code = ("import os, sys; from helio2d import _threads; _threads.configure(2);"
            "print(os.environ['OMP_NUM_THREADS'], _threads.get())")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["2", "2"]


def test_console_entry_point_help():
    out = subprocess.run([sys.executable, "-m", "helio2d.cli", "--help"], capture_output=True,
                         text=True, check=True)
    for cmd in ("forward", "synth", "invert", "filter", "table1"):
        assert cmd in out.stdout
