import json

import pytest

from wmsync import cli, experiments as ex
from wmsync.exceptions import DecoderFailure
from wmsync.markov import TransitionMatrix

TINY = {"targets": [0.05], "n_matrices": 1, "runs_per_matrix": 2, "constant_iterations": 4,
        "message_bits": 40}


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(TINY))
    return path


def test_gen_matrix_stdout(capsys):
    assert cli.main(["gen-matrix", "--target", "0.05", "--seed", "1"]) == 0
    a4 = TransitionMatrix.from_json(capsys.readouterr().out)
    assert a4.states == ("T", "S", "D", "I")


def test_gen_matrix_file_and_simulate(tmp_path, capsys):
    m = tmp_path / "m.json"
    assert cli.main(["gen-matrix", "--target", "0.1", "--band", "2", "--out", str(m)]) == 0
    out = tmp_path / "sim"
    assert cli.main(["simulate", "--matrix", str(m), "--runs", "3", "--seed", "2",
                     "--out", str(out), "--decoders", "dm1,fsmc"]) == 0
    rows = ex.read_rows(out / "simulate.csv")
    assert len(rows) == 6 and {r["decoder"] for r in rows} == {"dm1", "fsmc"}
    assert "fsmc" in capsys.readouterr().out


def test_full_workflow(tmp_path, tiny_config):
    out = str(tmp_path / "res")
    common = ["--config", str(tiny_config), "--out", out, "--seed", "7"]
    assert cli.main(["sweep-constant", *common]) == 0
    assert cli.main(["sweep-overall", *common]) == 0
    assert cli.main(["analyze-errors", *common]) == 0
    assert cli.main(["analyze-ps", *common]) == 0
    assert cli.main(["plot", *common]) == 0
    names = {p.name for p in (tmp_path / "res").iterdir()}
    assert {"constant.csv", "matrices.json", "overall.csv", "error_levels.csv",
            "ps_effect.csv", "overall_niis.svg", "constant_sao.svg"} <= names
    overall = ex.read_rows(tmp_path / "res" / "overall.csv")
    assert list(overall[0]) == ex.OVERALL_COLUMNS
    assert overall[0]["base_seed"] == 7
    levels = ex.read_rows(tmp_path / "res" / "error_levels.csv")
    assert all(r["stationary_value"] != "" for r in levels)


@pytest.mark.parametrize("argv", [
    ["sweep-constant", "--bogus"],
    ["gen-matrix"],
    ["frobnicate"],
    ["sweep-constant", "--decoders", "viterbi"],
    ["simulate", "--matrix", "/nonexistent.json"],
])
def test_usage_errors_exit_1(argv, tmp_path):
    with pytest.raises(SystemExit) as info:
        code = cli.main(argv + ["--out", str(tmp_path)] if argv[0] != "frobnicate" else argv)
        raise SystemExit(code)
    assert info.value.code == 1


def test_missing_inputs_exit_1(tmp_path):
    assert cli.main(["analyze-ps", "--out", str(tmp_path)]) == 1
    assert cli.main(["plot", "--out", str(tmp_path)]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["sweep-constant", "--config", str(bad)]) == 1


def test_runtime_failure_exit_2():
    assert cli.main(["gen-matrix", "--target", "0.05", "--tol", "1e-12",
                     "--max-attempts", "1"]) == 2


def test_failure_rate_exit_2(tmp_path, tiny_config, monkeypatch):
    def boom(*args, **kwargs):
        raise DecoderFailure("forced")
    monkeypatch.setattr(ex, "decode", boom)
    assert cli.main(["sweep-constant", "--config", str(tiny_config),
                     "--out", str(tmp_path)]) == 2
