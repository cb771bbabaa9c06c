import json

import numpy as np
import pytest

from schmidt_cert.cli import main
from schmidt_cert.serialization import operator_from_json


def _run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def files(tmp_path, capsys):
    paths = {}
    for name, argv in {
        "w32": ["witness", "--d", 3, "--r", 2],
        "w21": ["witness", "--d", 2, "--r", 1],
        "iso09": ["state", "--family", "isotropic", "--d", 3, "--p", 0.9],
        "iso03": ["state", "--family", "isotropic", "--d", 3, "--p", 0.3],
        "prod": ["state", "--family", "product", "--d", 2],
    }.items():
        paths[name] = tmp_path / f"{name}.json"
        assert _run(argv + ["--out", paths[name]], capsys)[0] == 0
    return paths


class TestWitness:
    def test_d3_r2(self, capsys):
        code, out, _ = _run(["witness", "--d", 3, "--r", 2], capsys)
        op, dims = operator_from_json(json.loads(out))
        assert code == 0 and dims == [3, 3]
        assert abs(op[0, 0] - 0.5) < 1e-15 and abs(op[0, 4] + 0.5) < 1e-15

    def test_r_equals_d_warns(self, capsys, caplog):
        code, out, _ = _run(["witness", "--d", 2, "--r", 2], capsys)
        assert code == 0 and "positive semidefinite" in caplog.text
        op, _ = operator_from_json(json.loads(out))
        assert np.linalg.eigvalsh(op)[0] > -1e-12

    def test_d8(self, capsys):
        code, out, _ = _run(["witness", "--d", 8, "--r", 2], capsys)
        op, _ = operator_from_json(json.loads(out))
        assert code == 0 and op.shape == (64, 64)
        assert abs(np.linalg.eigvalsh(op)[0] + 3) < 1e-12

    def test_invalid(self, capsys):
        assert _run(["witness", "--d", 3, "--r", 5], capsys)[0] == 1


class TestCertify:
    def test_certified(self, files, capsys):
        code, out, _ = _run(["certify", "--state", files["iso09"], "--witness", files["w32"]], capsys)
        rep = json.loads(out)
        assert code == 0 and rep["verdict"] == "certified"
        assert abs(rep["payoff"] - (5 - 8 * 0.9) / 6) < 1e-9

    def test_not_certified(self, files, capsys):
        code, out, _ = _run(["certify", "--state", files["iso03"], "--witness", files["w32"]], capsys)
        assert code == 0 and json.loads(out)["verdict"] == "not-certified"

    def test_product_state(self, files, capsys):
        code, out, _ = _run(["certify", "--state", files["prod"], "--witness", files["w21"]], capsys)
        rep = json.loads(out)
        assert code == 0 and rep["verdict"] == "not-certified" and rep["payoff"] == 0.0

    def test_compiled_with_sweep(self, files, capsys):
        code, out, _ = _run(["certify", "--state", files["iso09"], "--witness", files["w32"],
                             "--mode", "compiled", "--trials", 20, "--seed", 3], capsys)
        rep = json.loads(out)
        assert code == 0 and rep["trials"] == 20 and rep["seed"] == 3
        assert rep["worstCase"] >= -1e-7 and rep["diagnostics"]["sweep_sound"]

    def test_trials_need_seed(self, files, capsys):
        code, _, err = _run(["certify", "--state", files["iso09"], "--witness", files["w32"],
                             "--trials", 5], capsys)
        assert code == 1 and "seed" in err

    def test_dimension_mismatch(self, files, capsys):
        assert _run(["certify", "--state", files["prod"], "--witness", files["w32"]], capsys)[0] == 1


class TestPipeline:
    def test_decompose_synth_simulate(self, files, tmp_path, capsys):
        dec, game = tmp_path / "dec.json", tmp_path / "game.json"
        assert _run(["decompose", "--witness", files["w32"], "--out", dec], capsys)[0] == 0
        assert abs(json.loads(dec.read_text())["gamma"][0][0] - 0.5) < 1e-10
        assert _run(["synth", "--decomposition", dec, "--out", game], capsys)[0] == 0
        code, out, _ = _run(["simulate", "--game", game, "--state", files["iso09"]], capsys)
        lines = out.splitlines()
        assert code == 0 and lines[0] == "x,y,a,b,p" and len(lines) == 1 + 81 * 4

    def test_output_equal_to_input(self, files, capsys):
        code, _, err = _run(["decompose", "--witness", files["w32"], "--out", files["w32"]], capsys)
        assert code == 1 and "input" in err

    def test_chsh_scan(self, capsys):
        code, out, _ = _run(["chsh-scan", "--lambda-steps", 3], capsys)
        lines = out.splitlines()
        assert code == 0 and lines[0] == "lambda,value,quantity"
        assert lines[1].startswith("0,2.82842712475")


class TestErrors:
    def test_missing_file(self, files, tmp_path, capsys):
        code, _, _ = _run(["certify", "--state", tmp_path / "nope.json", "--witness", files["w32"]], capsys)
        assert code == 1

    def test_malformed_json(self, files, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"dims": [3, 3], "re": NaN}')
        assert _run(["certify", "--state", bad, "--witness", files["w32"]], capsys)[0] == 1

    def test_not_a_density(self, files, tmp_path, capsys):
        bad = tmp_path / "neg.json"
        bad.write_text(json.dumps({"dims": [3, 3], "re": (-np.eye(9)).tolist(), "im": np.zeros((9, 9)).tolist()}))
        assert _run(["certify", "--state", bad, "--witness", files["w32"]], capsys)[0] == 1

    def test_usage_error_exits_one(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["witness", "--d", "three"])
        assert exc.value.code == 1

    def test_reproduce_needs_seed(self, tmp_path, capsys):
        assert _run(["reproduce", "--out", tmp_path], capsys)[0] == 1


class TestReproduce:
    def test_writes_outputs(self, tmp_path, capsys):
        code, out, _ = _run(["reproduce", "--seed", 1, "--trials", 50, "--out", tmp_path], capsys)
        assert code == 0 and out.count("PASS") == 9
        checklist = json.loads((tmp_path / "checklist.json").read_text())
        assert checklist["passed"] and checklist["seed"] == 1
        assert sorted(p.name for p in tmp_path.iterdir()) == [
            "checklist.json", "chsh_scan.csv", "thresholds.csv", "witness_scan.csv"]
        chsh = (tmp_path / "chsh_scan.csv").read_text().splitlines()
        assert chsh[1] == "0,2.82842712475,chsh_value"
