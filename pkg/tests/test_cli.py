import io
import json
import subprocess
import sys

import pytest

from reflsos.cli import ORACLE_CAP, dumps, main
from reflsos.model import params_to_json, random_params


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


def records(text):
    return [json.loads(line) for line in text.splitlines()]


def strip_elapsed(recs):
    return [{k: v for k, v in r.items() if k != "elapsed_s"} for r in recs]


def test_compute_all_agree():
    code, text = run("compute", "--method", "all", "--n", "2", "--seed", "7")
    assert code == 0
    recs = records(text)
    assert recs[0]["n_sites"] == 2 and recs[0]["seed"] == 7 and "params" in recs[0]
    zs = {r["method"]: complex(*r["z"]) for r in recs[1:]}
    assert set(zs) == {"oracle", "fbasis", "determinant"}
    for m in ("fbasis", "determinant"):
        assert abs(zs[m] - zs["oracle"]) / abs(zs["oracle"]) < 1e-8
    assert all(r["residual_vs_oracle"] < 1e-8 for r in recs[1:] if r["method"] != "oracle")


def test_compute_printed_params_reproduce():
    _, text = run("compute", "--n", "3", "--seed", "4", "--p-mag", "0.2")
    head = records(text)[0]
    assert head["params"] == json.loads(dumps(params_to_json(random_params(3, 4, 0.2))))


def test_compute_deterministic():
    a = records(run("compute", "--method", "all", "--n", "3", "--seed", "1")[1])
    b = records(run("compute", "--method", "all", "--n", "3", "--seed", "1")[1])
    assert strip_elapsed(a) == strip_elapsed(b)


def test_compute_large_n_determinant():
    code, text = run("compute", "--method", "determinant", "--n", "50", "--seed", "1")
    assert code == 0
    rec = records(text)[1]
    assert rec["z"] is None and rec["log_z"][0] > 700
    assert rec["elapsed_s"] < 0.1


def test_compute_from_file(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps(params_to_json(random_params(2, 3))))
    code, text = run("compute", "--params", str(path), "--method", "oracle")
    assert code == 0
    (rec,) = records(text)
    assert rec["method"] == "oracle"


def test_malformed_json_exit_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{oops")
    code, text = run("compute", "--params", str(path))
    assert code == 2 and text == ""
    assert "malformed" in capsys.readouterr().err


def test_non_generic_exit_2(tmp_path):
    obj = params_to_json(random_params(1, 0))
    obj["theta"] = [0.0, 0.0]
    path = tmp_path / "p.json"
    path.write_text(json.dumps(obj))
    assert run("compute", "--params", str(path))[0] == 2


def test_missing_file_exit_2(tmp_path):
    assert run("compute", "--params", str(tmp_path / "none.json"))[0] == 2


def test_pole_caught_by_validation_exit_2(tmp_path):
    obj = params_to_json(random_params(2, 1))
    obj["theta"] = obj["eta"]  # h(theta - eta) = 0
    path = tmp_path / "p.json"
    path.write_text(json.dumps(obj))
    assert run("compute", "--params", str(path), "--method", "oracle")[0] == 2


def test_near_pole_exit_3_runtime(monkeypatch):
    from reflsos import cli
    from reflsos.exceptions import NearPoleError

    def boom(params):
        raise NearPoleError("h(test)", 0j)

    monkeypatch.setitem(cli.METHODS, "determinant", boom)
    assert run("compute", "--n", "2")[0] == 3


def test_oracle_cap():
    assert run("compute", "--method", "oracle", "--n", str(ORACLE_CAP + 1))[0] == 2


def test_bad_n():
    assert run("compute", "--n", "0")[0] == 2
    assert run("compute", "--p-mag", "1.0")[0] == 2


def test_csv_compute():
    code, text = run("compute", "--method", "all", "--n", "2", "--format", "csv")
    assert code == 0
    lines = text.splitlines()
    assert lines[0].startswith("method,z,elapsed_s")
    assert len(lines) == 4


def test_verify_filter():
    code, text = run("verify", "--check", "recursion-lower", "--n", "3")
    assert code == 0
    (rec,) = records(text)
    assert rec["check"] == "recursion-lower" and rec["passed"]


def test_verify_fault_injection_exit_1():
    code, text = run("verify", "--check", "dybe", "--inject-fault")
    assert code == 1
    assert records(text)[0]["passed"] is False


def test_verify_tolerance_override():
    code, text = run("verify", "--check", "dybe", "--tol", "dybe=1e-40")
    assert code == 1 and records(text)[0]["threshold"] == 1e-40


def test_verify_bad_names():
    assert run("verify", "--check", "nope")[0] == 2
    assert run("verify", "--tol", "dybe")[0] == 2
    assert run("verify", "--tol", "dybe=abc")[0] == 2


def test_hidden_flag_not_in_help(capsys):
    with pytest.raises(SystemExit):
        from reflsos.cli import build_parser
        build_parser().parse_args(["verify", "--help"])
    assert "inject" not in capsys.readouterr().out


def test_bench_csv():
    code, text = run("bench", "--n", "3", "--format", "csv")
    assert code == 0
    lines = text.splitlines()
    assert lines[0] == "N,t_oracle_s,t_det_s,rel_diff"
    rows = [line.split(",") for line in lines[1:]]
    assert [int(r[0]) for r in rows] == list(range(1, 7))
    for r in rows[:3]:
        assert float(r[3]) < 1e-8
    assert all(r[1] == "" for r in rows[3:])


def test_bench_cap_note(capsys, monkeypatch):
    from reflsos import cli
    monkeypatch.setattr(cli, "ORACLE_CAP", 1)
    code, text = run("bench", "--n", "2")
    assert code == 0
    assert "omitted" in capsys.readouterr().err
    recs = records(text)
    assert recs[0]["t_oracle_s"] is not None and recs[1]["t_oracle_s"] is None


def test_json_17_digits():
    assert dumps({"x": 0.1}) == '{"x": 0.10000000000000001}'
    assert json.loads(dumps([1 / 3]))[0] == 1 / 3
    assert dumps(float("nan")) == "null"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "reflsos", "compute", "--n", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert len(proc.stdout.splitlines()) == 2
