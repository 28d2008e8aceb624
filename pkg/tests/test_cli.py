import json

import pytest

from affine_kit import AffineModel, Canonical
from affine_kit.cli import RunConfig, main, run
from affine_kit.closedforms import oracle_model

TRANSFORM_HALF = 0.42888194248035344


def test_transform_prints_value(wishart1, model_file, capsys):
    path = model_file(wishart1)
    code = main(["transform", "--model", path, "--x", "1", "--t", "0.5",
                 "--u", "-1+0j"])
    assert code == 0
    out = capsys.readouterr().out.strip()
    assert abs(complex(out) - TRANSFORM_HALF) < 1e-9


def test_transform_writes_trajectory(wishart1, model_file, tmp_path, capsys):
    path = model_file(wishart1)
    csv = tmp_path / "traj.csv"
    code = main(["transform", "--model", path, "--x", "1", "--t", "0.5",
                 "--u", "-1+0j", "--out", str(csv)])
    assert code == 0
    lines = csv.read_text().strip().splitlines()
    assert lines[0].startswith("t,re_phi,im_phi")
    assert lines[-1] == "# status=complete"
    capsys.readouterr()


def test_transform_killed_note(wishart1, model_file, capsys):
    path = model_file(wishart1)
    with pytest.warns(UserWarning, match="outside U"):
        code = main(["transform", "--model", path, "--x", "1", "--t", "1",
                     "--u", "1+0j"])
    assert code == 0  # killed transform is a defined value (0)
    captured = capsys.readouterr()
    assert complex(captured.out.strip()) == 0.0
    assert "killed" in captured.err


def test_riccati_stdout_and_file(chain2, model_file, tmp_path, capsys):
    path = model_file(chain2)
    code = main(["riccati", "--model", path, "--u", "-1+0j", "--horizon", "1"])
    assert code == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "t,re_phi,im_phi,re_psi_1,im_psi_1"
    csv = tmp_path / "r.csv"
    assert main(["riccati", "--model", path, "--u", "-1+0j", "--horizon", "1",
                 "--out", str(csv)]) == 0
    assert csv.read_text() == out
    capsys.readouterr()


def test_riccati_blow_up_status(wishart1, model_file, capsys):
    path = model_file(wishart1)
    with pytest.warns(UserWarning, match="outside U"):
        code = main(["riccati", "--model", path, "--u", "1+0j", "--horizon", "1"])
    assert code == 0  # the trajectory up to t_star is still a valid artifact
    captured = capsys.readouterr()
    assert "status=blow_up t_star=" in captured.err
    assert "# status=blow_up" in captured.out


def test_simulate_outputs_deterministic(chain2, model_file, tmp_path, capsys):
    path = model_file(chain2)
    args = ["simulate", "--model", path, "--x0", "0", "--horizon", "1",
            "--dt", "0.01", "--n-paths", "500", "--seed", "7",
            "--scheme", "gillespie_exact", "--record-every", "20"]
    outs = []
    for tag in ("a", "b"):
        csv = tmp_path / f"paths_{tag}.csv"
        summary = tmp_path / f"summary_{tag}.json"
        code = main(args + ["--out", str(csv), "--summary-out", str(summary)])
        assert code == 0
        outs.append((csv.read_bytes(), summary.read_bytes()))
    assert outs[0] == outs[1]
    doc = json.loads(outs[0][1])
    assert doc["n_paths"] == 500 and doc["scheme"] == "gillespie_exact"
    capsys.readouterr()


def test_simulate_threads_flag_and_env(brownian, model_file, tmp_path,
                                       monkeypatch, capsys):
    path = model_file(brownian)
    args = ["simulate", "--model", path, "--x0", "0", "--horizon", "0.1",
            "--dt", "0.01", "--n-paths", "2500", "--seed", "3",
            "--record-every", "10"]
    s1 = tmp_path / "s1.json"
    s4 = tmp_path / "s4.json"
    assert main(args + ["--threads", "1", "--summary-out", str(s1)]) == 0
    monkeypatch.setenv("AFFINE_KIT_THREADS", "4")
    assert main(args + ["--summary-out", str(s4)]) == 0
    assert s1.read_bytes() == s4.read_bytes()
    monkeypatch.setenv("AFFINE_KIT_THREADS", "many")
    assert main(args + ["--summary-out", str(s4)]) == 1
    capsys.readouterr()


def test_verify_suite_exit_status(tmp_path, capsys):
    out = tmp_path / "bundle.json"
    code = main(["verify", "--suite", "mc", "--seed", "42", "--n-paths", "300",
                 "--out", str(out)])
    assert code == 0
    assert "passed=True" in capsys.readouterr().out
    bundle = json.loads(out.read_text())
    assert bundle["passed"] is True
    assert set(bundle["reports"]) == {"mc_transform", "martingale"}


def test_oracle_json(capsys):
    code = main(["oracle", "--name", "wishart1d", "--x", "1"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert abs(doc["value"]["re"] - TRANSFORM_HALF) < 1e-12
    assert doc["t"] == 0.5  # default


def test_oracle_dump_model_round_trip(tmp_path, capsys):
    dump = tmp_path / "wishart1d.json"
    code = main(["oracle", "--name", "wishart1d", "--dump-model", str(dump)])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["model_path"] == str(dump)
    again = AffineModel.from_json(str(dump))
    assert again.to_dict() == oracle_model("wishart1d").to_dict()


def test_oracle_chain_cross_check(capsys):
    code = main(["oracle", "--name", "chain_k2", "--t", "1", "--u", "-1+0j",
                 "--x", "0"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert abs(doc["value"]["re"] - doc["ctmc_value"]["re"]) < 1e-12


def test_exit_code_io_error(capsys):
    code = main(["transform", "--model", "/nonexistent/model.json",
                 "--x", "0", "--t", "1", "--u", "1j"])
    assert code == 3
    assert "I/O error" in capsys.readouterr().err


def test_exit_code_usage_errors(brownian, model_file, capsys):
    path = model_file(brownian)
    base = ["transform", "--model", path, "--x", "0", "--t", "1"]
    assert main(base + ["--u", "one"]) == 1          # unparseable complex
    assert main(base + ["--u", "1j", "--frmt", "x"]) == 1  # unknown flag
    assert main([]) == 1                             # missing subcommand
    assert main(base + ["--u", ""]) == 1             # empty vector
    capsys.readouterr()


def test_exit_code_validation_error(chain2, model_file, capsys):
    path = model_file(chain2)
    code = main(["transform", "--model", path, "--x", "0.5", "--t", "1",
                 "--u", "-1+0j"])
    assert code == 1
    assert "validation error" in capsys.readouterr().err


def test_exit_code_bad_model_content(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"space": {"kind": "Torus"}}\n')
    code = main(["transform", "--model", str(bad), "--x", "0", "--t", "1",
                 "--u", "1j"])
    assert code == 1
    capsys.readouterr()


def test_exit_code_numerical_failure(model_file, capsys):
    rotation = AffineModel(space=Canonical(m=2, n=2), B=[[0.0, -1.0], [1.0, 0.0]])
    path = model_file(rotation)
    code = main(["transform", "--model", path, "--x", "1,1", "--t", "1",
                 "--u", "-1+0j,-0.001+0j"])
    assert code == 2
    assert "numerical failure" in capsys.readouterr().err


def test_run_config_dispatch(wishart1, model_file, capsys):
    path = model_file(wishart1)
    cfg = RunConfig(command="transform", model_path=path,
                    params={"x": "1", "t": 0.5, "u": "-1+0j", "out": None})
    assert run(cfg) == 0
    out = capsys.readouterr().out.strip()
    assert abs(complex(out) - TRANSFORM_HALF) < 1e-9
    assert run(RunConfig(command="oracle", params={"name": "brownian", "t": 1.0})) == 0
    capsys.readouterr()
