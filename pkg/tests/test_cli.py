"""Subcommand behavior, exit codes, error records, and output determinism."""

import json

from sgma.cli import main

FOLD = ["--chart", "T", "--potential", "y^2/2 - x^2*Z/2 + Z^3/6"]


def _run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_classify_point_labels(capsys):
    code, out, _ = _run(capsys, ["classify", *FOLD, "--point", "0,0,1"])
    assert code == 0
    report = json.loads(out)
    assert report["label"] == "hyperbolic"
    code, out, _ = _run(capsys, ["classify", *FOLD, "--point", "0,0,0"])
    assert json.loads(out)["label"] == "parabolic"
    code, out, _ = _run(capsys, ["classify", "--chart", "P", "--potential",
                                 "(x^2 + y^2 + z^2)/2", "--point", "0,0,0"])
    assert json.loads(out)["label"] == "elliptic"


def test_classify_grid_csv(capsys):
    code, out, _ = _run(capsys, ["classify", *FOLD, "--grid",
                                 "x=0:0:1,y=0:0:1,Z=-1:1:3"])
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "x,y,Z,eig1,eig2,eig3,label"
    assert len(lines) == 4
    assert lines[1].endswith("elliptic")
    assert lines[2].endswith("parabolic")
    assert lines[3].endswith("hyperbolic")


def test_residual_numeric_and_symbolic(capsys):
    code, out, _ = _run(capsys, ["residual", "--chart", "P", "--potential",
                                 "(x^2 + y^2 + z^2)/2", "--eps-q", "2",
                                 "--point", "1,2,3"])
    assert code == 0 and json.loads(out)["residual"] == -1
    code, out, _ = _run(capsys, ["residual", *FOLD, "--symbolic"])
    report = json.loads(out)
    assert report["is_zero"] is True and report["residual"] == "0"


def test_singular_locus(capsys):
    code, out, _ = _run(capsys, ["singular", *FOLD])
    assert code == 0 and json.loads(out)["locus"] == "-Z"


def test_caustic_csv(capsys):
    code, out, _ = _run(capsys, ["caustic", *FOLD, "--grid", "x=2:2:1,y=0:0:1"])
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0].startswith("chart_1,")
    fields = lines[1].split(",")
    assert fields[3:6] == ["2", "0", "2"]  # base point (2, 0, 2)


def test_fiber_report(capsys):
    code, out, _ = _run(capsys, ["fiber", *FOLD, "--base", "2,0,0"])
    assert code == 0
    report = json.loads(out)
    assert [f["chart_point"][2] for f in report["fiber"]] == [-2, 2]
    assert report["convex_branch"] == 0 and report["ambiguous"] is False


def test_trace_reaches_boundary(capsys):
    code, out, _ = _run(capsys, ["trace", *FOLD, "--q", "0,0,1", "--p", "0,1,?",
                                 "--null-root", "1", "--max-steps", "5000"])
    assert code == 0
    assert out.strip().endswith("# termination=parabolic_boundary")


def test_trace_fixed_point_is_accepted(capsys):
    # H = 0 holds for p = 0; the trace is constant and exhausts its budget.
    code, out, _ = _run(capsys, ["trace", *FOLD, "--q", "0,0,1", "--p", "0,0,0",
                                 "--max-steps", "10"])
    assert code == 0
    assert out.strip().endswith("# termination=max_steps")


def test_trace_non_null_start_is_domain_error(capsys):
    code, _, err = _run(capsys, ["trace", *FOLD, "--q", "0,0,1", "--p", "1,1,1"])
    assert code == 3
    record = json.loads(err.strip())
    assert record["error"]["code"] == 3


def test_trace_no_completion_is_domain_error(capsys):
    # elliptic point: no real null completion with nonzero fixed components
    code, _, err = _run(capsys, ["trace", *FOLD, "--q", "0,0,-1", "--p", "0,1,?"])
    assert code == 3
    assert json.loads(err.strip())["error"]["code"] == 3


def test_family_command(tmp_path, capsys):
    spec = {"t3": {}, "t2_constants": {"11": ["-1", "0"], "22": ["0", "1"]},
            "t1_constants": {}, "t0_constants": ["0", "0"]}
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec))
    code, out, _ = _run(capsys, ["family", "--spec", str(path), "--check"])
    assert code == 0
    report = json.loads(out)
    assert report["residual_is_zero"] is True
    assert report["degrees"] == {"t3": None, "t2": 1, "t1": None, "t0": 3}
    assert report["recursion_crosscheck"]["x^1*y^0"]["matches_derivation"] is False


def test_wind_command(capsys):
    code, out, _ = _run(capsys, ["wind", *FOLD, "--x", "2:2:1", "--z=-1:0:2"])
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0].startswith("x,y,z,domain_flag")
    assert len(lines) == 3


def test_malformed_config_exits_2(capsys):
    code, _, err = _run(capsys, ["classify", *FOLD, "--point", "not-a-point"])
    assert code == 2
    record = json.loads(err.strip())
    assert record["error"]["code"] == 2


def test_nonpositive_tolerances_exit_2(capsys):
    code, _, _ = _run(capsys, ["classify", *FOLD, "--point", "0,0,1", "--tol", "0"])
    assert code == 2
    code, _, _ = _run(capsys, ["caustic", *FOLD, "--grid", "x=0:1:2,y=0:0:1",
                               "--tol=-1"])
    assert code == 2
    code, _, _ = _run(capsys, ["trace", *FOLD, "--q", "0,0,1", "--p", "0,0,0",
                               "--step=-0.1"])
    assert code == 2


def test_bad_potential_exits_2(capsys):
    code, _, err = _run(capsys, ["classify", "--chart", "T", "--potential", "2x",
                                 "--point", "0,0,1"])
    assert code == 2


def test_missing_gf_exits_2(capsys):
    code, _, err = _run(capsys, ["classify", "--point", "0,0,1"])
    assert code == 2


def test_unknown_flag_exits_2(capsys):
    code, _, err = _run(capsys, ["classify", "--nonsense"])
    assert code == 2
    assert json.loads(err.strip())["error"]["code"] == 2


def test_gf_file_and_config_merge(tmp_path, capsys):
    gf_path = tmp_path / "gf.json"
    gf_path.write_text(json.dumps({
        "chart": "T", "potential": "y^2/2 - x^2*Z/2 + Z^3/6", "eps_q": "1"}))
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"gf-file": str(gf_path), "point": "0,0,1"}))
    code, out, _ = _run(capsys, ["classify", "--config", str(cfg_path)])
    assert code == 0 and json.loads(out)["label"] == "hyperbolic"
    # explicit flag overrides the config value
    code, out, _ = _run(capsys, ["classify", "--config", str(cfg_path),
                                 "--point", "0,0,-1"])
    assert json.loads(out)["label"] == "elliptic"


def test_unknown_config_key_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"chart": "T", "potentail": "Z"}))
    code, _, err = _run(capsys, ["classify", "--config", str(cfg)])
    assert code == 2
    assert "potentail" in json.loads(err.strip())["error"]["message"]


def test_output_determinism(tmp_path, capsys):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    argv = ["wind", *FOLD, "--x=-2:2:9", "--z=-2:1:7", "--output"]
    assert main(argv + [str(out1)]) == 0
    assert main(argv + [str(out2)]) == 0
    capsys.readouterr()
    assert out1.read_bytes() == out2.read_bytes()


def test_verify_paper_list(capsys):
    code, out, _ = _run(capsys, ["verify-paper", "--list"])
    assert code == 0
    lines = out.strip().split("\n")
    assert len(lines) == 12
    assert lines[0].strip().startswith("1 ")
