import csv
import io
import json
from pathlib import Path

import pytest

from geokahler.cli import EXIT_FAIL, EXIT_PASS, EXIT_USAGE, SCHEMA, main, run

SPECS = Path(__file__).resolve().parent.parent / "docs" / "specs"


def _json(argv):
    code, text = run(argv + ["--format", "json"])
    return code, json.loads(text)


def _checks(rep):
    return {c["name"]: c for c in rep["checks"]}


def test_list():
    code, text = run(["list"])
    assert code == EXIT_PASS
    assert "kerr" in text and "plane_wave" in text
    code, rep = _json(["list"])
    assert rep["schema"] == SCHEMA
    assert [r[0] for r in rep["table"]["rows"]] == sorted(r[0] for r in rep["table"]["rows"])


def test_verify_plane_wave_json():
    code, rep = _json(["verify", "plane_wave", "--samples", "6"])
    assert code == EXIT_PASS
    assert rep["verdict"] == "pass"
    assert rep["config"]["samples"] == 6
    names = _checks(rep)
    for key in ("expected.iota", "oracle.finite_difference", "admissible", "kahler.d_omega", "kahler.min_eig",
                "transfer.shear", "variation.biconformal", "optics.iota_min"):
        assert key in names, key
    for c in rep["checks"]:
        assert set(c) >= {"name", "max_residual", "tolerance", "pass", "skipped", "expected_negative", "note"}


def test_verify_json_is_deterministic():
    argv = ["verify", "de_sitter", "--samples", "5", "--format", "json"]
    assert run(argv)[1] == run(argv)[1]


def test_wall_time_only_on_request():
    _, rep = _json(["verify", "plane_wave", "--samples", "3", "--check", "expected"])
    assert "wall_time_s" not in rep
    _, rep = _json(["verify", "plane_wave", "--samples", "3", "--check", "expected", "--wall-time"])
    assert rep["wall_time_s"] >= 0


def test_kerr_admissibility_is_expected_negative():
    code, text = run(["verify", "kerr", "--samples", "4", "--check", "admissible"])
    assert code == EXIT_PASS
    assert "XFAIL" in text and "admissible" in text


def test_known_conflict_fails_verdict():
    code, rep = _json(["verify", "direct_product_hopf", "--samples", "4", "--check", "expected"])
    assert code == EXIT_FAIL
    failing = [c["name"] for c in rep["checks"] if c["pass"] is False]
    assert failing == ["expected.hopf_iota_sq"]


def test_param_and_f_overrides():
    code, rep = _json(["verify", "direct_product_hopf", "--f", "affine:-2", "--samples", "5", "--check", "transfer"])
    c = _checks(rep)
    assert rep["spacetime"]["f"] == "affine:-2"
    assert c["transfer.geodesic"]["pass"] is True
    code, rep = _json(["verify", "kerr", "--param", "a=3", "--samples", "3", "--check", "expected.iota"])
    assert rep["spacetime"]["params"]["a"] == 3.0


@pytest.mark.parametrize("argv,message", [
    (["verify", "kerr", "--param", "a=0.5"], "a > m"),
    (["verify", "nosuch"], "unknown entry"),
    (["verify", "kerr", "--param", "mass=1"], "no parameter"),
    (["verify", "kerr", "--param", "a"], "name=value"),
    (["region", "plane_wave", "--box", "u=1:0"], "empty"),
    (["region", "plane_wave", "--box", "w=0:1"], "w"),
    (["verify", "plane_wave", "--samples", "0"], "positive"),
    (["verify", "plane_wave", "--check", "nothing"], "selects no checks"),
    (["verify", "plane_wave", "--f", "cubic"], "cubic"),
    (["verify", "plane_wave", "--spec", "x.spec"], "not both"),
    (["verify"], "entry"),
    (["custom", "/nonexistent/file.spec"], "nonexistent"),
])
def test_usage_errors_exit_2(argv, message):
    code, text = run(argv)
    assert code == EXIT_USAGE
    assert text.startswith("geokahler: error:")
    assert message in text


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        run(["verify", "plane_wave", "--format", "yaml"])
    assert exc.value.code == 2


def test_tolerance_from_environment(monkeypatch):
    monkeypatch.setenv("GEOKAHLER_TOL", "1e-3")
    _, rep = _json(["verify", "plane_wave", "--samples", "2", "--check", "admissible"])
    assert rep["config"]["tol"] == 1e-3
    monkeypatch.setenv("GEOKAHLER_TOL", "abc")
    assert run(["verify", "plane_wave", "--samples", "2"])[0] == EXIT_USAGE


def test_region_csv():
    code, text = run(["region", "plane_wave", "--samples", "5", "--format", "csv"])
    assert code == EXIT_PASS
    rows = list(csv.reader(io.StringIO(text)))
    header = rows[0]
    assert header[:5] == ["index", "u", "v", "x", "y"]
    assert header[-1] == "in_region"
    body = [r for r in rows[1:] if r and r[0].isdigit()]
    assert len(body) == 5
    assert all(r[-1] == "true" for r in body)


def test_region_petrov_columns():
    _, rep = _json(["region", "nut", "--samples", "3"])
    assert rep["table"]["columns"][-3:] == ["iota", "d_kp_fp", "in_region"]


def test_curvature_skr_killing():
    code, rep = _json(["curvature", "skr", "--samples", "3", "--case", "killing"])
    assert code == EXIT_PASS
    assert all(c["pass"] for c in rep["checks"] if c["pass"] is not None and not c["skipped"])


def test_curvature_auto_picks_applicable_case():
    code, rep = _json(["curvature", "skr_geodesic", "--samples", "3"])
    assert code == EXIT_PASS
    assert rep["case"] == "geodesic"


def test_curvature_refusals():
    code, text = run(["curvature", "kerr", "--samples", "2"])
    assert code == EXIT_FAIL and "refused" in text
    code, text = run(["curvature", "skr", "--samples", "2", "--case", "geodesic"])
    assert code == EXIT_FAIL and "hypothesis" in text


def test_custom_specs():
    code, rep = _json(["custom", str(SPECS / "plane_wave.spec"), "--samples", "5"])
    assert code == EXIT_PASS and rep["spacetime"]["id"] == "custom:plane_wave"
    code, rep = _json(["custom", str(SPECS / "minkowski.spec"), "--samples", "5"])
    assert code == EXIT_FAIL
    assert _checks(rep)["optics.iota_max"]["max_residual"] == 0.0


def test_custom_spec_error_reports_line(tmp_path):
    bad = tmp_path / "bad.spec"
    bad.write_text("[chart\n")
    code, text = run(["custom", str(bad)])
    assert code == EXIT_USAGE and "line 1:" in text


def test_out_file(tmp_path):
    out = tmp_path / "r.json"
    code, text = run(["verify", "plane_wave", "--samples", "2", "--check", "expected", "--format", "json",
                      "--out", str(out)])
    assert code == EXIT_PASS and text == ""
    assert json.loads(out.read_text())["verdict"] == "pass"


def test_main_streams(capsys):
    assert main(["verify", "nosuch"]) == EXIT_USAGE
    err = capsys.readouterr().err
    assert "unknown entry" in err
    assert main(["list"]) == EXIT_PASS
    assert "kerr" in capsys.readouterr().out
