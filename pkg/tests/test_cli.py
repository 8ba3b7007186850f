import csv
import io
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divlim import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_analyze_default_integrand(capsys):
    code, out, _ = run(capsys, "analyze", "1/(p+q+m^2)", "--m", "1", "--q", "1", "--format", "json")
    row = json.loads(out)["rows"][0]
    assert code == 0
    assert (row["omega"], row["verdict"], row["pole_free"]) == (0, "Divergent", True)
    assert abs(row["numeric_slope"]) < 0.05


def test_analyze_convergent(capsys):
    code, out, _ = run(capsys, "analyze", "1/(p+q+m^2)^2", "--m", "1", "--q", "1", "--format", "json")
    row = json.loads(out)["rows"][0]
    assert (row["omega"], row["verdict"]) == (-1, "Convergent")


@pytest.mark.parametrize("argv, code", [
    (["analyze", "1/(p+"], cli.EXIT_PARSE),
    (["analyze", "p^1.5"], cli.EXIT_PARSE),
    (["analyze", "1/(p+k)"], cli.EXIT_EVAL),
    (["regularize", "1/(p-q)", "--q", "1"], cli.EXIT_EVAL),
    (["finite-part", "p/(p+q+m^2)", "--m", "1", "--order", "0"], cli.EXIT_PRECONDITION),
    (["regularize", "p/(p+q+m^2)", "--m", "1", "--scheme", "partner"], cli.EXIT_PRECONDITION),
    (["check", "1/(p+q+m^2)", "--m", "1", "--tol", "1e-20", "--q-grid", "10"], cli.EXIT_CONSISTENCY),
])
def test_exit_codes(capsys, argv, code):
    got, _, err = run(capsys, *argv)
    assert got == code
    assert err.startswith("divlim: ")


def test_insufficient_order_message_cites_omega(capsys):
    _, _, err = run(capsys, "finite-part", "p/(p+q+m^2)", "--m", "1", "--order", "0")
    assert "omega=1" in err


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["rg-flow", "--grid", "3:0:1"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["analyze", "p", "--tol", "-1"])
    assert info.value.code == 2


def test_finite_part_all_methods(capsys):
    code, out, _ = run(capsys, "finite-part", "1/(p+q+m^2)", "--m", "1", "--q", "1",
                       "--order", "0", "--point", "0", "--methods", "all", "--format", "json")
    rows = json.loads(out)["rows"]
    assert code == 0
    assert [r["method"] for r in rows] == ["DirectSubtracted", "CutoffLimit", "PartnerLimit"]
    for r in rows:
        assert abs(r["value"] + math.log(2.0)) < 1e-8
        assert r["max_discrepancy"] < 1e-8


def test_finite_part_at_subtraction_point(capsys):
    _, out, _ = run(capsys, "finite-part", "1/(p+q+m^2)", "--m", "1", "--q", "0", "--format", "json")
    assert json.loads(out)["rows"][0]["value"] == 0.0


def test_default_order_is_omega(capsys):
    _, out, _ = run(capsys, "finite-part", "p/(p+q+m^2)", "--m", "1", "--q", "1", "--format", "json")
    row = json.loads(out)["rows"][0]
    assert row["order"] == 1
    assert abs(row["value"] - (2 * math.log(2.0) - 1)) < 1e-8


def test_rg_flow_csv(capsys):
    code, out, _ = run(capsys, "rg-flow", "--mu", "5", "--g", "0.01", "--m", "1",
                       "--grid", "0:3:0.5", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert len(rows) == 7
    assert [float(r["q_s"]) for r in rows] == [0, 0.5, 1, 1.5, 2, 2.5, 3]
    assert abs(float(rows[2]["delta"]) - math.log(2.0)) < 1e-9


def test_renorm_additive(capsys):
    code, out, _ = run(capsys, "renorm", "--mode", "additive", "--mu", "5", "--q", "1", "--m", "1",
                       "--format", "json")
    assert code == 0
    assert abs(json.loads(out)["rows"][0]["E"] - 4.306853) < 1e-6


def test_renorm_multiplicative_with_bare(capsys):
    code, out, _ = run(capsys, "renorm", "--mode", "multiplicative", "--g", "0.01", "--m", "1",
                       "--cutoff", "1e6", "--format", "json")
    row = json.loads(out)["rows"][0]
    assert code == 0
    assert row["E"] == pytest.approx(0.01 * (1 - 0.01 * math.log(2.0)))
    assert row["bare"] < row["g_R"]


def test_check_passes(capsys):
    code, out, _ = run(capsys, "check", "1/(p+q+m^2)", "--m", "1", "--format", "json")
    rows = json.loads(out)["rows"]
    assert code == 0
    assert all(r["passed"] for r in rows)
    assert {r["check"] for r in rows} >= {"cross_regulator", "symmetry_HardCutoff",
                                          "symmetry_Partner", "rg_additive"}


def test_regularize_grid(capsys):
    code, out, _ = run(capsys, "regularize", "1/(p+q+m^2)", "--m", "1", "--q-grid", "0.5,2",
                       "--cutoff", "100", "--M", "50", "--format", "json")
    rows = json.loads(out)["rows"]
    assert code == 0 and len(rows) == 4
    for r in rows:
        if r["scheme"] == "HardCutoff":
            expected = math.log((100 + r["q"] + 1) / (r["q"] + 1))
        else:
            expected = math.log((r["q"] + 50) / (r["q"] + 1))
        assert abs(r["value"] - expected) < 1e-9


def test_output_is_deterministic(capsys, tmp_path):
    argv = ["finite-part", "1/(p+q+m^2)", "--m", "0.7", "--q-grid", "0.1,3", "--methods", "all"]
    outputs = []
    for fmt in ("table", "json", "csv"):
        for _ in range(2):
            path = tmp_path / f"out.{fmt}"
            assert cli.main([*argv, "--format", fmt, "--out", str(path)]) == 0
            outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1] and outputs[2] == outputs[3] and outputs[4] == outputs[5]


def test_json_round_trip_is_bit_exact(capsys):
    from divlim.expr import parse
    from divlim.regfin import SubtractionSpec, finite_part_direct

    _, out, _ = run(capsys, "finite-part", "1/(p+q+m^2)", "--m", "0.7", "--q-grid", "0.1,0.3,3",
                    "--format", "json")
    rows = json.loads(out)["rows"]
    for r in rows:
        direct = finite_part_direct(parse("1/(p+q+m^2)"), SubtractionSpec(0), r["q"], {"m": 0.7})
        assert r["value"] == direct.value
        assert r["abs_error_estimate"] == direct.abs_error_estimate


@settings(max_examples=200)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_json_float_serialization_round_trips(x):
    text = cli.render({"rows": [{"x": x}]}, "json")
    assert json.loads(text)["rows"][0]["x"] == x


@settings(max_examples=200)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_csv_uses_17_significant_digits(x):
    text = cli.render({"rows": [{"x": x}]}, "csv")
    assert float(text.splitlines()[1]) == x


def test_tolerance_from_environment(monkeypatch):
    monkeypatch.setenv(cli.TOL_ENV, "1e-6")
    args = cli.build_parser().parse_args(["analyze", "p"])
    assert args.tol == 1e-6
    monkeypatch.delenv(cli.TOL_ENV)
    assert cli.build_parser().parse_args(["analyze", "p"]).tol == 1e-10


@pytest.mark.parametrize("text, expected", [
    ("0:3:0.5", [0, 0.5, 1, 1.5, 2, 2.5, 3]),
    ("0:1:0.3", [0, 0.3, 0.6, 0.9]),
    ("0:1:0.26", [0, 0.26, 0.52, 0.78, 1.04]),
    ("1,2,5", [1, 2, 5]),
])
def test_grid_parsing(text, expected):
    assert cli.grid(text) == pytest.approx(expected)


def test_help_documents_defaults(capsys):
    with pytest.raises(SystemExit):
        cli.main(["finite-part", "--help"])
    out = capsys.readouterr().out
    assert "1e-10" in out and "max(omega, 0)" in out and "default 0" in out


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "divlim", "analyze", "1/(p+"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert "offset 5" in proc.stderr
