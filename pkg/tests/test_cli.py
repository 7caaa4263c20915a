"""Command-line surface: parsing, outputs, exit codes."""

import os

import pytest

from qmf.cli import FormSpecError, eval_form, main
from qmf.newforms import reset_caches
from qmf.qseries import load_qseries


def run(capsys, *argv):
    rc = main(list(argv))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


# ----------------------------------------------------------------- listing


def test_basis_listing(capsys):
    rc, out, _ = run(capsys, "basis", "--level", "6", "--maxweight", "2",
                     "--part", "eis")
    assert rc == 0
    assert out.splitlines() == ["1", "E2twist[2]", "E2twist[3]",
                                "E2twist[6]", "E2"]


def test_basis_new_part(capsys):
    rc, out, _ = run(capsys, "basis", "--level", "1", "--maxweight", "12",
                     "--part", "new")
    assert rc == 0
    assert out.splitlines() == ["D^0(newform[1,12,delta])"]


def test_basis_old_part_empty(capsys):
    rc, out, _ = run(capsys, "basis", "--level", "1", "--maxweight", "2",
                     "--part", "old")
    assert rc == 0
    assert out == ""


def test_basis_with_expansions(capsys):
    rc, out, _ = run(capsys, "basis", "--level", "1", "--maxweight", "2",
                     "--prec", "8")
    assert rc == 0
    blocks = ["# qseries v1" + chunk
              for chunk in out.split("# qseries v1")[1:]]
    assert len(blocks) == 2
    one, headers = load_qseries(blocks[0])
    assert headers["label"] == "1"
    assert one.coefficient(0).as_rational() == 1
    e2, headers = load_qseries(blocks[1])
    assert headers["label"] == "E2"
    assert headers["weight"] == 2
    assert e2.coefficient(3).as_rational() == -96


# ------------------------------------------------------------------ expand


def test_expand_macmahon_table(capsys):
    rc, out, _ = run(capsys, "expand", "--form", "U[2]", "--prec", "6")
    assert rc == 0
    assert out == (
        "# qseries v1\nconductor: 1\nprecision: 6\n3: 1\n4: 3\n5: 9\n"
    )


def test_expand_delta(capsys):
    rc, out, _ = run(capsys, "expand", "--form", "Delta", "--prec", "3")
    assert rc == 0
    assert out == (
        "# qseries v1\nconductor: 1\nprecision: 3\nmaxweight: 12\n"
        "1: 1\n2: -24\n"
    )


def test_expand_writes_file(tmp_path, capsys):
    target = tmp_path / "e2.qs"
    rc, out, _ = run(capsys, "expand", "--form", "E2", "--prec", "4",
                     "--out", str(target))
    assert rc == 0
    assert out == ""
    series, headers = load_qseries(target.read_text())
    assert headers["maxweight"] == 2
    assert series.coefficient(2).as_rational() == -72


def test_expand_equivalent_spellings(capsys):
    rc1, out1, _ = run(capsys, "expand", "--form", "D^2(U[1])",
                       "--prec", "9")
    rc2, out2, _ = run(capsys, "expand", "--form", "(D^2)(U[1])",
                       "--prec", "9")
    assert rc1 == rc2 == 0
    assert out1 == out2


def test_expand_fractions_cancel(capsys):
    rc, out, _ = run(capsys, "expand", "--form", "1/2*E2 - 1/2*E2",
                     "--prec", "5")
    assert rc == 0
    # all-zero body: headers only
    assert out == "# qseries v1\nconductor: 1\nprecision: 5\nmaxweight: 2\n"


def test_eval_form_weights():
    _, w = eval_form("(D^3+1)G[2,1] - (D^1+1)G[4,1]", 10)
    assert w == 8
    _, w = eval_form("U[2]", 10)
    assert w is None
    series, w = eval_form("dilate[2](Delta)", 30)
    assert w == 12
    assert series.coefficient(2).as_rational() == 1
    series, w = eval_form("eta[1^8,2^8]", 10)
    assert w == 8
    assert series.coefficient(1).as_rational() == 1
    series, w = eval_form("E[4,5.2,1]", 10)
    assert w == 4


# --------------------------------------------------------------- decompose


def test_decompose_scaled_e2(tmp_path, capsys):
    path = tmp_path / "f.qs"
    run(capsys, "expand", "--form", "5*E2", "--prec", "10",
        "--out", str(path))
    rc, out, _ = run(capsys, "decompose", "--series", str(path),
                     "--level", "1")
    assert rc == 0
    assert out == "eis E2 : 5\nresidual: none\n"


def test_decompose_eisenstein_family(tmp_path, capsys):
    path = tmp_path / "f13.qs"
    run(capsys, "expand", "--form", "(D^3+1)G[2,1] - (D^1+1)G[4,1]",
        "--prec", "40", "--out", str(path))
    rc, out, _ = run(capsys, "decompose", "--series", str(path),
                     "--level", "1")
    assert rc == 0
    lines = out.splitlines()
    assert lines[-1] == "residual: none"
    # a pure Eisenstein decomposition: no new or old lines
    assert all(line.startswith("eis ") for line in lines[:-1])
    assert "eis D^3(E2) : -1/24" in lines


def test_decompose_residual_exit_code(tmp_path, capsys):
    path = tmp_path / "delta.qs"
    run(capsys, "expand", "--form", "Delta", "--prec", "40",
        "--out", str(path))
    rc, out, _ = run(capsys, "decompose", "--series", str(path),
                     "--level", "1", "--maxweight", "10")
    assert rc == 2
    assert out == "residual: present\n"


def test_decompose_needs_maxweight(tmp_path, capsys):
    path = tmp_path / "u.qs"
    run(capsys, "expand", "--form", "U[2]", "--prec", "30",
        "--out", str(path))
    rc, _, err = run(capsys, "decompose", "--series", str(path),
                     "--level", "1")
    assert rc == 1
    assert "maxweight" in err


def test_decompose_insufficient_precision(tmp_path, capsys):
    path = tmp_path / "short.qs"
    run(capsys, "expand", "--form", "Delta", "--prec", "10",
        "--out", str(path))
    rc, _, err = run(capsys, "decompose", "--series", str(path),
                     "--level", "1", "--maxweight", "12")
    assert rc == 1
    assert err.startswith("insufficient precision: need ")


# ----------------------------------------------------------------- verdicts


def test_detect_macmahon_combination(capsys):
    rc, out, _ = run(capsys, "detect", "--form",
                     "(D^2)(U[1]) - 3*(D^1)(U[1]) + 2*U[1] - 8*U[2]",
                     "--level", "1", "--xmax", "300")
    assert rc == 0
    assert out == "prime-detecting (n <= 300, level 1)\n"


def test_detect_failure_exit_code(capsys):
    rc, out, _ = run(capsys, "detect", "--form", "Delta", "--level", "1",
                     "--xmax", "100")
    assert rc == 2
    assert out.startswith("not prime-detecting")


def test_census_report(capsys):
    rc, out, _ = run(capsys, "census", "--form", "dilate[2](Delta)",
                     "--level", "2", "--xmax", "150", "--delta", "0.05")
    assert rc == 0
    lines = out.splitlines()
    assert lines[0] == "X=150 N=2 delta=0.05"
    assert lines[1] == "zeros: 34"
    assert lines[2].startswith("zero_list: 3 5 7 11")
    assert lines[3] == "nonzero_density: 0"
    assert lines[5].startswith("note: nonvanishing hypothesis unmet")


def test_macmahon_row(capsys):
    rc, out, _ = run(capsys, "macmahon", "--a", "2", "--nmax", "6")
    assert rc == 0
    assert out == "3:1 4:3 5:9\n"


# ----------------------------------------------------------------- newforms


def test_newforms_listing(capsys):
    rc, out, _ = run(capsys, "newforms", "--level", "1", "--weight", "12")
    assert rc == 0
    assert out == "1.12.delta eta[1^24]\n"


def test_newforms_expansion(capsys):
    rc, out, _ = run(capsys, "newforms", "--level", "2", "--weight", "8",
                     "--prec", "5")
    assert rc == 0
    series, headers = load_qseries(out)
    assert headers["label"] == "a"
    assert headers["level"] == 2
    assert series.coefficient(2).as_rational() == -8


def test_newforms_catalog_incomplete(capsys):
    rc, _, err = run(capsys, "newforms", "--level", "26", "--weight", "2")
    assert rc == 1
    assert "level 26" in err and "weight 2" in err


def test_newforms_ingest(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("QMF_CACHE_DIR", str(tmp_path / "cache"))
    reset_caches()
    try:
        path = tmp_path / "form.qs"
        rc, out, _ = run(capsys, "newforms", "--level", "11", "--weight", "2",
                         "--prec", "40")
        assert rc == 0
        path.write_text(out)
        rc, out, _ = run(capsys, "newforms", "--ingest", str(path))
        assert rc == 0
        assert out == "ingested 11.2.a\n"
    finally:
        monkeypatch.delenv("QMF_CACHE_DIR")
        reset_caches()


# ------------------------------------------------------------------- errors


def test_parse_error_positions(capsys):
    rc, _, err = run(capsys, "expand", "--form", "E2 + @", "--prec", "5")
    assert rc == 1
    assert err == "parse error at position 5: stray character '@'\n"
    rc, _, err = run(capsys, "expand", "--form", "nosuch[3]", "--prec", "5")
    assert rc == 1
    assert "unknown atom 'nosuch'" in err


def test_parse_misuse_errors(capsys):
    for form in (
        "E2 E2",            # series product
        "D^2",              # bare operator
        "E2 + D^1",         # operator added to series
        "1/0",              # zero denominator
        "newform[1,12,tau]",  # unknown label
        "E[4,5.9,1]",       # character index out of range
        "E[2,1.1,1]",       # excluded weight-2 pair
        "eta[1^-24]",       # negative leading exponent
        "E2 )",             # trailing input
    ):
        rc, _, err = run(capsys, "expand", "--form", form, "--prec", "8")
        assert rc == 1, form
        assert err.startswith(("parse error", "error:")), form


def test_usage_errors(capsys):
    rc, _, err = run(capsys)
    assert rc == 1
    rc, _, err = run(capsys, "basis", "--level", "6")
    assert rc == 1
    rc, _, err = run(capsys, "basis", "--level", "x", "--maxweight", "2")
    assert rc == 1


def test_missing_series_file(capsys):
    rc, _, err = run(capsys, "decompose", "--series", "/nonexistent/f.qs",
                     "--level", "1", "--maxweight", "2")
    assert rc == 1
    assert "error:" in err
