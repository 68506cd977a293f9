import csv
import io
import json
import math

import numpy as np
import pytest

from lapext import cli
from lapext.boundary_unitary import matrix_to_json
from lapext.isotropy import BoundaryPair, pairs_to_json


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.mark.parametrize("text, value", [("pi", math.pi), ("2pi", 2 * math.pi), ("pi/2", math.pi / 2), ("-1.5e-3", -1.5e-3), ("2*pi+1", 2 * math.pi + 1)])
def test_parse_real(text, value):
    assert cli.parse_real(text) == pytest.approx(value)


def test_parse_real_rejects_code():
    with pytest.raises(cli.ConfigError):
        cli.parse_real("__import__('os')")


def test_spectrum_dirichlet(capsys):
    code, out, _ = run(capsys, "spectrum", "--preset", "dirichlet", "--domain", "interval:pi", "--n", "800", "--k", "3")
    assert code == 0
    vals = [float(r["eigenvalue"]) for r in rows(out)]
    np.testing.assert_allclose(vals, [1, 4, 9], rtol=1e-4)


def test_spectrum_robin_matches_robin1d(capsys):
    _, out, _ = run(capsys, "spectrum", "--preset", "robin:c=1", "--domain", "interval:2pi", "--n", "1600", "--k", "5")
    fd = [float(r["eigenvalue"]) for r in rows(out)]
    _, out, _ = run(capsys, "robin1d", "--c", "1", "--length", "2pi", "--count", "5")
    exact = [float(r["Lambda"]) for r in rows(out)]
    assert fd[0] < 0
    np.testing.assert_allclose(fd, exact, rtol=1e-3)


def test_spectrum_quasiperiodic_bloch(capsys):
    _, out, _ = run(capsys, "spectrum", "--preset", "quasiperiodic:alpha=1.0", "--domain", "interval:2pi", "--n", "1600")
    vals = [float(r["eigenvalue"]) for r in rows(out)]
    k = np.arange(-3, 4)
    exact = np.sort(((2 * math.pi * k + 1.0) / (2 * math.pi)) ** 2)[:5]
    np.testing.assert_allclose(vals, exact, rtol=1e-3)


def test_spectrum_files_and_metadata(tmp_path, capsys):
    out = tmp_path / "spec.csv"
    code, _, _ = run(capsys, "spectrum", "--preset", "neumann", "--domain", "rectangle:2pi,pi", "--n", "16", "--k", "3", "--compare", "-o", str(out))
    assert code == 0
    meta = json.loads(out.with_suffix(".json").read_text())
    assert len(meta["unitary_fingerprint"]) == 64
    assert meta["h"] == pytest.approx([2 * math.pi / 16, math.pi / 16])
    assert meta["analytic"] == pytest.approx([0, 0.25, 1])
    header = out.read_text().splitlines()[0]
    assert header == "index,eigenvalue,residual"


def test_csv_is_deterministic_17_digits(capsys):
    argv = ("spectrum", "--preset", "robin:c=2", "--domain", "rectangle:1,1", "--n", "10", "--k", "4")
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b
    v = rows(a)[1]["eigenvalue"]
    assert float(v) == float(format(float(v), ".17g"))


def test_verify_robin_sweep(capsys):
    code, out, _ = run(capsys, "verify", "--preset", "robin", "--sweep", "c=-2,-1,0,1,2", "--domain", "interval:2pi", "--n", "400")
    assert code == 0
    r = rows(out)
    assert [int(x["negative_count"]) for x in r] == [0, 0, 0, 1, 1]
    assert all(x["bound_pass"] == "1" for x in r)


def test_verify_zaremba_rectangle(capsys):
    code, _, _ = run(capsys, "verify", "--preset", "zaremba:dirichlet=left", "--domain", "rectangle:2pi,pi", "--n", "24")
    assert code == 0


def test_verify_random_threads(monkeypatch, capsys):
    argv = ("verify", "--random", "4", "--seed", "3", "--domain", "rectangle:1,1", "--n", "8")
    monkeypatch.setenv("LAPEXT_THREADS", "1")
    code1, serial, _ = run(capsys, *argv)
    monkeypatch.setenv("LAPEXT_THREADS", "4")
    code2, threaded, _ = run(capsys, *argv)
    assert code1 == code2 == 0
    assert serial == threaded


def test_gapless_unitary_exit_2(tmp_path, capsys):
    path = tmp_path / "u.json"
    path.write_text(json.dumps(matrix_to_json(np.diag([1.0, np.exp(1j * (math.pi - 1e-9))]))))
    code, _, err = run(capsys, "verify", "--unitary", str(path), "--domain", "interval:pi", "--n", "20")
    assert code == 2
    assert "gap" in err
    code, out, _ = run(capsys, "gap", "--unitary", str(path))
    assert code == 2 and json.loads(out)["passes"] is False


def test_solver_failure_exit_3(capsys):
    code, _, err = run(capsys, "spectrum", "--preset", "dirichlet", "--domain", "interval:pi", "--n", "50", "--solver-tol", "1e-30")
    assert code == 3
    assert "residual" in err


@pytest.mark.parametrize(
    "preset, domain, levels",
    [
        ("dirichlet", "interval:pi", "200,400,800"),
        ("neumann", "interval:2pi", "200,400,800"),
        ("periodic:axes=xy", "rectangle:2pi,pi", "16,32,64"),
    ],
)
def test_convergence_orders(capsys, preset, domain, levels):
    code, out, _ = run(capsys, "convergence", "--preset", preset, "--domain", domain, "--levels", levels, "--k", "6")
    assert code == 0
    orders = [float(r["order"]) for r in rows(out)]
    resolved = [p for p in orders if not math.isnan(p)]
    assert len(resolved) >= 4
    assert all(1.8 <= p <= 2.2 for p in resolved)


def test_convergence_needs_three_levels(capsys):
    code, _, err = run(capsys, "convergence", "--preset", "dirichlet", "--levels", "10,20")
    assert code == 1 and "levels" in err


def test_robin1d_rows(capsys):
    _, out, _ = run(capsys, "robin1d", "--c", "0.5", "--count", "3")
    r = rows(out)
    assert list(r[0]) == ["index", "lambda_or_mu", "Lambda", "residual"]
    assert float(r[0]["Lambda"]) < 0 < float(r[1]["Lambda"])
    assert len(r) == 3


def test_cayley_report(capsys):
    code, out, _ = run(capsys, "cayley", "--preset", "robin:c=2,on=all", "--domain", "rectangle:1,1", "--n", "8")
    doc = json.loads(out)
    assert code == 0
    assert doc["norm"] == pytest.approx(2.0)
    assert doc["admissibility_norm_global"] >= doc["norm"] - 1e-12


def test_unitary_roundtrip_through_json(tmp_path, capsys):
    path = tmp_path / "per.json"
    run(capsys, "unitary", "--preset", "periodic", "--domain", "interval:2pi", "-o", str(path))
    _, a, _ = run(capsys, "spectrum", "--unitary", str(path), "--domain", "interval:2pi", "--n", "100", "--k", "3")
    _, b, _ = run(capsys, "spectrum", "--preset", "periodic", "--domain", "interval:2pi", "--n", "100", "--k", "3")
    assert a == b


def test_isotropy_check(tmp_path, capsys):
    path = tmp_path / "w.json"
    path.write_text(json.dumps(pairs_to_json([BoundaryPair([1, 0], [0, 0]), BoundaryPair([0, 0], [0, 1])])))
    code, out, _ = run(capsys, "isotropy", "check", str(path))
    rep = json.loads(out)
    assert code == 0
    assert rep["isotropic"] and rep["maximal"]
    assert rep["roundtrip_distance"] <= 1e-10


def test_toml_config(tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text(
        '[domain]\nkind = "interval"\nlengths = ["2pi"]\nn_per_axis = 400\n'
        '[boundary]\npreset = "zaremba(dirichlet=[left])"\n[solver]\nk = 3\n'
    )
    code, out, _ = run(capsys, "spectrum", "--config", str(cfg))
    assert code == 0
    vals = [float(r["eigenvalue"]) for r in rows(out)]
    np.testing.assert_allclose(vals, [(k + 0.5) ** 2 / 4 for k in range(3)], rtol=1e-4)


def test_json_config_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"domain": {"kind": "interval", "lengths": ["pi"], "n_per_axis": 100}, "boundary": {"preset": "neumann"}}))
    _, out, _ = run(capsys, "spectrum", "--config", str(cfg), "--preset", "dirichlet", "--k", "1")
    assert float(rows(out)[0]["eigenvalue"]) == pytest.approx(1.0, rel=1e-3)


@pytest.mark.parametrize(
    "body, needle",
    [
        ("[domain]\nkind = 'triangle'\n", "domain.kind"),
        ("[domain]\nn_per_axis = 2\n", "n_per_axis"),
        ("[solver]\nk = 0\n", "solver.k"),
        ("[domian]\n", "domian"),
        ("[domain]\nsize = 3\n", "domain.size"),
        ("[boundary]\nunitary = 'missing.json'\n", "does not exist"),
        ("[domain\n", "line"),
    ],
)
def test_config_errors_exit_1(tmp_path, capsys, body, needle):
    cfg = tmp_path / "bad.toml"
    cfg.write_text(body)
    code, _, err = run(capsys, "spectrum", "--config", str(cfg))
    assert code == 1
    assert needle in err


def test_json_config_error_reports_line(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{\n "domain": {\n  "kind": "interval",\n }\n}')
    code, _, err = run(capsys, "spectrum", "--config", str(cfg))
    assert code == 1 and "line 4" in err
