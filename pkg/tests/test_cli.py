import csv
import io
import json
import math

import pytest

from wom_search import cli
from wom_search import equilibrium as eq


def run(*argv, environ=None):
    out, err = io.StringIO(), io.StringIO()
    code = cli.main(list(argv), stdout=out, stderr=err, environ=environ or {})
    return code, out.getvalue(), err.getvalue()


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


# -- solve --------------------------------------------------------------------


def test_solve_two_roots():
    code, out, _ = run("solve", "--v", "1", "--k", "1", "--c", "0.075")
    assert code == 0
    rows = rows_of(out)
    assert [r["stability"] for r in rows] == ["Unstable", "Stable"]
    assert float(rows[1]["q"]) > float(rows[0]["q"])


def test_solve_no_equilibrium_exit_3():
    code, out, err = run("solve", "--v", "1", "--k", "1", "--c", "0.9")
    assert code == 3
    assert out == ""
    assert "c_upper" in err


@pytest.mark.parametrize(
    "argv",
    [
        ("solve", "--v", "1", "--k", "0", "--c", "0.05"),
        ("solve", "--v", "-1", "--k", "1", "--c", "0.05"),
        ("solve", "--v", "1", "--k", "1", "--c", "1.5"),
        ("solve", "--v", "1", "--k", "1"),
        ("solve", "--v", "nan", "--k", "1", "--c", "0.05"),
        ("solve", "--v", "1", "--k", "x", "--c", "0.05"),
        ("bogus",),
    ],
)
def test_bad_input_exit_2(argv):
    code, _, _ = run(*argv)
    assert code == 2


def test_solve_scales_with_v():
    _, a, _ = run("solve", "--v", "1", "--k", "1", "--c", "0.075")
    _, b, _ = run("solve", "--v", "2", "--k", "1", "--c", "0.15")
    ra, rb = rows_of(a), rows_of(b)
    assert [r["q"] for r in ra] == [r["q"] for r in rb]
    for x, y in zip(ra, rb):
        for col in ("expected_price", "expected_min_price", "support_low", "firm_profit"):
            assert float(y[col]) == pytest.approx(2 * float(x[col]), rel=1e-14)


def test_solve_with_link_columns():
    _, out, _ = run("solve", "--v", "1", "--k", "1", "--c", "0.075", "--l", "0.005")
    rows = rows_of(out)
    assert all(r["searcher_forms"] == "true" and r["nonsearcher_forms"] == "true" for r in rows)
    assert all(float(r["l_bar"]) > 0.005 for r in rows)


def test_solve_json():
    code, out, _ = run("solve", "--v", "1", "--k", "1", "--c", "0.075", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["meta"]["status"] == "ok"
    assert [r["stability"] for r in doc["rows"]] == ["Unstable", "Stable"]


def test_csv_precision_and_line_endings():
    _, out, _ = run("solve", "--v", "1", "--k", "1", "--c", "0.075")
    assert "\r" not in out and out.endswith("\n")
    q = rows_of(out)[1]["q"]
    assert len(q.replace("0.", "", 1).lstrip("0")) >= 12


# -- benefit curve ------------------------------------------------------------


def test_benefit_curve_default():
    code, out, _ = run("figure1")
    assert code == 0
    rows = rows_of(out)
    assert len(rows) == 1001
    benefit = [float(r["benefit"]) for r in rows]
    assert max(benefit) > 0.075
    c_lower = float(rows[0]["c_lower"])
    assert c_lower == pytest.approx((math.log(3) - 1) / 2, rel=1e-15)
    assert round(c_lower, 7) == 0.0493061
    assert abs(benefit[-1] - c_lower) < 1e-7
    assert float(rows[0]["c1"]) == 0.075
    crossings = sum((a - 0.075) * (b - 0.075) < 0 for a, b in zip(benefit, benefit[1:]))
    assert crossings == 2


# -- scan, link, dynamics, bounds ---------------------------------------------


def test_scan_monotone():
    code, out, _ = run("scan", "--v", "1", "--c", "0.01", "--k-max-exp", "16")
    assert code == 0
    rows = [r for r in rows_of(out) if r["status"] == "ok"]
    qs = [float(r["q"]) for r in rows]
    assert all(b < a for a, b in zip(qs, qs[1:]))
    assert all(r["v"] == "1.0" and r["c"] == "0.01" for r in rows)


def test_dynamics_converges_to_stable():
    code, out, _ = run("dynamics", "--v", "1", "--k", "1", "--c", "0.075", "--q0", "0.9")
    assert code == 0
    rows = rows_of(out)
    stable = eq.solve_search_equilibrium(cli.MarketParams(1.0, 0.075, 1)).stable.q
    assert rows[-1]["status"] == "converged"
    assert float(rows[-1]["q"]) == pytest.approx(stable, abs=1e-6)


def test_link_at_stable_root():
    code, out, _ = run("link", "--v", "1", "--k", "1", "--c", "0.075", "--format", "json")
    assert code == 0
    (row,) = json.loads(out)["rows"]
    assert row["searcher_forms"] and row["nonsearcher_forms"]


def test_bounds():
    code, out, _ = run("bounds", "--k", "3")
    assert code == 0
    (row,) = rows_of(out)
    assert 0 < float(row["c_lower"]) < float(row["c_upper"])


# -- simulate -----------------------------------------------------------------


def test_simulate_json_and_csv():
    argv = ("simulate", "--q", "0.5", "--k", "1", "--n", "5000", "--seed", "42", "--reps", "8")
    code, out, _ = run(*argv)
    assert code == 0
    doc = json.loads(out)
    assert doc["config"]["master_seed"] == 42
    assert doc["analytic"]["share_none"] == 0.25
    code, out, _ = run(*argv, "--format", "csv")
    assert {r["statistic"] for r in rows_of(out)} >= {"share_none", "firm_profit_a", "firm_profit_b"}


# -- configuration ------------------------------------------------------------


def test_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# reference setup\nv = 1\nk = 1\nc = 0.075  # reference cost\n")
    code, out, _ = run("solve", "--config", str(path))
    assert code == 0 and len(rows_of(out)) == 2
    # flag beats file
    code, _, _ = run("solve", "--config", str(path), "--c", "0.9")
    assert code == 3


def test_config_file_unknown_key(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("v = 1\ncolour = blue\n")
    code, _, err = run("solve", "--config", str(path))
    assert code == 2 and "unknown key" in err


def test_config_file_missing():
    code, _, _ = run("solve", "--config", "/nonexistent/run.cfg")
    assert code == 2


def test_seed_precedence(tmp_path):
    path = tmp_path / "s.cfg"
    path.write_text("seed = 1\n")
    args = ["simulate", "--q", "0.5", "--n", "1000", "--reps", "2"]
    assert cli.resolve(args + ["--config", str(path)], {})["seed"] == 1
    assert cli.resolve(args + ["--config", str(path)], {"WOM_SEED": "7"})["seed"] == 7
    assert cli.resolve(args + ["--config", str(path), "--seed", "9"], {"WOM_SEED": "7"})["seed"] == 9
    assert cli.resolve(args, {})["seed"] == 0


def test_out_file_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    base = ["simulate", "--q", "0.5", "--k", "2", "--n", "4000", "--seed", "3", "--reps", "6"]
    assert run(*base, "--out", str(a))[0] == 0
    assert run(*base, "--out", str(b), "--workers", "3")[0] == 0
    assert a.read_bytes() == b.read_bytes()
