import csv
import io
import json
import subprocess
import sys

import pytest

from iteravg.cli import main


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def split_csv_json(text):
    table, _, tail = text.partition("\n\n")
    return list(csv.DictReader(table.splitlines())), json.loads(tail)


def test_simulate_naive_exact():
    code, out, _ = run("simulate", "--strategy", "naive", "--n", "2", "--exact")
    assert code == 0
    rows, summary = split_csv_json(out)
    assert [r["level"] for r in rows] == ["3/8", "3/8", "5/8", "5/8"]
    assert [r["color"] for r in rows] == ["red", "red", "blue", "blue"]
    assert summary["residual_per_red"] == "3/8" and summary["total_transferred"] == "5/4"


def test_simulate_window_default_width():
    code, out, _ = run("simulate", "--strategy", "window", "--n", "100")
    assert code == 0
    _, summary = split_csv_json(out)
    assert summary["k"] == 10
    assert summary["max_red"] < 0.2


def test_simulate_empty():
    code, out, err = run("simulate", "--strategy", "naive", "--n", "0")
    assert code == 0 and err == ""
    rows, summary = split_csv_json(out)
    assert rows == [] and summary["n_tanks"] == 0


def test_simulate_float_format():
    _, out, _ = run("simulate", "--strategy", "naive", "--n", "3")
    rows, _ = split_csv_json(out)
    assert rows[0]["level"] == "0.3125"


def test_simulate_greedy_and_heat():
    _, out, _ = run("simulate", "--strategy", "greedy", "--n", "3", "--exact")
    assert split_csv_json(out)[1]["total_transferred"] == "33/16"
    _, out, _ = run("simulate", "--strategy", "heat", "--n", "3", "--exact")
    assert split_csv_json(out)[1]["total_transferred"] == "33/16"
    _, out, _ = run("simulate", "--strategy", "heat", "--n", "8", "--k", "3", "--exact")
    assert split_csv_json(out)[1]["total_transferred"] == "2817/512"


def test_simulate_trace():
    _, out, _ = run("simulate", "--strategy", "naive", "--n", "2", "--exact", "--trace")
    trace = split_csv_json(out)[1]["trace"]
    assert len(trace) == 6 and trace[0] == ["1/2", "1", "1/2", "0"]


def test_simulate_files_roundtrip(tmp_path):
    start = tmp_path / "start.csv"
    start.write_text("tank,color,level\n0,red,1\n1,red,1/2\n2,blue,0\n")
    target = tmp_path / "final.csv"
    code, out, _ = run("simulate", "--strategy", "greedy", "--initial", str(start), "--exact", "--out", str(target))
    assert code == 0
    summary = json.loads(out)
    assert json.loads((tmp_path / "final.json").read_text()) == summary
    levels = [r["level"] for r in csv.DictReader(target.read_text().splitlines())]
    assert len(levels) == 3
    assert summary["n_red"] == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--strategy", "bogus", "--n", "2"],
        ["simulate", "--strategy", "naive"],
        ["simulate", "--strategy", "window", "--n", "4", "--k", "9"],
        ["simulate", "--strategy", "heat", "--initial", "x.csv"],
        ["simulate", "--strategy", "naive", "--n", "-1"],
        ["sweep", "--ns", ""],
        ["sweep", "--ns", "1,2", "--fit"],
        ["verify", "--suite", "nonsense"],
        ["reach", "--x", "1,0", "--hull"],
        ["reach", "--x", "1,0,0,0,0", "--hull"],
        ["dynamics", "--cells", "4", "--eps", "0"],
        ["dynamics", "--f", "1,0", "--perm", "0,0", "--eps", "0.1"],
        [],
    ],
)
def test_usage_errors_exit_two(argv):
    code, out, err = run(*argv)
    assert code == 2
    assert json.loads(err)["error"] == "usage"


def test_sweep_small():
    code, out, _ = run("sweep", "--ns", "1,2", "--strategy", "naive")
    assert code == 0
    rows = list(csv.DictReader(out.splitlines()))
    assert [(r["n"], r["residual_per_red"]) for r in rows] == [("1", "0.5"), ("2", "0.375")]


def test_sweep_fit():
    code, out, _ = run("sweep", "--ns", "100,300,1000", "--fit")
    fit = json.loads(out.strip().splitlines()[-1])
    assert code == 0 and 0.54 <= fit["a"] <= 0.59


def test_verify_suites():
    code, out, _ = run("verify", "--suite", "bounds")
    assert code == 0 and json.loads(out)["passed"]
    code, out, _ = run("verify", "--suite", "optimality", "--seed", "7")
    report = json.loads(out)
    assert code == 0 and report["seed"] == 7 and report["passed"]


def test_verify_all_aggregates():
    code, out, _ = run("verify", "--suite", "all")
    report = json.loads(out)
    assert code == 0
    assert [s["suite"] for s in report["suites"]] == ["bounds", "optimality", "matrix", "majorization", "dynamics"]


def test_reach_interval():
    code, out, _ = run("reach", "--x", "1,0", "--depth", "5", "--samples", "100", "--seed", "1")
    rows = list(csv.reader(out.splitlines()))
    assert code == 0 and rows[0] == ["x1", "x2"]
    for a, b in rows[1:]:
        assert 0.5 <= max(float(a), float(b)) <= 1.0


def test_reach_depth_zero():
    _, out, _ = run("reach", "--x", "1,0,0", "--depth", "0", "--seed", "1")
    assert out.splitlines() == ["x1,x2,x3", "1,0,0"]


def test_reach_hull(tmp_path):
    cloud, hull_json = tmp_path / "cloud.csv", tmp_path / "hull.json"
    code, out, _ = run(
        "reach", "--x", "1,0,0", "--depth", "12", "--samples", "20000", "--seed", "1",
        "--hull", "--lam-mode", "mixed", "--out", str(cloud), "--hull-out", str(hull_json),
    )
    assert code == 0 and out == ""
    report = json.loads(hull_json.read_text())
    assert report["hull"]["dim"] == 2
    assert report["closure"]["vertices_majorized"]
    assert "not a proof" in report["hull"]["label"] and "not a proof" in report["closure"]["label"]
    assert cloud.read_text().startswith("x1,x2,x3\n")


def test_dynamics_examples():
    code, out, _ = run("dynamics", "--cells", "2", "--f", "1,0", "--perm", "1,0", "--eps", "0.1")
    report = json.loads(out)
    assert code == 0 and report["sup_error"] < 0.1 and report["passed"]
    code, out, _ = run("dynamics", "--f", "0.2,0.7,0.1", "--eps", "0.1")
    report = json.loads(out)
    assert report["sup_error"] == 0 and report["plan_length"] == 0
    code, out, _ = run("dynamics", "--cells", "8", "--seed", "3", "--eps", "0.1")
    assert code == 0 and json.loads(out)["sup_error"] < 0.1


def test_dynamics_plan_export(tmp_path):
    path = tmp_path / "plan.json"
    run("dynamics", "--f", "1,0", "--perm", "1,0", "--eps", "0.5", "--plan-out", str(path))
    plan = json.loads(path.read_text())
    assert plan["n_cells"] == 2 and plan["partitions"]


@pytest.mark.parametrize(
    "argv",
    [
        ["reach", "--x", "1,0,0", "--depth", "6", "--samples", "500", "--seed", "4", "--hull"],
        ["dynamics", "--cells", "4", "--seed", "9", "--eps", "0.2"],
        ["verify", "--suite", "majorization", "--seed", "3"],
        ["simulate", "--strategy", "window", "--n", "50"],
    ],
)
def test_deterministic_output(argv):
    assert run(*argv)[1] == run(*argv)[1]


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "iteravg", "simulate", "--strategy", "naive", "--n", "1", "--exact"],
        capture_output=True, text=True, check=True,
    )
    assert proc.stdout.startswith("tank,color,level\n0,red,1/2\n1,blue,1/2\n")
