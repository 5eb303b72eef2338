import json

import numpy as np
import pytest

from hflow.errors import DomainError, InvalidInput, SolverFailure
from hflow.flows import Constant, Trajectory, ppa_run
from hflow.functionals import Distance
from hflow.geometry import SPD, Euclidean, MetricTree, Product
from hflow.harness import runner
from hflow.harness.cli import main
from hflow.harness.config import ConfigError, load_config, validate_summary
from hflow.harness.io import emit_trace, format_point, ingest_points, parse_row

PPA_ABS = {
    "operation": "ppa",
    "space": {"kind": "euclidean", "dim": 1},
    "functional": {"kind": "dist", "anchor": [0.0], "w": 1.0},
    "x0": [5.0],
    "params": {"schedule": {"kind": "constant", "lambda": 1.0}, "N": 10},
    "expect": {"final_point": [0.0], "atol": 1e-12},
}

TRIPOD_CHECK = {
    "operation": "space-check",
    "space": {"kind": "tree", "legs": 3},
    "params": {"samples": 2000},
    "seed": 7,
}


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


# ingestion


def test_ingest_euclidean_rows(tmp_path):
    path = tmp_path / "pts.csv"
    path.write_text("0,0\n3,4\n")
    pts = ingest_points(path, Euclidean(2))
    assert len(pts) == 2 and np.array_equal(pts[1], [3.0, 4.0])


def test_ingest_skips_comments_and_blanks(tmp_path):
    path = tmp_path / "pts.csv"
    path.write_text("# header\n\n1\n  \n2\n")
    assert [float(p[0]) for p in ingest_points(path, Euclidean(1))] == [1.0, 2.0]


def test_ingest_spd_row_major():
    assert np.array_equal(parse_row(SPD(2), ["4", "0", "0", "1"]), np.diag([4.0, 1.0]))


def test_ingest_spd_reports_eigenvalues(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("4,0,0,1\n1,2,2,1\n")
    with pytest.raises(DomainError) as info:
        ingest_points(path, SPD(2))
    msg = str(info.value)
    assert "bad.csv:2" in msg and "eigenvalues" in msg and "-1." in msg


def test_ingest_asymmetric_spd_row():
    with pytest.raises(DomainError):
        parse_row(SPD(2), ["1", "0.5", "0", "1"])


def test_ingest_tree_rows():
    tree = MetricTree.star(5)
    p = parse_row(tree, ["e3", "0.25"])
    assert tree.distance(p, tree.point(3, 0.25)) == 0.0
    assert tree.distance(parse_row(tree, ["l2"]), tree.node("l2")) == 0.0
    with pytest.raises(InvalidInput):
        parse_row(tree, ["e9", "0.1"])
    with pytest.raises(InvalidInput):
        parse_row(tree, ["e1", "2.0"])


def test_ingest_names_the_bad_line(tmp_path):
    path = tmp_path / "pts.csv"
    path.write_text("0,0\n1,x\n")
    with pytest.raises(InvalidInput, match="pts.csv:2"):
        ingest_points(path, Euclidean(2))
    path.write_text("0,0\n1,2,3\n")
    with pytest.raises(InvalidInput, match="expected 2 values"):
        ingest_points(path, Euclidean(2))


def test_ingest_product_rows():
    space = Product((Euclidean(1), SPD(2)))
    a, m = parse_row(space, ["2", "1", "0", "0", "3"])
    assert a[0] == 2.0 and np.array_equal(m, np.diag([1.0, 3.0]))


def test_ingest_missing_or_empty_file(tmp_path):
    with pytest.raises(InvalidInput):
        ingest_points(tmp_path / "none.csv", Euclidean(1))
    (tmp_path / "empty.csv").write_text("# nothing\n")
    with pytest.raises(InvalidInput):
        ingest_points(tmp_path / "empty.csv", Euclidean(1))


# traces


def test_empty_trace_is_header_only(tmp_path):
    path = tmp_path / "t.csv"
    emit_trace(Trajectory(Euclidean(1), np.zeros(1), []), path)
    assert path.read_text() == "n,lambda,point,f_value,step_move\n"


def test_three_step_trace(tmp_path):
    f = Distance(Euclidean(1), np.zeros(1), 1.0)
    traj = ppa_run(f, np.array([5.0]), Constant(1.0), N=3, stop_absorbing=False)
    path = tmp_path / "t.csv"
    emit_trace(traj, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 4
    assert lines[1] == "1,1.0,4.0,4.0,1.0"


def test_trace_formats_tree_points():
    tree = MetricTree.star(3)
    assert format_point(tree, tree.node("c")) == "c"
    assert format_point(tree, tree.point(1, 0.5)) == "e1:0.5"


def test_trace_write_failure_names_path(tmp_path):
    with pytest.raises(OSError, match="missing"):
        emit_trace(Trajectory(Euclidean(1), np.zeros(1), []), tmp_path / "missing" / "t.csv")


# runs


def test_ppa_soft_threshold_run(tmp_path):
    summary = runner.run_experiment(PPA_ABS, tmp_path)
    assert summary.status == "pass" and summary.exit_code == 0
    assert summary.metrics["point"] == "0.0"
    assert sorted(summary.artifacts) == ["summary.json", "timing.json", "trace.csv"]
    validate_summary(json.loads((tmp_path / "summary.json").read_text()))


def test_tripod_space_check(tmp_path):
    summary = runner.run_experiment(TRIPOD_CHECK, tmp_path)
    assert summary.status == "pass" and summary.metrics["min_slack"] >= -1e-9


def test_runs_are_byte_identical(tmp_path):
    for cfg in (PPA_ABS, TRIPOD_CHECK):
        runner.run_experiment(cfg, tmp_path / "a")
        runner.run_experiment(cfg, tmp_path / "b")
        for name in ("summary.json", "trace.csv"):
            if (tmp_path / "a" / name).exists():
                assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_thread_count_does_not_change_results(tmp_path, monkeypatch):
    monkeypatch.setenv("HFLOW_THREADS", "1")
    one = runner.run_experiment(TRIPOD_CHECK).to_json()
    monkeypatch.setenv("HFLOW_THREADS", "4")
    assert runner.threads() == 4
    assert runner.run_experiment(TRIPOD_CHECK).to_json() == one
    monkeypatch.setenv("HFLOW_THREADS", "lots")
    assert runner.threads() == 1


def test_seed_override_changes_samples():
    a = runner.run_experiment(TRIPOD_CHECK, seed=1)
    b = runner.run_experiment(TRIPOD_CHECK, seed=2)
    assert a.seed == 1 and b.seed == 2
    assert a.metrics["min_slack"] != b.metrics["min_slack"]


def test_mean_run_from_csv(tmp_path):
    csv = tmp_path / "m.csv"
    csv.write_text("4,0,0,1\n0.25,0,0,1\n")
    cfg = {"operation": "mean", "space": {"kind": "spd", "n": 2}, "points_csv": str(csv), "expect": {"final_point": [[1, 0], [0, 1]], "atol": 1e-6}}
    summary = runner.run_experiment(cfg, tmp_path / "out")
    assert summary.status == "pass"


def test_center_run_reports_weak_block():
    cfg = {
        "operation": "center",
        "space": {"kind": "tree", "legs": 30},
        "points": [f"l{k}" for k in range(5, 30)],
        "probes": [f"e{k}:0.5" for k in range(5)],
    }
    weak = runner.run_experiment(cfg).to_json()["metrics"]["weak"]
    assert weak["score"] <= 1e-9 and weak["omega"] == pytest.approx(1.0)


def test_family_runs(tmp_path):
    mos = {"operation": "mosco", "family": {"family": "translated_quadratic"}, "x": [2.0], "params": {"N": 50, "t": 1.0}}
    assert runner.run_experiment(mos, tmp_path / "m").status == "pass"
    wij = {"operation": "wijsman", "family": {"family": "nested_intervals"}, "x": [2.0], "params": {"N": 50}}
    assert runner.run_experiment(wij, tmp_path / "w").status == "pass"
    ar = {"operation": "ar", "ar": {"kind": "scaled_tripod"}, "x": "c", "params": {"N": 50, "n_steps": 20, "gap_tol": 0.1}}
    assert runner.run_experiment(ar, tmp_path / "a").status == "pass"


def test_summary_schema_rejects_extra_fields():
    with pytest.raises(ConfigError):
        validate_summary({"operation": "ppa", "status": "pass", "seed": 0, "config": PPA_ABS, "metrics": {}, "artifacts": [], "runtime": 1.0})


def test_config_errors_name_the_field():
    bad = dict(PPA_ABS, params={"lambda": -1.0})
    with pytest.raises(ConfigError) as info:
        load_config(bad)
    assert info.value.path == "$.params.lambda"
    with pytest.raises(ConfigError):
        load_config({"operation": "ppa", "space": {"kind": "euclidean", "dim": 1}})


# CLI exit codes


def test_cli_pass(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", PPA_ABS)
    assert main(["ppa", "--config", cfg, "--out", str(tmp_path / "out")]) == 0
    assert json.loads(capsys.readouterr().out)["status"] == "pass"


def test_cli_config_errors(tmp_path, capsys):
    bad = write(tmp_path, "bad.json", dict(PPA_ABS, params={"lambda": -1.0}))
    assert main(["ppa", "--config", bad]) == 1
    assert "$.params.lambda" in capsys.readouterr().err
    good = write(tmp_path, "c.json", PPA_ABS)
    assert main(["prox", "--config", good]) == 1
    assert main(["ppa", "--config", str(tmp_path / "nope.json")]) == 1
    assert main(["ppa", "--config", good, "--seed", "-3"]) == 1
    assert main(["teleport", "--config", good]) == 1
    (tmp_path / "broken.json").write_text("{")
    assert main(["ppa", "--config", str(tmp_path / "broken.json")]) == 1


def test_cli_assertion_failure(tmp_path):
    cfg = dict(PPA_ABS, expect={"final_point": [1.0], "atol": 1e-9})
    assert main(["ppa", "--config", write(tmp_path, "c.json", cfg), "--out", str(tmp_path / "out")]) == 2


def test_cli_solver_failure(tmp_path, monkeypatch):
    def stuck(run):
        raise SolverFailure("did not converge", best=None, gap=1.0)

    monkeypatch.setitem(runner.HANDLERS, "ppa", stuck)
    out = tmp_path / "out"
    assert main(["ppa", "--config", write(tmp_path, "c.json", PPA_ABS), "--out", str(out)]) == 3
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "solver-failure" and summary["metrics"]["gap"] == 1.0
