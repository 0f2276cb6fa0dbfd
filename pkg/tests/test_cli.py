from __future__ import annotations

import csv
import json

import pytest

from zlab.cli import main


def run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr()


def report(path):
    data = json.loads(path.read_text())
    data.pop("timestamp")
    return data


def test_free_dist_prints_distance(capsys):
    code, out = run(["free", "dist", "--model", "int-line", "--a", "word=1|side=X|local=0.5",
                     "--b", "word=g:1|side=Y|local=0.2"], capsys)
    assert code == 0
    # 1/4 from x0 to g.x0, plus 1/4 * 0.3 inside g.Y0
    assert float(out.out.split()[0]) == pytest.approx(0.325)


def test_free_dist_to_an_end_reports_tolerance(capsys):
    code, out = run(["free", "dist", "--a", "end=g:1,h:1,g:1|depth=3", "--b", "word=1|side=X|local=0.5"], capsys)
    assert code == 0 and "+/-" in out.out


def test_counterexample_report(tmp_path, capsys):
    out = tmp_path / "report.json"
    table = tmp_path / "rows.csv"
    code, _ = run(["product", "counterexample", "--range", "100", "--out", str(out), "--csv", str(table)], capsys)
    assert code == 0
    data = report(out)
    assert data["schema"] == 1 and data["seed"] == 42 and data["pass"]
    assert len(data["result"]["product_topology"]) == 201
    assert data["result"]["n0"] == 15
    rows = list(csv.DictReader(table.open()))
    assert len(rows) == 201 and rows[0]["n"] == "-100"


def test_reports_are_byte_identical_modulo_timestamp(tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p, jobs in zip(paths, ("1", "2")):
        assert main(["free", "net", "--eps", "0.25", "--samples", "6000", "--jobs", jobs, "--out", str(p)]) == 0
    a, b = (report(p) for p in paths)
    for data in (a, b):
        data["config"].pop("jobs")
        data["config"].pop("out")
    assert a == b
    c_copy = tmp_path / "a_again.json"
    main(["free", "net", "--eps", "0.25", "--samples", "6000", "--out", str(c_copy)])

    def strip(p):
        return [line for line in p.read_text().splitlines()
                if "started" not in line and "elapsed" not in line and '"out"' not in line]

    assert strip(paths[0]) == strip(c_copy)


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"samples": 500, "depth": 5, "seed": 7}))
    out = tmp_path / "r.json"
    assert main(["verify", "metric", "--config", str(cfg), "--depth", "4", "--out", str(out)]) == 0
    data = report(out)
    assert data["seed"] == 7
    assert data["config"]["samples"] == 500 and data["config"]["depth"] == 4


def test_seed_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("ZLAB_SEED", "123")
    out = tmp_path / "r.json"
    assert main(["verify", "metric", "--samples", "200", "--out", str(out)]) == 0
    assert report(out)["seed"] == 123
    monkeypatch.setenv("ZLAB_SEED", "abc")
    assert main(["verify", "metric", "--samples", "200"]) == 2


@pytest.mark.parametrize("argv", [
    ["free", "bogus"],
    ["free", "dist", "--a", "word=1|side=X|local=0.5"],
    ["free", "dist", "--a", "word=1|side=Q|local=0.5", "--b", "word=1|side=X|local=0.5"],
    ["verify", "metric", "--depth", "33"],
    ["verify", "metric", "--samples", "0"],
    ["verify", "metric", "--model", "torus"],
    ["product", "slope", "--x", "0.0", "--y", "0.5"],
    ["verify", "metric", "--unknown-flag"],
])
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2


def test_bad_config_exits_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"nonsense": 1}))
    assert main(["verify", "metric", "--config", str(cfg)]) == 2


def test_product_slope_and_nbhd(capsys):
    code, out = run(["product", "slope", "--x", "0.8", "--y", "0.9"], capsys)
    assert code == 0 and float(out.out) > 1
    code, out = run(["product", "nbhd", "--center", "xbar=0|ybar=1|mu=1", "--eps", "0.3",
                     "--z", "xbar=0|ybar=1|mu=1.2"], capsys)
    assert code == 0 and out.out.strip() == "inside"
    code, out = run(["product", "nbhd", "--center", "xbar=0|ybar=1|mu=1", "--eps", "0.3",
                     "--z", "x=0.5|y=0.5"], capsys)
    assert code == 0 and out.out.strip() == "outside"


def test_free_null_and_homotopy(tmp_path, capsys):
    out = tmp_path / "null.json"
    assert main(["free", "null", "--samples", "200", "--out", str(out)]) == 0
    assert report(out)["result"]["gamma"] == ["1"]
    assert main(["free", "homotopy", "--which", "K", "--samples", "100", "--steps", "10"]) == 0
    assert main(["free", "homotopy", "--which", "P", "--samples", "50", "--steps", "10"]) == 0


def test_product_null_small(tmp_path, capsys):
    out, table = tmp_path / "n.json", tmp_path / "n.csv"
    assert main(["product", "null", "--grid", "40", "--samples", "2000", "--out", str(out), "--csv", str(table)]) == 0
    data = report(out)
    assert data["result"]["gamma_rectangles"] == [[2642, 26436], [216, 20]]
    assert list(csv.DictReader(table.open()))[0].keys() == {"g", "h", "cover_index"}


def test_failure_exit_code(monkeypatch, capsys):
    from zlab import verify

    real = verify.check_metric_axioms
    monkeypatch.setattr(verify, "check_metric_axioms", lambda *a, **k: real(*a, **{**k, "corrupt": True}))
    assert main(["verify", "metric", "--samples", "2000"]) == 1


def test_verify_all_smoke(capsys):
    code, out = run(["verify", "all", "--seed", "42", "--depth", "6", "--scale", "0.02"], capsys)
    assert code == 0
    assert out.out.count("PASS") == 12
