import csv
import json

import pytest

from rldp.cli import main


@pytest.fixture
def data_csv(tmp_path):
    rows = [("a", "x"), ("a", "y"), ("b", "x"), ("b", "z"), ("c", "y"), ("a", "z"),
            ("c", "x"), ("b", "y"), ("c", "z"), ("a", "x")] * 30
    path = tmp_path / "data.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "race", "job"])
        for i, (s, u) in enumerate(rows):
            w.writerow([i, s, u])
    return path


@pytest.fixture
def dist(tmp_path, data_csv):
    out = tmp_path / "dist.json"
    assert main(["fit", "--input", str(data_csv), "--s-col", "race", "--u-col", "job",
                 "--out", str(out)]) == 0
    return out


def _build(tmp_path, dist, method, eps="1.0", *extra):
    out = tmp_path / f"{method}.json"
    code = main(["build", "--method", method, "--eps", eps, "--dist", str(dist),
                 "--out", str(out), *extra])
    return code, out


def test_fit_writes_labels_and_n(dist):
    obj = json.loads(dist.read_text())
    assert obj["n"] == 300
    assert obj["s_labels"] == ["a", "b", "c"] and obj["u_labels"] == ["x", "y", "z"]


@pytest.mark.parametrize("method", ["grr", "srr", "ue", "ir", "grr-cr", "ue-cr", "polyopt"])
def test_build_and_audit_every_method(tmp_path, dist, method, capsys):
    code, proto = _build(tmp_path, dist, method)
    assert code == 0
    code = main(["audit", "--protocol", str(proto), "--dist", str(dist), "--samples", "500"])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["passed"] is True


def test_build_fixed_split(tmp_path, dist):
    code, proto = _build(tmp_path, dist, "ir", "2.0", "--eps2", "0.5")
    assert code == 0
    params = json.loads(proto.read_text())["params"]
    assert params["eps2"] == 0.5 and params["eps1"] == 1.5


def test_ue_cr_fixed_split_needs_kappa(tmp_path, dist):
    code, _ = _build(tmp_path, dist, "ue-cr", "2.0", "--eps2", "0.5")
    assert code == 2
    code, _ = _build(tmp_path, dist, "ue-cr", "2.0", "--eps2", "0.5", "--kappa", "0.99", "--lambda", "0.01")
    assert code == 3


def test_polyopt_robust_records_bound(tmp_path, dist):
    code, proto = _build(tmp_path, dist, "polyopt", "2.0", "--objective", "robust")
    assert code == 0
    assert json.loads(proto.read_text())["params"]["lower_bound"] > 0


def test_audit_failure_exit_code(tmp_path, dist, capsys):
    _, proto = _build(tmp_path, dist, "srr")
    report_path = tmp_path / "report.json"
    code = main(["audit", "--protocol", str(proto), "--eps", "0.5", "--out", str(report_path)])
    assert code == 1
    assert json.loads(report_path.read_text())["mode"] == "exact-maximal"


def test_stress_audit_needs_dist(tmp_path, dist):
    _, proto = _build(tmp_path, dist, "grr-cr")
    assert main(["audit", "--protocol", str(proto)]) == 2


def test_eval_prints_utilities(tmp_path, dist, capsys):
    _, proto = _build(tmp_path, dist, "grr", "0.0")
    capsys.readouterr()
    assert main(["eval", "--protocol", str(proto), "--dist", str(dist), "--normalized",
                 "--eval-dist", str(dist)]) == 0
    lines = dict(line.split("\t") for line in capsys.readouterr().out.strip().splitlines())
    assert set(lines) == {"utility", "normalized_utility", "eval_utility",
                          "eval_normalized_utility", "difference"}
    assert abs(float(lines["utility"])) < 1e-15 and float(lines["difference"]) == 0.0


def test_obfuscate_appends_release_columns(tmp_path, dist, data_csv):
    _, proto = _build(tmp_path, dist, "grr-cr", "2.0")
    out = tmp_path / "released.csv"
    args = ["obfuscate", "--protocol", str(proto), "--input", str(data_csv), "--s-col", "race",
            "--u-col", "job", "--dist", str(dist), "--seed", "7", "--out", str(out)]
    assert main(args) == 0
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 300
    assert set(rows[0]) == {"id", "race", "job", "released", "released_label"}
    first = out.read_text()
    assert main(args) == 0
    assert out.read_text() == first


def test_sweep_writes_reproducible_csv(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["sweep", "--methods", "grr,ir", "--eps-grid", "0:2:3", "--trials", "2",
                     "--seed", "9", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = list(csv.DictReader(open(a)))
    assert len(rows) == 2 * 2 * 3 + 2 * 3


def test_sweep_zero_grid(tmp_path):
    out = tmp_path / "z.csv"
    assert main(["sweep", "--methods", "grr", "--eps-grid", "0:0:1", "--trials", "3",
                 "--seed", "0", "--out", str(out)]) == 0
    assert all(float(r["utility"]) == 0.0 for r in csv.DictReader(open(out)))


def test_usage_errors(tmp_path, dist):
    assert main(["build", "--method", "grr", "--eps", "1", "--dist", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path / "o.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["eval", "--protocol", str(bad), "--dist", str(dist)]) == 2
    assert main(["sweep", "--methods", "grr", "--eps-grid", "1:2", "--seed", "0",
                 "--out", str(tmp_path / "s.csv")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["build", "--method", "nope", "--eps", "1", "--dist", str(dist), "--out", "x"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["build", "--method", "grr", "--eps", "-1", "--dist", str(dist), "--out", "x"])
    assert exc.value.code == 2


def test_precondition_errors(tmp_path):
    # an unobserved S value leaves a zero marginal, which conditional methods refuse
    dist = tmp_path / "zero.json"
    dist.write_text(json.dumps({"a1": 2, "a2": 2, "p": [0.5, 0.5, 0.0, 0.0], "n": 100}))
    code, _ = _build(tmp_path, dist, "grr-cr")
    assert code == 3
    code, _ = _build(tmp_path, dist, "grr")
    assert code == 0
