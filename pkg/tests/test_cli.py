import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from paralingam import report
from paralingam.cli import main, parse_cell
from paralingam.datagen import read_csv

GOLDEN = Path(__file__).parent / "golden"


def _run(argv, capsys=None):
    code = main([str(a) for a in argv])
    out = capsys.readouterr() if capsys else None
    return code, out


def test_gen_deterministic_files(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert main(["gen", "--p", "100", "--n", "1024", "--density", "sparse",
                     "--seed", "7", "-o", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    ta = tmp_path / "a.truth.json"
    assert ta.read_bytes() == (tmp_path / "b.truth.json").read_bytes()
    names, X = read_csv(a)
    assert len(names) == 100 and X.shape == (100, 1024)


def test_gen_rejects_p1(capsys):
    code, out = _run(["gen", "--p", "1"], capsys)
    assert code == 2 and "p must be" in out.err


def test_gen_dense_parent_counts(tmp_path):
    path = tmp_path / "d.csv"
    assert main(["gen", "--p", "100", "--n", "20", "--density", "dense", "-o", str(path)]) == 0
    truth = json.loads((tmp_path / "d.truth.json").read_text())
    counts = [len(truth["parents"][v]) for v in truth["order"]]
    assert all(25 <= c <= 50 for c in counts[50:])


def test_run_round_trip_dimensions(tmp_path, capsys):
    csv_path = tmp_path / "d.csv"
    main(["gen", "--p", "7", "--n", "300", "--seed", "3", "-o", str(csv_path)])
    capsys.readouterr()
    code, out = _run(["run", csv_path], capsys)
    assert code == 0
    rep = report.loads(out.out)
    assert len(rep["variables"]) == 7 and rep["n_samples"] == 300
    assert np.asarray(rep["B"]).shape == (7, 7)
    assert report.loads(report.dumps(rep)) == rep


def test_serial_parallel_reports_agree(tmp_path):
    csv_path = tmp_path / "d.csv"
    main(["gen", "--p", "12", "--n", "500", "--seed", "4", "-o", str(csv_path)])
    s, p = tmp_path / "s.json", tmp_path / "p.json"
    assert main(["run", str(csv_path), "-o", str(s)]) == 0
    assert main(["run", str(csv_path), "--engine", "parallel", "--threads", "8",
                 "--gamma0", "1e-3", "--c", "2", "-o", str(p)]) == 0
    rs, rp = json.loads(s.read_text()), json.loads(p.read_text())
    assert json.dumps(rs["order"]) == json.dumps(rp["order"])
    assert json.dumps(rs["B"]) == json.dumps(rp["B"])
    assert 0.0 <= rp["stats"]["saved_fraction"] <= 1.0


def test_zero_variance_exit_code(tmp_path, capsys):
    path = tmp_path / "z.csv"
    path.write_text("alpha,beta\n1,5\n2,5\n3,5\n4,5\n")
    code, out = _run(["run", path], capsys)
    assert code == 4 and "beta" in out.err


def test_perfect_correlation_exit_code(tmp_path, capsys):
    path = tmp_path / "c.csv"
    path.write_text("a,b,c\n1,2,0.3\n2,4,0.1\n3,6,0.9\n5,10,0.2\n")
    code, out = _run(["run", path], capsys)
    assert code == 5 and "a" in out.err and "b" in out.err


def test_io_and_usage_exit_codes(tmp_path, capsys):
    code, _ = _run(["run", tmp_path / "missing.csv"], capsys)
    assert code == 3
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,x\n2,3\n4,5\n")
    code, _ = _run(["run", bad], capsys)
    assert code == 2
    code, _ = _run(["run", bad, "--c", "1.0"], capsys)
    assert code == 2
    with pytest.raises(SystemExit) as ei:
        main(["run", str(bad), "--threads", "0"])
    assert ei.value.code == 2


def test_text_format(tmp_path, capsys):
    csv_path = tmp_path / "d.csv"
    main(["gen", "--p", "4", "--n", "200", "-o", str(csv_path)])
    capsys.readouterr()
    code, out = _run(["run", csv_path, "--format", "text", "--timing"], capsys)
    assert code == 0 and "order:" in out.out and "wall time" in out.out


def test_golden_report(tmp_path):
    out = tmp_path / "r.json"
    assert main(["run", str(GOLDEN / "small.csv"), "--engine", "parallel", "--threads", "2",
                 "-o", str(out)]) == 0
    got = json.loads(out.read_text())
    want = json.loads((GOLDEN / "small_report.json").read_text())
    assert list(got) == list(want)
    assert got["schema_version"] == 1
    for key in ("engine", "mode", "policy", "n_samples", "variables", "order", "order_names"):
        assert got[key] == want[key]
    np.testing.assert_allclose(got["B"], want["B"], rtol=0, atol=1e-9)
    np.testing.assert_allclose(got["scale"]["std"], want["scale"]["std"], rtol=1e-12)
    assert got["stats"]["comparisons_performed"] == want["stats"]["comparisons_performed"]


def test_parse_cell():
    assert parse_cell("serial")["engine"] == "serial"
    assert parse_cell("parallel:relaxed:8") == {"engine": "parallel", "mode": "relaxed",
                                                "threads": 8}
    from paralingam.cli import UsageError

    for bad in ("gpu", "parallel:fast", "parallel:relaxed:x", "parallel:relaxed:0"):
        with pytest.raises(UsageError):
            parse_cell(bad)


def test_bench_single_serial_cell(tmp_path):
    out = tmp_path / "b.json"
    assert main(["bench", "--p", "10", "--n", "200", "--cells", "serial", "--format", "json",
                 "-o", str(out)]) == 0
    rows = json.loads(out.read_text())["datasets"][0]["cells"]
    assert len(rows) == 1 and rows[0]["speedup"] == 1.0


def test_bench_matrix_orders_agree(tmp_path):
    out = tmp_path / "b.json"
    assert main(["bench", "--p", "100", "200", "--n", "256", "--cells", "serial",
                 "parallel:relaxed:2", "--format", "json", "-o", str(out)]) == 0
    ds = json.loads(out.read_text())["datasets"]
    reports = [c for d in ds for c in d["cells"]]
    assert len(reports) == 4
    for d in ds:
        orders = {json.dumps(c["order"]) for c in d["cells"]}
        assert len(orders) == 1


def test_bench_mismatch_exit_code(tmp_path, monkeypatch, capsys):
    import paralingam.cli as cli

    real = cli.run_para_lingam

    def broken(*a, **k):
        res = real(*a, **k)
        return res._replace(order=list(reversed(res.order)))

    monkeypatch.setattr(cli, "run_para_lingam", broken)
    code, out = _run(["bench", "--p", "6", "--n", "100", "--cells", "parallel:stepped:1"], capsys)
    assert code == 8 and "order" in out.err


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "paralingam", "--help"], capture_output=True,
                       text=True)
    assert r.returncode == 0
    for cmd in ("gen", "run", "bench"):
        assert cmd in r.stdout
        sub = subprocess.run([sys.executable, "-m", "paralingam", cmd, "--help"],
                             capture_output=True, text=True)
        assert sub.returncode == 0
