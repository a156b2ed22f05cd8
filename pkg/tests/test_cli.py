import csv
import json
import subprocess
import sys

import pytest

from halldecomp.bench import BenchError, BenchRow, Limits, disagreements, read_csv, run_bench, solve_instance, write_csv
from halldecomp.cli import main
from halldecomp.generators import gen_double_wheel, gen_php
from halldecomp.instance import Method, save


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def hall_pair(tmp_path):
    doc = {
        "name": "hall-pair",
        "variables": [
            {"name": "X1", "domain": [[3, 4]]},
            {"name": "X2", "domain": [[1, 4]]},
            {"name": "X3", "domain": [[3, 4]]},
            {"name": "X4", "domain": [[2, 5]]},
            {"name": "X5", "domain": [[1, 1]]},
        ],
        "constraints": [{"kind": "alldifferent", "scope": ["X1", "X2", "X3", "X4", "X5"], "consistency": "rc"}],
        "objective": None,
    }
    p = tmp_path / "hall_pair.json"
    p.write_text(json.dumps(doc))
    return p


def test_gen_and_solve(tmp_path, capsys):
    p = tmp_path / "php5.json"
    assert run(["gen", "php", "5", "-o", str(p)], capsys)[0] == 0
    code, out, _ = run(["solve", str(p), "--method", "bi"], capsys)
    assert code == 20 and out.startswith("UNSAT backtracks=23 ")
    code, out, _ = run(["solve", str(p), "--method", "hi"], capsys)
    assert code == 20 and "backtracks=0 " in out
    code, out, _ = run(["solve", str(p), "--method", "hi-k", "2"], capsys)
    assert code == 20 and "backtracks=17 " in out
    code, out, _ = run(["solve", str(p), "--method", "bi", "--nodes", "3"], capsys)
    assert code == 30 and out.startswith("TIMEOUT")


def test_gen_stdout(capsys):
    code, out, _ = run(["gen", "dw", "3"], capsys)
    assert code == 0 and json.loads(out)["name"] == "dw-3"


def test_solve_sat(tmp_path, capsys):
    p = tmp_path / "dw4.json"
    save(gen_double_wheel(4), p)
    code, out, _ = run(["solve", str(p), "--method", "bi", "--timeout", "60"], capsys)
    assert code == 0 and out.startswith("SAT")
    assert "h = 0" in out


def test_propagate(hall_pair, capsys):
    code, out, _ = run(["propagate", str(hall_pair)], capsys)
    assert code == 0
    assert out.splitlines() == ["X1 {3..4}", "X2 {2}", "X3 {3..4}", "X4 {5}", "X5 {1}"]
    code, out, _ = run(["propagate", str(hall_pair), "--consistency", "bc", "--trace"], capsys)
    assert code == 0 and out.startswith("trace ")


def test_propagate_conflict(tmp_path, capsys):
    p = tmp_path / "php6.json"
    save(gen_php(6), p)
    code, out, _ = run(["propagate", str(p)], capsys)
    assert code == 20 and out.strip() == "CONFLICT"
    code, out, _ = run(["propagate", str(p), "--hall-cap", "1"], capsys)
    assert code == 0


def test_encode_decode(tmp_path, capsys):
    p = tmp_path / "php3.json"
    save(gen_php(3), p)
    opb = tmp_path / "php3.opb"
    assert run(["encode", str(p), "--mode", "hi", "--k", "2", "-o", str(opb)], capsys)[0] == 0
    assert opb.read_text().startswith("* #variable= ")
    vm = tmp_path / "php3.varmap"
    assert vm.exists()
    assert run(["encode", str(p), "--mode", "bi", "-o", str(opb)], capsys)[0] == 0
    model = tmp_path / "model.txt"
    # x1=1, x2=2, x3=1 in the BI map (Z x1 1, Z x1 2, Z x2 1, ...)
    model.write_text("x1 -x2 -x3 x4 x5 -x6\n")
    code, out, _ = run(["decode", str(vm), str(model)], capsys)
    assert code == 0 and out.splitlines() == ["x1 = 1", "x2 = 2", "x3 = 1"]
    code, out, _ = run(["decode", str(vm), str(model), "--instance", str(p)], capsys)
    assert code == 20 and "violation" in out
    model.write_text("x1 x2 -x3 x4 x5 -x6\n")
    code, _, err = run(["decode", str(vm), str(model)], capsys)
    assert code == 64 and "x1" in err


def test_usage_errors(tmp_path, capsys):
    assert run(["gen", "php", "1"], capsys)[0] == 64
    assert run(["gen", "dw", "2"], capsys)[0] == 64
    assert run(["solve", str(tmp_path / "missing.json")], capsys)[0] == 64
    p = tmp_path / "php3.json"
    save(gen_php(3), p)
    assert run(["solve", str(p), "--method", "hi-k"], capsys)[0] == 64
    assert run(["solve", str(p), "--method", "xx"], capsys)[0] == 64
    assert run(["encode", str(p), "--mode", "bi", "--k", "2", "-o", str(tmp_path / "o.opb")], capsys)[0] == 64
    assert run(["bench", str(tmp_path / "nodir"), "--csv", "x.csv"], capsys)[0] == 64
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 64
    with pytest.raises(SystemExit) as exc:
        main(["solve"])
    assert exc.value.code == 64


def test_console_script_exit_code(tmp_path):
    p = tmp_path / "php4.json"
    save(gen_php(4), p)
    r = subprocess.run([sys.executable, "-m", "halldecomp.cli", "solve", str(p)], capture_output=True, text=True)
    assert r.returncode == 20 and r.stdout.startswith("UNSAT")


def test_bench_cli_csv_and_plot(tmp_path, capsys):
    d = tmp_path / "insts"
    d.mkdir()
    for n in (4, 5, 6):
        save(gen_php(n), d / f"php-{n}.json")
    out = tmp_path / "res.csv"
    code, stdout, _ = run(["bench", str(d), "--methods", "bi,hi-1", "hi-2", "hi", "--csv", str(out)], capsys)
    assert code == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["instance", "method", "verdict", "backtracks", "nodes", "time_ms"]
    assert len(rows) == 1 + 3 * 4
    assert [r[:2] for r in rows[1:5]] == [["php-4", "BI"], ["php-4", "HI_1"], ["php-4", "HI_2"], ["php-4", "HI"]]
    png = tmp_path / "res-php.png"
    assert png.exists() and png.read_bytes()[:4] == b"\x89PNG"


def test_run_bench_rows():
    rows = run_bench([gen_php(n) for n in range(5, 8)], ["bi", "hi"], Limits(60))
    assert [(r.instance, r.method) for r in rows] == [(f"php-{n}", m) for n in range(5, 8) for m in ("BI", "HI")]
    for r in rows:
        assert r.verdict == "UNSAT"
        assert (r.backtracks == 0) == (r.method == "HI")
    assert disagreements(rows) == []


def test_run_bench_parallel_matches_serial():
    insts = [gen_php(n) for n in (4, 5, 6)]
    methods = [Method("bi"), Method("hi", 2)]
    a = run_bench(insts, methods, Limits(60), jobs=1)
    b = run_bench(insts, methods, Limits(60), jobs=2)
    assert [(r.instance, r.method, r.verdict, r.backtracks, r.nodes) for r in a] == [
        (r.instance, r.method, r.verdict, r.backtracks, r.nodes) for r in b
    ]


def test_bench_timeout_row():
    row = solve_instance(gen_php(8), Method("bi"), Limits(time_limit=None, node_limit=10))
    assert row.verdict == "TIMEOUT" and row.nodes == 10


def test_checker_failure_aborts(monkeypatch):
    import halldecomp.bench as bench

    monkeypatch.setattr(bench, "check_solution", lambda inst, asg: ["forged violation"])
    with pytest.raises(BenchError):
        solve_instance(gen_double_wheel(4), Method("bi"), Limits(60))


def test_csv_roundtrip(tmp_path):
    rows = [BenchRow("php-5", "BI", "UNSAT", 23, 23, 1.5), BenchRow("dw-4", "HI_3", "SAT", 9, 12, 20.25)]
    p = tmp_path / "r.csv"
    write_csv(rows, p)
    assert read_csv(p) == rows
    with pytest.raises(ValueError):
        BenchRow("x", "BI", "MAYBE", 0, 0, 0.0)


def test_disagreements():
    rows = [BenchRow("a", "BI", "SAT", 0, 0, 0), BenchRow("a", "HI", "UNSAT", 0, 0, 0), BenchRow("a", "HI_1", "TIMEOUT", 0, 0, 0)]
    assert len(disagreements(rows)) == 1
