import csv
import json

import numpy as np
import pytest

from ccare.cli import main
from ccare.model import (CcareProblem, bundled_text, dumps_problem, load_problem,
                         problem_to_dict, validate)

from .conftest import X_MINUS, X_PLUS


def report_values(path):
    fields = {}
    for line in path.read_text().splitlines():
        key, sep, val = line.partition(":")
        if sep and key in ("variant", "converged", "iterations", "final_residual"):
            fields[key] = val.strip()
    return fields


def report_solution(path):
    lines = path.read_text().splitlines()
    start = lines.index("solution:") + 1
    rows = [[float(t) for t in ln.split()] for ln in lines[start:] if ln.strip()
            and not ln.strip().startswith("X")]
    return [np.array(rows[k:k + 2]) for k in range(0, len(rows), 2)]


def write_problem(tmp_path, p, name="p.json"):
    path = tmp_path / name
    path.write_text(dumps_problem(p))
    return str(path)


@pytest.fixture
def unsolvable(tmp_path):
    p = CcareProblem([[[-1.0]], [[-1.0]]], [[[0.0]], [[0.0]]], [[[1.0]], [[1.0]]],
                     [[0.0, 4.0], [4.0, 0.0]])
    return write_problem(tmp_path, p, "unsolvable.json")


class TestValidate:
    def test_example_ok(self, capsys):
        assert main(["validate", "example1", "--rho", "auto:0.01"]) == 0
        assert "ok" in capsys.readouterr().out

    def test_negative_coupling(self, tmp_path, example1, capsys):
        d = problem_to_dict(example1)
        d["delta"][1][0] = -3.0
        path = tmp_path / "neg.json"
        path.write_text(json.dumps(d))
        assert main(["validate", str(path)]) == 1
        assert "delta[1][0]" in capsys.readouterr().out

    def test_truncated(self, tmp_path):
        path = tmp_path / "cut.json"
        path.write_text(bundled_text("ivanov_example1")[:120])
        assert main(["validate", str(path)]) == 2

    def test_pbh_failure_reported(self, capsys):
        assert main(["validate", "example1", "--rho", "0"]) == 1
        assert "mode 0" in capsys.readouterr().out


class TestSolve:
    def test_minimal(self, tmp_path):
        code = main(["solve", "example1", "--variant", "accelerated", "--init", "zero",
                     "--rho", "1.01,1.01", "--out", str(tmp_path)])
        assert code == 0
        fields = report_values(tmp_path / "report.txt")
        assert fields["iterations"] == "12" and fields["converged"] == "true"
        for X, ref in zip(report_solution(tmp_path / "report.txt"), X_MINUS):
            assert np.array_equal(X, ref)

    def test_maximal(self, tmp_path):
        code = main(["solve", "example1", "--variant", "regular", "--init", "identity:3",
                     "--rho", "1.01,1.01", "--out", str(tmp_path)])
        assert code == 0
        assert report_values(tmp_path / "report.txt")["iterations"] == "35"
        for X, ref in zip(report_solution(tmp_path / "report.txt"), X_PLUS):
            assert np.array_equal(X, ref)

    def test_unsolvable(self, tmp_path, unsolvable):
        code = main(["solve", unsolvable, "--max-iter", "50", "--out", str(tmp_path)])
        assert code == 5
        assert report_values(tmp_path / "report.txt")["converged"] == "false"

    def test_trace_rows(self, tmp_path):
        main(["solve", "example1", "--init", "identity:3", "--out", str(tmp_path)])
        iterations = int(report_values(tmp_path / "report.txt")["iterations"])
        with open(tmp_path / "trace.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) - 1 == 2 * iterations

    def test_auto_shifts_echoed(self, tmp_path):
        main(["solve", "example1", "--rho", "auto:0.5", "--out", str(tmp_path)])
        assert "shifts: 1.5" in (tmp_path / "report.txt").read_text()

    def test_precondition_exit(self, tmp_path):
        assert main(["solve", "example1", "--rho", "0", "--out", str(tmp_path)]) == 3

    def test_init_file(self, tmp_path):
        init = tmp_path / "init.json"
        init.write_text(json.dumps({"X": [np.eye(2).tolist(), (3 * np.eye(2)).tolist()]}))
        code = main(["solve", "example1", "--init", f"file:{init}", "--out", str(tmp_path)])
        assert code == 0

    def test_init_file_wrong_size(self, tmp_path):
        init = tmp_path / "init.json"
        init.write_text(json.dumps([np.eye(3).tolist()] * 2))
        assert main(["solve", "example1", "--init", f"file:{init}",
                     "--out", str(tmp_path)]) == 2

    def test_init_file_wrong_count(self, tmp_path):
        init = tmp_path / "init.json"
        init.write_text(json.dumps([np.eye(2).tolist()]))
        assert main(["solve", "example1", "--init", f"file:{init}",
                     "--out", str(tmp_path)]) == 2

    @pytest.mark.parametrize("argv", [
        ["solve", "example1", "--init", "ones"],
        ["solve", "example1", "--rho", "1,2,3"],
        ["solve", "example1", "--tol", "-1"],
        ["solve", "missing.json"],
        ["frobnicate"],
    ])
    def test_usage_errors(self, tmp_path, argv):
        assert main(argv + (["--out", str(tmp_path)] if argv[0] == "solve" else [])) == 2


class TestCompare:
    def read_pair(self, out):
        return tuple(int(report_values(out / f"report_{v}.txt")["iterations"])
                     for v in ("regular", "accelerated"))

    def test_increasing(self, tmp_path):
        assert main(["compare", "example1", "--rho", "1.5", "--out", str(tmp_path)]) == 0
        assert self.read_pair(tmp_path) == (17, 14)
        with open(tmp_path / "ordering.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["sweep", "mode", "relation"]
        # mode 0 sees identical data in both variants on the first sweep
        assert {r[2] for r in rows[1:]} == {"GreaterEqual", "Equal"}
        assert rows[1] == ["1", "0", "Equal"]

    def test_decreasing(self, tmp_path):
        assert main(["compare", "example1", "--init", "identity:3", "--rho", "1.01",
                     "--out", str(tmp_path)]) == 0
        assert self.read_pair(tmp_path) == (35, 30)

    def test_single_mode_equal(self, tmp_path):
        p = CcareProblem([[[1.0, 2.0], [0.0, -1.0]]], [np.eye(2)], [np.eye(2)], [[0.0]])
        path = write_problem(tmp_path, p)
        assert main(["compare", path, "--out", str(tmp_path)]) == 0
        with open(tmp_path / "ordering.csv", newline="") as fh:
            assert {r[2] for r in list(csv.reader(fh))[1:]} == {"Equal"}


class TestSweep:
    @pytest.mark.parametrize("init, acc, reg", [
        ("zero", [14, 13, 12], [17, 16, 16]),
        ("identity:3", [38, 32, 30], [42, 36, 35]),
    ])
    def test_tables(self, tmp_path, init, acc, reg):
        assert main(["sweep", "example1", "--init", init, "--rho", "1.5;1.1;1.01",
                     "--out", str(tmp_path)]) == 0
        with open(tmp_path / "sweep.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 6
        got = {(r["rho"], r["variant"]): int(r["iterations"]) for r in rows}
        rhos = ("1.5", "1.1", "1.01")
        assert [got[(s, "accelerated")] for s in rhos] == acc
        assert [got[(s, "regular")] for s in rhos] == reg
        assert all(float(r["residual"]) <= 1e-7 for r in rows)

    def test_empty_list(self, tmp_path):
        assert main(["sweep", "example1", "--rho", ";", "--out", str(tmp_path)]) == 2

    def test_failed_row(self, tmp_path):
        assert main(["sweep", "example1", "--rho", "0;1.01", "--out", str(tmp_path)]) == 4


class TestExample:
    def test_emits_valid_file(self, tmp_path):
        assert main(["example", "ivanov_example1", "--out", str(tmp_path)]) == 0
        p = load_problem(tmp_path / "ivanov_example1.json")
        assert validate(p) == []

    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["example", "ivanov_example1", "--out", str(a)])
        main(["example", "ivanov_example1", "--out", str(b)])
        first = (a / "ivanov_example1.json").read_bytes()
        assert first == (b / "ivanov_example1.json").read_bytes()
        assert dumps_problem(load_problem(a / "ivanov_example1.json")).encode() == first

    def test_unknown(self, tmp_path):
        assert main(["example", "nope", "--out", str(tmp_path)]) == 2
