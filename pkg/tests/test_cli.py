from pathlib import Path

import pytest

from fracsudoku.cli import main

PUZZLES = Path(__file__).resolve().parents[1] / "puzzles"


def test_solve_and_verify(tmp_path, capsys):
    sol = tmp_path / "empty.sol"
    assert main(["solve", str(PUZZLES / "empty_3x3.txt"), "-o", str(sol)]) == 0
    assert "records: 729" in sol.read_text()
    assert main(["verify", str(PUZZLES / "empty_3x3.txt"), str(sol)]) == 0
    assert "certified: yes" in capsys.readouterr().out


def test_solve_obstruction_exit_code(capsys):
    assert main(["solve", str(PUZZLES / "obstruction_left.txt")]) == 1
    assert "zero available tiles" in capsys.readouterr().out


def test_thin_solve(capsys):
    assert main(["thin-solve", str(PUZZLES / "thin_6x2.txt"), "--show-extended"]) == 0
    assert "completed" in capsys.readouterr().out


def test_spectrum(tmp_path, capsys):
    assert main(["spectrum", "2", "3", "--cache", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    for m in ("43", "68", "24", "8"):
        assert m in out
    assert list(tmp_path.iterdir())
    assert main(["spectrum", "2", "3", "--cache", str(tmp_path)]) == 0  # served from the cache


def test_algebra_check(tmp_path):
    assert main(["algebra-check", "2", "3", "--pairs", "10", "--cache", str(tmp_path)]) == 0


def test_gen_barrier(tmp_path, capsys):
    out = tmp_path / "b.txt"
    assert main(["gen-barrier", "4", "2", "-o", str(out)]) == 0
    assert out.read_text().startswith("4 2")
    assert main(["solve", str(out)]) == 1


def test_pentadoku_nullity(capsys):
    assert main(["pentadoku-nullity", "--exact-only"]) == 0
    assert "45" in capsys.readouterr().out


def test_bench(capsys):
    assert main(["bench", "--shapes", "2x3", "--entries", "0,2", "--count", "2", "--seed", "1"]) == 0
    assert "completed" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [["solve", "/nonexistent/puzzle.txt"], ["spectrum", "1", "3"],
                                  ["bench", "--eps", "1/3", "--entries", "2"], ["nosuch"]])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        code = main(argv)
        raise SystemExit(code)
    assert exc.value.code == 2
