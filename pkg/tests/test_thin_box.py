from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from fracsudoku.core import PartialSudoku, SudokuShape, density_report, parse_puzzle
from fracsudoku.solver import certify, solve
from fracsudoku.thin_box import (ExtensionError, ExtensionReport, LatinRectangle, PreconditionError, SymbolDemands,
                                 barrier_construct, barrier_free_cells, barrier_parameter, column_bundle_property,
                                 extend_rectangle, scb_leaks, thin_complete)

DATA = Path(__file__).parent / "data"


@pytest.mark.parametrize("w", [2, 3])
def test_barrier_shape_and_counts(w):
    for h in range(w, 11):
        S = barrier_construct(w, h)  # PartialSudoku validates rows, columns, boxes
        a = barrier_parameter(h, w)
        counts = np.bincount(list(S.entries.values()), minlength=2 * a + 1)[1:]
        assert np.all(counts[a:] == 1)
        uses_A = counts[:a]
        assert len(set(uses_A.tolist())) == 1
        # symbols of A' occupy column 1 of box 1
        assert all(S.entries[(i, 1)] > a for i in range(1, a + 1))
        assert barrier_free_cells(h, w) < a or (h, w) == (2, 2)


def test_barrier_room_condition():
    assert barrier_parameter(6, 2) == 3
    with pytest.raises(ValueError):
        barrier_construct(3, 2)


def test_latin_rectangle_validation():
    with pytest.raises(ValueError, match="row"):
        LatinRectangle(np.array([[1, 1, 0]]))
    with pytest.raises(ValueError, match="column"):
        LatinRectangle(np.array([[1, 0, 0], [1, 0, 0]]))
    P = LatinRectangle(np.array([[1, 2, 0, 0], [0, 0, 0, 0]]))
    assert P.density() == Fraction(1, 2)


def test_empty_demands_return_input():
    P = LatinRectangle(np.zeros((12, 12), dtype=int))
    R = extend_rectangle(P, SymbolDemands.from_lists([[]] * 12), Fraction(1, 10), Fraction(1, 10))
    assert np.array_equal(R.grid, P.grid)


def test_singleton_demands():
    m = n = 12
    g = np.zeros((m, n), dtype=int)
    g[0, 0] = 1
    P = LatinRectangle(g)
    D = SymbolDemands.from_lists([[k] if k % 4 == 0 else [] for k in range(1, n + 1)])
    rep = ExtensionReport()
    R = extend_rectangle(P, D, Fraction(1, 12), Fraction(1, 6) - Fraction(1, 100), report=rep)
    assert R.contains(P) and D.satisfied_by(R)
    assert rep.added == 3 and rep.min_degree_slack > 0


def test_strict_preconditions():
    P = LatinRectangle(np.zeros((6, 6), dtype=int))
    D = SymbolDemands.from_lists([[1]] + [[]] * 5)
    with pytest.raises(PreconditionError):
        extend_rectangle(P, D, Fraction(1, 6), Fraction(1, 6))
    R = extend_rectangle(P, D, Fraction(1, 6), Fraction(1, 6), strict=False)
    assert D.satisfied_by(R)
    with pytest.raises(PreconditionError):
        extend_rectangle(P, SymbolDemands.from_lists([[]]), Fraction(1, 10), Fraction(1, 10), strict=False)


def test_unmatchable_demand():
    g = np.zeros((2, 4), dtype=int)
    g[0, 1], g[1, 2] = 3, 3  # symbol 3 already in both rows
    D = SymbolDemands.from_lists([[3], [], [], []])
    with pytest.raises(ExtensionError):
        extend_rectangle(LatinRectangle(g), D, Fraction(1, 2), Fraction(1, 2), strict=False)


def _thin_puzzles():
    return [parse_puzzle(t) for t in (DATA / "thin_6x2.txt").read_text().split("\n\n")]


def test_thin_complete_balances_bundles():
    for S in _thin_puzzles():
        res = thin_complete(S)
        assert not column_bundle_property(res.S_prime)
        assert all(v == 0 for v in scb_leaks(res.S_prime).values())
        assert all(S.entries[c] == res.S_prime.entries[c] for c in S.entries)
        assert res.outcome.completed and certify(S, res.outcome.assignment).ok
        assert not solve(S).completed


def test_thin_complete_empty():
    S = PartialSudoku(SudokuShape(6, 2))
    res = thin_complete(S)
    assert res.added == {} and res.outcome.completed
    assert np.allclose(res.outcome.assignment.weights, 1 / 12)


def test_extension_density_growth():
    for S in _thin_puzzles():
        res = thin_complete(S)
        before = density_report(S).eps_effective
        after = density_report(res.S_prime).eps_effective
        assert after <= 3 * (before + res.delta) or not res.added
