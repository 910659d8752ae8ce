import warnings
from fractions import Fraction

import numpy as np
import pytest

from fracsudoku.core import PartialSudoku, SudokuShape
from fracsudoku.incidence import build_M, rank_and_nullity
from fracsudoku.polyomino import (BoxMap, TilingError, alpha_of, alpha_report, approx_solve, build_M_prime,
                                  nullity_study, parse_tilings, random_perturbed_boxmap, read_tilings)
from fracsudoku.solver import certify, solve

S23, S33 = SudokuShape(2, 3), SudokuShape(3, 3)


def _swapped(shape, a, b):
    g = BoxMap.rectangular(shape).grid.copy()
    g[a], g[b] = g[b], g[a]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return BoxMap(g)


def test_rectangular_map():
    for shape in (S23, S33, SudokuShape(3, 2)):
        bm = BoxMap.rectangular(shape)
        assert np.array_equal(build_M_prime(bm), build_M(shape))
        assert alpha_of(bm, shape) == 0 and alpha_report(bm, shape).holds


def test_alpha_of_swaps():
    assert alpha_of(_swapped(S23, (0, 2), (0, 3)), S23) == Fraction(1, 2)
    assert alpha_of(_swapped(S23, (1, 0), (2, 0)), S23) == Fraction(1, 3)


def test_M_prime_structure():
    rng = np.random.default_rng(0)
    n = 6
    for _ in range(5):
        bm = random_perturbed_boxmap(S23, rng, swaps=2)
        Mp = build_M_prime(bm)
        assert np.all(Mp.sum(axis=1) == 4 * n)
        # only BS rows and columns see the box labelling
        D = Mp - build_M(S23)
        assert not np.any(D[:3 * n * n, :3 * n * n])


def test_alpha_report_fields():
    r = alpha_report(_swapped(S23, (0, 2), (0, 3)), S23)
    assert (r.norm, r.bound, r.changed_cells) == (12, 12, 2) and r.holds
    r = alpha_report(_swapped(S23, (1, 0), (2, 0)), S23)
    assert not r.holds  # the RC row of a moved cell alone contributes 2n > 4 alpha n
    assert any(line.startswith("bound_holds") for line in r.lines())


def test_tiling_parsing():
    text = "# two boxes of a 2x2\n2\na a\nb b\n\n2\n1 2\n1 2\n"
    t = parse_tilings(text)
    assert [bm.has_straight_box() for bm in t] == [True, True]
    assert t[0].names == ("a", "b") and t[1].grid.tolist() == [[0, 1], [0, 1]]
    with pytest.raises(TilingError, match="exactly"):
        parse_tilings("2\na a\na b\n")
    with pytest.raises(TilingError):
        parse_tilings("3\na a a\n")
    with pytest.warns(RuntimeWarning, match="connected"):
        parse_tilings("2\na b\nb a\n")


def test_packaged_tilings():
    tilings = read_tilings()
    assert len(tilings) == 45 and all(bm.n == 5 for bm in tilings)
    assert not any(bm.disconnected_boxes() for bm in tilings)
    recs = nullity_study(tilings[:6], numeric=True)
    assert all(r.stable and r.nullity == r.expected for r in recs)


def test_all_rows_boxes():
    # every box a full row: M' has the row-symbol relation duplicated
    bm = BoxMap(np.repeat(np.arange(4)[:, None], 4, axis=1))
    r = rank_and_nullity(build_M_prime(bm), "exact")
    assert r.rank + r.nullity == 64 and r.nullity > nullity_study([BoxMap.rectangular(SudokuShape(2, 2))])[0].nullity


def test_approx_solve_rectangular_matches_solve():
    S = PartialSudoku(S33, {(1, 1): 2, (5, 6): 3})
    a, b = approx_solve(S), solve(S)
    assert a.diagnostics["alpha"] == 0
    assert np.allclose(a.assignment.weights, b.assignment.weights, atol=1e-9)


def test_approx_solve_perturbed_empty():
    bm = _swapped(S33, (0, 2), (0, 3))
    S = PartialSudoku(S33, {}, bm.to_boxes())
    out = approx_solve(S)
    assert out.completed and certify(S, out.assignment).ok
    assert out.diagnostics["alpha"] > 0 and out.diagnostics["norm_M_minus_M_prime"] > 0
