from fractions import Fraction

import numpy as np
import pytest

from fracsudoku.algebra import AlgebraElement, element_infinity_norm, element_to_matrix, express_M
from fracsudoku.core import SudokuShape
from fracsudoku.incidence import build_M, build_W
from fracsudoku.spectral import (a_inverse_norm, a_inverse_norm_closed_form, eigenspace_dimension, eigenvectors,
                                 generalized_inverse, inverse_operator, k_norm, kernel_basis, norm_functions,
                                 projectors)

S23 = SudokuShape(2, 3)


def test_kernel_basis():
    kb = kernel_basis(S23)
    assert len(kb) == 43
    W = build_W(S23)
    assert not np.any(W.T @ kb.vectors.T)
    row_type = [v for v, f in zip(kb.vectors, kb.families) if f == "A"][0]
    assert np.count_nonzero(row_type) == 2 * 6
    assert sorted(set(row_type[row_type != 0].tolist())) == [-1, 1]


@pytest.mark.parametrize("shape", [S23, SudokuShape(3, 3), SudokuShape(2, 4)])
def test_eigenvectors(shape):
    M = build_M(shape)
    total = 0
    for j in range(5):
        V = eigenvectors(shape, j) if j < 4 else np.ones((1, M.shape[0]), dtype=np.int64)
        assert len(V) == eigenspace_dimension(shape, j)
        assert np.array_equal(M @ V.T, j * shape.n * V.T)
        total += len(V)
    assert total == M.shape[0]


def test_cross_bundle_pair_is_not_eigenvector():
    # +-1 pattern over two rows and two columns in different bundles, RC section only
    n = 6
    v = np.zeros((4, n, n), dtype=np.int64)
    v[0, 0, 0], v[0, 0, 3], v[0, 2, 0], v[0, 2, 3] = 1, -1, -1, 1
    v = v.ravel()
    Mv = build_M(S23) @ v
    assert not any(np.array_equal(Mv, t * v) for t in range(0, 5 * n, n))


def test_projectors():
    P = projectors(S23)
    assert all(c == Fraction(1, 144) for c in P[4].coeffs)
    assert not (P.K @ express_M(S23)).nonzero()
    traces = [round(np.trace(element_to_matrix(P[j]))) for j in range(5)]
    assert traces == [43, 68, 24, 8, 1]
    recon = sum((P[j].scale(j * 6) for j in range(1, 5)), AlgebraElement.zero(S23))
    assert recon == express_M(S23)
    assert P.K @ P.K == P.K
    eig = projectors(S23, "eigenbasis")
    assert all(a == b for a, b in zip(P.E, eig.E))


@pytest.mark.parametrize("hw", [(2, 2), (2, 3), (3, 3), (2, 4), (3, 4), (4, 4)])
def test_projectors_reconstruct_M(hw):
    shape = SudokuShape(*hw)
    P = projectors(shape)
    recon = sum((P[j].scale(j * shape.n) for j in range(1, 5)), AlgebraElement.zero(shape))
    assert recon == express_M(shape)


def test_inverse_row_sums():
    Ainv = element_to_matrix(generalized_inverse(S23))
    assert np.allclose(Ainv @ np.ones(144), np.ones(144) / 24)
    op = inverse_operator(S23)
    x = np.random.default_rng(0).standard_normal(144)
    assert np.allclose(op(x), Ainv @ x)


def test_norm_functions():
    f1, f2, f3 = norm_functions(Fraction(3, 2))
    assert f3 == Fraction(15, 4) and f1 == Fraction(61, 18)
    # max f_i is flat (= 15/4) on [13/12, 3/2], so 3/2 is a minimizer but not the only one
    grid = [Fraction(k, 240) for k in range(240, 721)]
    prof = [max(norm_functions(x)) for x in grid]
    best = min(prof)
    argmins = [x for x, v in zip(grid, prof) if v == best]
    assert best == Fraction(15, 4) and Fraction(3, 2) in argmins
    assert (min(argmins), max(argmins)) == (Fraction(13, 12), Fraction(3, 2))


def test_a_inverse_norm():
    assert abs(float(a_inverse_norm_closed_form(SudokuShape(3, 3))) - 0.349508460) < 1e-9
    inv = element_to_matrix(generalized_inverse(S23), exact=True)
    explicit = max(sum(abs(v) for v in row) for row in inv)
    assert a_inverse_norm(S23).closed_form == explicit
    for h in range(2, 7):
        for w in range(2, 7):
            shape = SudokuShape(h, w)
            assert a_inverse_norm_closed_form(shape) < Fraction(15, 4 * shape.n)


def test_k_norm():
    shape = SudokuShape(3, 3)
    K = element_to_matrix(projectors(shape).K, exact=True)
    assert k_norm(shape) == max(sum(abs(v) for v in row) for row in K)
    for s in (4, 5):
        assert k_norm(SudokuShape(s, s)) <= Fraction(11, 2)
    K2 = projectors(S23).K
    assert element_infinity_norm(K2 @ K2) <= element_infinity_norm(K2) ** 2
