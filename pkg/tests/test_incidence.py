import io
import itertools

import numpy as np
import pytest

from fracsudoku.core import EdgeId, PartialSudoku, SudokuShape, Tile, box_of, random_partial
from fracsudoku.incidence import (apply_M, build_M, build_M_sparse, build_restricted, build_W, export_triplets,
                                  rank_and_nullity)

S23 = SudokuShape(2, 3)


def test_W_counts():
    W = build_W(S23)
    assert W.shape == (144, 216)
    assert set(np.asarray(W.sum(axis=0)).ravel()) == {4}
    assert set(np.asarray(W.sum(axis=1)).ravel()) == {6}
    assert np.all(W.T @ np.ones(144) == 4)


@pytest.mark.parametrize("h,w", list(itertools.product((2, 3, 4), repeat=2)))
def test_M_methods_agree(h, w):
    shape = SudokuShape(h, w)
    M = build_M(shape, "product")
    assert np.array_equal(M, build_M(shape, "kronecker_blocks"))
    assert np.all(M.sum(axis=1) == 4 * shape.n)


def test_M_entries_by_brute_force():
    n = 6
    M = build_M(S23)
    tiles = [Tile(i, j, k, box_of(S23, i, j)) for i in range(1, 7) for j in range(1, 7) for k in range(1, 7)]

    def count(e, f):
        return sum(1 for t in tiles if e in t.edges() and f in t.edges())

    for e, f, want in [(EdgeId("RS", 1, 1), EdgeId("BS", 1, 1), 3), (EdgeId("RC", 1, 1), EdgeId("RS", 1, 1), 1),
                       (EdgeId("RC", 1, 1), EdgeId("RC", 2, 2), 0)]:
        assert M[e.index(n), f.index(n)] == want == count(e, f)


def test_apply_M_matches_dense():
    rng = np.random.default_rng(0)
    for shape in (S23, SudokuShape(3, 3)):
        M = build_M(shape)
        V = rng.standard_normal((M.shape[0], 3))
        assert np.allclose(apply_M(shape, V), M @ V)
        assert np.allclose(apply_M(shape, V[:, 0]), M @ V[:, 0])
        assert np.allclose(build_M_sparse(shape) @ V, M @ V)


def test_restricted_system():
    rs = build_restricted(PartialSudoku(S23))
    assert np.array_equal(rs.M_S.toarray(), build_M(S23))
    rs = build_restricted(PartialSudoku(S23, {(1, 1): 1}))
    assert rs.num_edges == 140
    W = build_W(S23).toarray()
    sub = W[np.ix_(rs.edges, rs.tiles)]
    assert np.array_equal(rs.M_S.toarray(), sub @ sub.T)
    full = random_partial(S23, 36, np.random.default_rng(1))
    assert build_restricted(full).M_S.shape == (0, 0)


def test_rank_nullity_examples():
    assert rank_and_nullity(build_M(S23), "exact")[:2] == (101, 43)
    assert rank_and_nullity(build_M(SudokuShape(3, 3)), "exact")[:2] == (249, 75)
    for h, w in itertools.product((2, 3), repeat=2):
        shape = SudokuShape(h, w)
        assert rank_and_nullity(build_W(shape), "exact").rank == rank_and_nullity(build_M(shape), "exact").rank
    num = rank_and_nullity(build_M(S23), "numeric")
    assert num.nullity == 43 and not num.ill_conditioned


def test_export_triplets():
    buf = io.StringIO()
    nnz = export_triplets(build_M(S23), buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == nnz and lines[0] == "0 0 6"
