"""Incidence matrix W, normal matrix M = W W^T and their restrictions to G_S."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional, TextIO

import numpy as np
import scipy.sparse as sp

from .core import (
    PartialSudoku,
    SudokuShape,
    available_tile_mask,
    edge_mask,
    rect_box_grid,
    tile_edge_array,
)


def _box_grid(shape: SudokuShape, boxes: Optional[np.ndarray]) -> np.ndarray:
    return rect_box_grid(shape) if boxes is None else np.asarray(boxes)


def build_W(shape: SudokuShape, boxes: Optional[np.ndarray] = None) -> sp.csr_matrix:
    """Edge-by-tile 0/1 incidence matrix (4n^2 x n^3), sparse.

    ``boxes`` is an optional 0-based n x n box labelling replacing the
    rectangular pattern.
    """
    n = shape.n
    te = tile_edge_array(n, _box_grid(shape, boxes))
    cols = np.repeat(np.arange(n**3), 4)
    data = np.ones(4 * n**3, dtype=np.int64)
    return sp.csr_matrix((data, (te.ravel(), cols)), shape=(4 * n * n, n**3))


def line_box_counts(box_grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(R, C)`` with R[i, l] = |row i ∩ box l| and C[j, l] = |column j ∩ box l|."""
    n = box_grid.shape[0]
    R = np.zeros((n, n), dtype=np.int64)
    C = np.zeros((n, n), dtype=np.int64)
    ii, jj = np.indices((n, n))
    np.add.at(R, (ii.ravel(), box_grid.ravel()), 1)
    np.add.at(C, (jj.ravel(), box_grid.ravel()), 1)
    return R, C


def _kronecker_blocks(n: int, box_grid: np.ndarray) -> np.ndarray:
    I = np.eye(n, dtype=np.int64)
    J = np.ones((n, n), dtype=np.int64)
    col = np.ones((n, 1), dtype=np.int64)
    row = col.T
    # H_rcb: cell-by-box incidence; R, C: line-box intersection sizes
    H = np.zeros((n * n, n), dtype=np.int64)
    H[np.arange(n * n), box_grid.ravel()] = 1
    R, C = line_box_counts(box_grid)
    rc_rs = np.kron(I, J)
    rc_cs = np.kron(col, np.kron(I, row))
    rc_bs = np.kron(H, row)
    rs_cs = np.kron(J, I)
    rs_bs = np.kron(R, I)
    cs_bs = np.kron(C, I)
    nI = n * np.eye(n * n, dtype=np.int64)
    return np.block([
        [nI, rc_rs, rc_cs, rc_bs],
        [rc_rs.T, nI, rs_cs, rs_bs],
        [rc_cs.T, rs_cs.T, nI, cs_bs],
        [rc_bs.T, rs_bs.T, cs_bs.T, nI],
    ])


def build_M(shape: SudokuShape, method: str = "product", boxes: Optional[np.ndarray] = None) -> np.ndarray:
    """Dense normal matrix M = W W^T as int64.

    ``method="product"`` multiplies the sparse incidence matrix;
    ``method="kronecker_blocks"`` assembles the sixteen Kronecker blocks.
    """
    if method == "product":
        W = build_W(shape, boxes)
        return (W @ W.T).toarray()
    if method == "kronecker_blocks":
        return _kronecker_blocks(shape.n, _box_grid(shape, boxes))
    raise ValueError(f"unknown method {method!r}")


def build_M_sparse(shape: SudokuShape, boxes: Optional[np.ndarray] = None) -> sp.csr_matrix:
    W = build_W(shape, boxes)
    return (W @ W.T).tocsr()


def apply_M(shape: SudokuShape, v: np.ndarray, boxes: Optional[np.ndarray] = None) -> np.ndarray:
    """Matrix-free product M v (v may be a vector or a 4n^2 x k block).

    Uses the block formulas, so memory is O(n^2 k) instead of O(n^4).
    """
    n = shape.n
    bg = _box_grid(shape, boxes)
    R, C = line_box_counts(bg)
    v = np.asarray(v)
    vec = v.ndim == 1
    V = v.reshape(4, n, n, -1)
    rc, rs, cs, bs = V[0], V[1], V[2], V[3]
    rs_i, cs_j, bs_l = rs.sum(axis=1), cs.sum(axis=1), bs.sum(axis=1)  # (n, k) row sums
    out = np.empty(V.shape, dtype=np.result_type(v, np.int64))
    out[0] = n * rc + rs_i[:, None] + cs_j[None, :] + bs_l[bg]
    # box sums of rc: (n_boxes, k)
    rc_box = np.zeros((n, V.shape[-1]), dtype=out.dtype)
    np.add.at(rc_box, bg.ravel(), rc.reshape(n * n, -1))
    out[1] = rc.sum(axis=1)[:, None] + n * rs + cs.sum(axis=0)[None, :] + np.einsum("il,lkx->ikx", R, bs)
    out[2] = rc.sum(axis=0)[:, None] + rs.sum(axis=0)[None, :] + n * cs + np.einsum("jl,lkx->jkx", C, bs)
    out[3] = (
        rc_box[:, None, :]
        + np.einsum("il,ikx->lkx", R, rs)
        + np.einsum("jl,jkx->lkx", C, cs)
        + n * bs
    )
    out = out.reshape(4 * n * n, -1)
    return out[:, 0] if vec else out


@dataclass(frozen=True, eq=False)
class RestrictedSystem:
    """W_S and M_S for a partial Sudoku S."""

    S: PartialSudoku
    edges: np.ndarray  # global edge indices of E(G_S)
    tiles: np.ndarray  # global tile indices of T(G_S)
    W_S: sp.csr_matrix
    M_S: sp.csr_matrix

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.M_S @ x


def build_restricted(S: PartialSudoku) -> RestrictedSystem:
    mask = edge_mask(S)
    edges = np.flatnonzero(mask)
    tiles = np.flatnonzero(available_tile_mask(S, mask))
    W = build_W(S.shape, None if S.boxes is None else S.box_grid)
    W_S = W[edges][:, tiles].tocsr()
    M_S = (W_S @ W_S.T).tocsr()
    return RestrictedSystem(S, edges, tiles, W_S, M_S)


class RankResult(NamedTuple):
    rank: int
    nullity: int
    mode: str
    ill_conditioned: bool = False


def exact_rank(matrix) -> int:
    """Rank over Q via python-flint (integer or Fraction entries)."""
    import flint

    A = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
    if A.size == 0:
        return 0
    if A.dtype.kind in "iub":
        return flint.fmpz_mat(A.astype(np.int64).tolist()).rank()
    rows = [[flint.fmpq(x.numerator, x.denominator) if hasattr(x, "denominator") else flint.fmpq(int(x))
             for x in r] for r in A.tolist()]
    return flint.fmpq_mat(rows).rank()


def rank_and_nullity(matrix, mode: str = "exact", tol: float = 1e-9) -> RankResult:
    """Rank and nullity (columns minus rank).

    ``mode="exact"`` works over Q; ``mode="numeric"`` thresholds singular
    values at ``tol * sigma_max`` and flags ill-conditioning when some
    singular value lies within a factor 100 of the threshold.
    """
    A = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
    ncols = A.shape[1]
    if mode in ("exact", "exact_rational"):
        r = exact_rank(A)
        return RankResult(r, ncols - r, "exact")
    if mode != "numeric":
        raise ValueError(f"unknown mode {mode!r}")
    if A.size == 0:
        return RankResult(0, ncols, "numeric")
    s = np.linalg.svd(A.astype(float), compute_uv=False)
    thresh = tol * s[0]
    r = int((s > thresh).sum())
    near = bool(np.any((s > thresh / 100) & (s < thresh * 100)))
    if near:
        warnings.warn("singular values cluster near the rank threshold; numeric rank is unreliable",
                      RuntimeWarning, stacklevel=2)
    return RankResult(r, ncols - r, "numeric", near)


def rank_formula(shape: SudokuShape) -> int:
    h, w, n = shape.h, shape.w, shape.n
    return n**3 - (n - 1) ** 3 + (n - 1) * (h - 1) * (w - 1)


def nullity_formula(shape: SudokuShape) -> int:
    h, w, n = shape.h, shape.w, shape.n
    return 3 * n + (h + w) * (n - 1)


def export_triplets(matrix, fh: TextIO) -> int:
    """Write nonzero entries as ``row col value`` lines (0-based); returns the count."""
    A = sp.coo_matrix(matrix)
    order = np.lexsort((A.col, A.row))
    for r, c, v in zip(A.row[order], A.col[order], A.data[order]):
        fh.write(f"{r} {c} {v}\n")
    return int(A.nnz)
