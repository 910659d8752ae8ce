"""Kernel and eigenvectors of M, eigenspace projectors, and the generalized inverse.

M has eigenvalues 0, n, 2n, 3n, 4n.  The projectors lie in the adjacency
algebra; they are obtained either by Lagrange interpolation in M (exact,
cheap) or from explicit eigenbases as V (V^T V)^{-1} V^T followed by
sampling one entry per relation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
import sympy

from .algebra import (
    H_SYM,
    NUM_RELATIONS,
    W_SYM,
    AlgebraElement,
    algebra_multiply,
    element_infinity_norm,
    express_M,
    matrix_to_element,
    section_norms,
)
from .core import SudokuShape
from .incidence import apply_M, nullity_formula

PRIME = 2**31 - 1


# --- vector helpers -----------------------------------------------------------------


class _Vec:
    """Builds 4n^2 edge vectors section by section (0-based coordinates)."""

    def __init__(self, shape: SudokuShape):
        self.shape = shape
        self.n = shape.n

    def zero(self) -> np.ndarray:
        return np.zeros((4, self.n, self.n), dtype=np.int64)

    def box(self, p: int, q: int) -> int:
        """Box index of row bundle p, column bundle q."""
        return self.shape.h * p + q

    def row_bundle(self, p: int) -> range:
        h = self.shape.h
        return range(h * p, h * (p + 1))

    def col_bundle(self, q: int) -> range:
        w = self.shape.w
        return range(w * q, w * (q + 1))

    def boxes_in_row_bundle(self, p: int) -> list[int]:
        return [self.box(p, q) for q in range(self.shape.h)]

    def boxes_in_col_bundle(self, q: int) -> list[int]:
        return [self.box(p, q) for p in range(self.shape.w)]

    def box_cells(self, l: int) -> tuple[np.ndarray, np.ndarray]:  # noqa: E741
        h, w = self.shape.h, self.shape.w
        p, q = divmod(l, h)
        ii, jj = np.meshgrid(np.arange(h * p, h * (p + 1)), np.arange(w * q, w * (q + 1)), indexing="ij")
        return ii.ravel(), jj.ravel()


def _diff(a: int, b: int, n: int) -> np.ndarray:
    v = np.zeros(n, dtype=np.int64)
    v[a], v[b] = 1, -1
    return v


def _all_diffs(n: int) -> list[np.ndarray]:
    """e_0 - e_i, spanning the sum-zero vectors."""
    return [_diff(0, i, n) for i in range(1, n)]


def _bundle_diffs(n: int, size: int) -> list[np.ndarray]:
    """Consecutive differences within blocks of ``size``: span of within-bundle differences."""
    return [_diff(i, i + 1, n) for i in range(n - 1) if i // size == (i + 1) // size]


def select_independent(vectors: Sequence[np.ndarray], limit: Optional[int] = None) -> list[int]:
    """Indices of a greedily chosen independent subset (first-come order).

    Works modulo a large prime; independence mod p implies independence over Q.
    """
    import flint

    if not vectors:
        return []
    A = np.stack(vectors, axis=1) % PRIME  # columns are the vectors
    mat = flint.nmod_mat(A.astype(np.int64).tolist(), PRIME)
    rref, rank = mat.rref()
    rows = np.array([[int(x) for x in r] for r in rref.tolist()[:rank]], dtype=np.int64)
    pivots = [int(np.flatnonzero(r)[0]) for r in rows]
    return pivots if limit is None else pivots[:limit]


# --- kernel -----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class KernelBasis:
    shape: SudokuShape
    vectors: np.ndarray  # (count, 4n^2) int64
    families: tuple[str, ...]  # "A", "B", "C" per vector

    def __len__(self):
        return len(self.vectors)


def kernel_generators(shape: SudokuShape) -> list[tuple[str, np.ndarray]]:
    """All kernel vectors of types (A), (B), (C) before pruning."""
    n, h, w = shape.n, shape.h, shape.w
    V = _Vec(shape)
    out: list[tuple[str, np.ndarray]] = []
    for i in range(n):  # row: columns used = symbols used
        v = V.zero()
        v[0, i, :], v[1, i, :] = 1, -1
        out.append(("A", v))
    for j in range(n):  # column
        v = V.zero()
        v[2, j, :], v[0, :, j] = 1, -1
        out.append(("A", v))
    for k in range(n):  # symbol
        v = V.zero()
        v[1, :, k], v[2, :, k] = 1, -1
        out.append(("A", v))
    for l in range(n):  # noqa: E741 box: cells filled = symbols used
        v = V.zero()
        ii, jj = V.box_cells(l)
        v[0, ii, jj] = 1
        v[3, l, :] = -1
        out.append(("B", v))
    for p in range(w):  # row bundles
        for k in range(n):
            v = V.zero()
            v[1, list(V.row_bundle(p)), k] = 1
            v[3, V.boxes_in_row_bundle(p), k] = -1
            out.append(("C", v))
    for q in range(h):  # column bundles
        for k in range(n):
            v = V.zero()
            v[2, list(V.col_bundle(q)), k] = 1
            v[3, V.boxes_in_col_bundle(q), k] = -1
            out.append(("C", v))
    return [(f, v.ravel()) for f, v in out]


@lru_cache(maxsize=16)
def kernel_basis(shape: SudokuShape) -> KernelBasis:
    gens = kernel_generators(shape)
    keep = select_independent([v for _, v in gens])
    expected = nullity_formula(shape)
    if len(keep) != expected:
        raise RuntimeError(f"kernel basis has {len(keep)} vectors, expected {expected}")
    return KernelBasis(shape, np.stack([gens[t][1] for t in keep]), tuple(gens[t][0] for t in keep))


# --- eigenvectors -------------------------------------------------------------------------


def eigenspace_dimension(shape: SudokuShape, j: int) -> int:
    h, w, n = shape.h, shape.w, shape.n
    return {
        0: nullity_formula(shape),
        1: 4 * n * n - (2 * n - 3) * (h + w) - 5 * n - 1,
        2: (n - 3) * (h + w - 1) + 2 * n,
        3: n + h + w - 3,
        4: 1,
    }[j]


def eigenvector_generators(shape: SudokuShape, j: int) -> list[tuple[str, np.ndarray]]:
    """Spanning sets of +-1/0 vectors for each variety of eigenvalue j*n."""
    n, h, w = shape.n, shape.h, shape.w
    V = _Vec(shape)
    D = _all_diffs(n)
    Wr = _bundle_diffs(n, h)  # rows in a common bundle
    Wc = _bundle_diffs(n, w)  # columns in a common stack
    rb_pairs = [(0, p) for p in range(1, w)]  # row bundles
    cb_pairs = [(0, q) for q in range(1, h)]  # column bundles
    rects = [(p, q) for p in range(1, w) for q in range(1, h)]
    out: list[tuple[str, np.ndarray]] = []

    def add(tag, v):
        out.append((tag, v.ravel()))

    def rect_vec(p, q):
        b = np.zeros(n, dtype=np.int64)
        b[V.box(0, 0)], b[V.box(0, q)], b[V.box(p, 0)], b[V.box(p, q)] = 1, -1, -1, 1
        return b

    def bundle_vec(pair, members):
        v = np.zeros(n, dtype=np.int64)
        v[list(members(pair[0]))] = 1
        v[list(members(pair[1]))] = -1
        return v

    if j == 1:
        for dr in Wr:
            for dc in D:
                v = V.zero(); v[0] = np.outer(dr, dc); add("A", v)
        for dr in D:
            for dc in Wc:
                v = V.zero(); v[0] = np.outer(dr, dc); add("A", v)
        for dr in Wr:
            for ds in D:
                v = V.zero(); v[1] = np.outer(dr, ds); add("B", v)
        for dc in Wc:
            for ds in D:
                v = V.zero(); v[2] = np.outer(dc, ds); add("B", v)
        for p, q in rects:
            for ds in D:
                v = V.zero(); v[3] = np.outer(rect_vec(p, q), ds); add("C", v)
    elif j == 2:
        ones = np.ones(n, dtype=np.int64)
        for dr in Wr:
            v = V.zero(); v[0] = np.outer(dr, ones); v[1] = np.outer(dr, ones); add("A", v)
        for dc in Wc:
            v = V.zero(); v[0] = np.outer(ones, dc); v[2] = np.outer(dc, ones); add("A", v)
        for pair in rb_pairs:
            r = bundle_vec(pair, V.row_bundle)
            b = bundle_vec(pair, V.boxes_in_row_bundle)
            for ds in D:
                v = V.zero(); v[1] = np.outer(r, ds); v[3] = np.outer(b, ds); add("B", v)
        for pair in cb_pairs:
            c = bundle_vec(pair, V.col_bundle)
            b = bundle_vec(pair, V.boxes_in_col_bundle)
            for ds in D:
                v = V.zero(); v[2] = np.outer(c, ds); v[3] = np.outer(b, ds); add("B", v)
        for p, q in rects:
            b = rect_vec(p, q)
            v = V.zero()
            v[3] = np.outer(b, ones)
            for l in np.flatnonzero(b):  # noqa: E741
                ii, jj = V.box_cells(int(l))
                v[0, ii, jj] = b[l]
            add("C", v)
    elif j == 3:
        for ds in D:
            v = V.zero(); v[1] = ds[None, :]; v[2] = ds[None, :]; v[3] = ds[None, :]; add("A", v)
        for pair in rb_pairs:
            r = bundle_vec(pair, V.row_bundle)
            b = bundle_vec(pair, V.boxes_in_row_bundle)
            v = V.zero(); v[0] = r[:, None]; v[1] = r[:, None]; v[3] = b[:, None]; add("B", v)
        for pair in cb_pairs:
            c = bundle_vec(pair, V.col_bundle)
            b = bundle_vec(pair, V.boxes_in_col_bundle)
            v = V.zero(); v[0] = c[None, :]; v[2] = c[:, None]; v[3] = b[:, None]; add("B", v)
    elif j == 4:
        add("J", np.ones((4, n, n), dtype=np.int64))
    elif j == 0:
        return kernel_generators(shape)
    else:
        raise ValueError(f"eigenvalue index must be in 0..4, got {j}")
    return out


@lru_cache(maxsize=32)
def eigenvectors(shape: SudokuShape, j: int) -> np.ndarray:
    """Independent eigenvectors for eigenvalue j*n, as rows of an int64 array."""
    if j == 0:
        return kernel_basis(shape).vectors
    gens = [v for _, v in eigenvector_generators(shape, j)]
    keep = select_independent(gens)
    expected = eigenspace_dimension(shape, j)
    if len(keep) != expected:
        raise RuntimeError(f"eigenspace {j} basis has {len(keep)} vectors, expected {expected}")
    return np.stack([gens[t] for t in keep])


# --- projectors and the generalized inverse --------------------------------------------------


@dataclass(frozen=True)
class ProjectorSet:
    shape: SudokuShape
    E: tuple[AlgebraElement, ...]  # E_0 (= K) .. E_4

    @property
    def K(self) -> AlgebraElement:
        return self.E[0]

    def __getitem__(self, j: int) -> AlgebraElement:
        return self.E[j]


def _interpolation_projectors(shape: SudokuShape) -> tuple[AlgebraElement, ...]:
    n = shape.n
    M = express_M(shape)
    I = AlgebraElement.identity(shape)
    out = []
    for j in range(5):
        E = I
        for i in range(5):
            if i != j:
                factor = (M - I.scale(i * n)).scale(Fraction(1, (j - i) * n))
                E = algebra_multiply(E, factor)
        out.append(E)
    return tuple(out)


def _eigenbasis_projector(shape: SudokuShape, j: int) -> AlgebraElement:
    import flint

    V = eigenvectors(shape, j).T
    Vq = flint.fmpq_mat(V.tolist())
    G = Vq.transpose() * Vq
    P = Vq * G.inv() * Vq.transpose()
    from .algebra import canonical_pairs

    cp = canonical_pairs(shape)
    coeffs = []
    for x, z in cp:
        c = P[int(x), int(z)]
        coeffs.append(Fraction(int(c.p), int(c.q)))
    return AlgebraElement(tuple(coeffs), shape)


@lru_cache(maxsize=16)
def projectors(shape: SudokuShape, method: str = "interpolation") -> ProjectorSet:
    """E_0..E_4 as algebra elements.

    ``method="interpolation"`` uses E_j = prod_{i != j} (M - i n I) / ((j - i) n);
    ``method="eigenbasis"`` forms V (V^T V)^{-1} V^T from explicit eigenvectors
    (exact rationals) and samples one entry per relation.
    """
    if method == "interpolation":
        return ProjectorSet(shape, _interpolation_projectors(shape))
    if method == "eigenbasis":
        return ProjectorSet(shape, tuple(_eigenbasis_projector(shape, j) for j in range(5)))
    raise ValueError(f"unknown projector method {method!r}")


def generalized_inverse(shape: SudokuShape, x=Fraction(3, 2)) -> AlgebraElement:
    """(1/n)(x K + sum_j E_j / j), the inverse of M + (n/x) K."""
    x = Fraction(x)
    if x == 0:
        raise ValueError("x must be nonzero")
    E = projectors(shape).E
    n = shape.n
    acc = E[0].scale(x)
    for j in range(1, 5):
        acc = acc + E[j].scale(Fraction(1, j))
    return acc.scale(Fraction(1, n))


def shifted_matrix(shape: SudokuShape, eta=None) -> AlgebraElement:
    """A = M + eta K (default eta = 2n/3)."""
    eta = Fraction(2 * shape.n, 3) if eta is None else Fraction(eta)
    return express_M(shape) + projectors(shape).K.scale(eta)


def eta_to_x(shape: SudokuShape, eta) -> Fraction:
    return Fraction(shape.n) / Fraction(eta)


# Coefficients of 9 n^3 A^{-1} + (5/16) J at x = 3/2, keyed by 0-based table
# position (relation id minus one).  Missing positions are 0.
def _scaled_inverse_table():
    h, w = H_SYM, W_SYM
    n = h * w
    R = sympy.Rational
    t: dict[int, sympy.Expr] = {}

    def put(keys, val):
        for k in keys:
            t[k] = val

    put([0], 9 * n**2 + h + w)
    put([1, 3, 4], h + w)
    put([2, 5, 16, 18, 38, 42, 46, 50], w)
    put([6, 7, 32, 34, 39, 43, 54, 58], h)
    put([9, 12], -R(9, 2) * n + w + 1)
    put([10, 13], w + 1)
    put([11, 14, 23, 26, 28, 30], sympy.Integer(1))
    put([15], 9 * n**2 + n + w)
    put([17], n + w)
    put([19, 35, 47, 51, 55, 59], n)
    put([21, 24], -R(9, 2) * n + h + 1)
    put([22, 25], h + 1)
    put([27, 29], -R(7, 2) * n + 1)
    put([31], 9 * n**2 + n + h)
    put([33], n + h)
    put([37, 41], -R(9, 2) * n + h + w)
    put([45, 49], -R(9, 2) * n * w + n + w)
    put([53, 57], -R(9, 2) * n * h + n + h)
    put([61], 9 * n**2 + n + h + w - 1)
    put([62], h + w - 1)
    put([63], n + w - 1)
    put([64], w - 1)
    put([65], n + h - 1)
    put([66], h - 1)
    put([67], n - 1)
    put([68], sympy.Integer(-1))
    return t


SCALED_INVERSE_TABLE: dict[int, sympy.Expr] = _scaled_inverse_table()


def inverse_from_table(shape: Optional[SudokuShape] = None) -> AlgebraElement:
    """A^{-1} at x = 3/2 rebuilt from the tabulated coefficients of 9n^3 A^{-1} + (5/16) J."""
    n = H_SYM * W_SYM
    coeffs = [
        (SCALED_INVERSE_TABLE.get(t, sympy.Integer(0)) - sympy.Rational(5, 16)) / (9 * n**3)
        for t in range(NUM_RELATIONS)
    ]
    el = AlgebraElement(tuple(coeffs))
    return el if shape is None else el.at(shape)


# --- norms -----------------------------------------------------------------------------------


def norm_functions(x) -> tuple:
    """The three piecewise-linear section profiles f_1, f_2, f_3 of n ||A^{-1}|| at parameter x.

    Works for Fraction / int (exact) and float arguments.
    """
    F = Fraction if isinstance(x, (int, Fraction)) else float

    def t(a, b, c):  # |x/a - b/c|
        return abs(x / a - F(b) / c)

    f1 = 3 * t(2, 3, 4) + 4 * t(6, 5, 36) + 2 * t(12, 7, 144) + 2 * t(12, 13, 144) \
        + 2 * t(3, 11, 18) + 3 * t(2, 1, 4) + 1
    f2 = 2 * t(2, 3, 4) + 4 * t(6, 5, 36) + 2 * t(12, 7, 144) + 2 * t(12, 13, 144) \
        + t(3, 11, 18) + t(3, 1, 9) + 2 * t(2, 1, 4) + 1
    f3 = 3 * t(2, 3, 4) + t(4, 25, 48) + 6 * t(6, 5, 36) + 3 * t(12, 13, 144) \
        + 3 * t(3, 11, 18) + 3 * t(2, 1, 4) + 1
    return f1, f2, f3


def a_inverse_norm_closed_form(shape: SudokuShape) -> Fraction:
    h, w, n = shape.h, shape.w, shape.n
    return (Fraction(15, 4 * n) - Fraction(7 * (h + w), 8 * n**2) - Fraction(4, 9 * n**2)
            + Fraction(31 * (h + w) - 21, 72 * n**3))


@dataclass(frozen=True)
class InverseNorm:
    closed_form: Fraction
    computed: Fraction

    @property
    def agree(self) -> bool:
        return self.closed_form == self.computed


def a_inverse_norm(shape: SudokuShape, x=Fraction(3, 2)) -> InverseNorm:
    """||A^{-1}||_inf from the closed form and from the algebra element."""
    return InverseNorm(a_inverse_norm_closed_form(shape),
                       element_infinity_norm(generalized_inverse(shape, x)))


def k_norm(shape: SudokuShape) -> Fraction:
    return element_infinity_norm(projectors(shape).K)


def inverse_section_norms(shape: SudokuShape, x=Fraction(3, 2)) -> dict[str, Fraction]:
    return section_norms(generalized_inverse(shape, x))


# --- matrix-free operators -------------------------------------------------------------------


def _lagrange_poly(values: dict[int, Fraction]) -> list[Fraction]:
    """Coefficients (low to high) of the polynomial through (t, values[t])."""
    pts = sorted(values)
    coeffs = [Fraction(0)] * len(pts)
    for a in pts:
        basis = [Fraction(1)]
        denom = Fraction(1)
        for b in pts:
            if b == a:
                continue
            basis = [Fraction(0)] + basis  # multiply by t
            for i in range(len(basis) - 1):
                basis[i] -= b * basis[i + 1]
            denom *= a - b
        for i, c in enumerate(basis):
            coeffs[i] += values[a] * c / denom
    return coeffs


def spectral_operator(shape: SudokuShape, values: dict[int, Fraction],
                      boxes: Optional[np.ndarray] = None) -> Callable[[np.ndarray], np.ndarray]:
    """v -> p(M/n) v where p(j) = values[j] on eigenvalue j n (j = 0..4)."""
    n = shape.n
    coeffs = [float(c) for c in _lagrange_poly(values)]

    def op(v: np.ndarray) -> np.ndarray:
        acc = coeffs[-1] * np.asarray(v, dtype=float)
        for c in reversed(coeffs[:-1]):
            acc = apply_M(shape, acc, boxes) / n + c * v
        return acc

    return op


def inverse_operator(shape: SudokuShape, x=Fraction(3, 2)):
    n = shape.n
    vals = {0: Fraction(x) / n}
    vals.update({j: Fraction(1, j * n) for j in range(1, 5)})
    return spectral_operator(shape, vals)


def kernel_operator(shape: SudokuShape):
    return spectral_operator(shape, {0: Fraction(1), 1: Fraction(0), 2: Fraction(0),
                                     3: Fraction(0), 4: Fraction(0)})
